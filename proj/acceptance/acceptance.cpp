// Acceptance run: one PASS/FAIL line per criterion. Always exits 0 unless
// something throws; a FAIL line is a result, not a crash.
//
//   acceptance            all criteria
//   acceptance 1 7 10     a subset

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "speckle/config.hpp"
#include "speckle/experiment.hpp"
#include "speckle/moments.hpp"
#include "speckle/propagator.hpp"
#include "speckle/thread_pool.hpp"
#include "speckle/validation.hpp"

#ifndef SPECKLE_PRESETS
#define SPECKLE_PRESETS "presets"
#endif

using namespace spk;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

ExperimentConfig preset(const std::string& name) {
    return parse_config(std::string(SPECKLE_PRESETS) + "/" + name + ".json");
}

TrParams params_of(const TimeReversalConfig& t) {
    TrParams p;
    p.omega0 = t.omega0;
    p.c_speed = t.c_speed;
    p.big_l = t.big_l;
    p.d_coeff = diffusion_coefficient(t.medium);
    p.c_origin = covariance_at_origin(t.medium);
    p.r0 = t.trm.r0();
    p.rho0 = t.trm.rho0;
    return p;
}

bool all_pass(const std::vector<CheckRow>& rows) {
    for (const auto& r : rows)
        if (!r.pass) return false;
    return !rows.empty();
}

double worst(const std::vector<CheckRow>& rows) {
    double w = 0.0;
    for (const auto& r : rows) w = std::max(w, std::abs(r.value - r.target));
    return w;
}

// least squares slope and intercept
std::pair<double, double> linfit(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {b, (sy - b * sx) / n};
}

Outcome c1() {
    const auto t0 = Clock::now();
    const auto rows = check_psi_vs_ode();
    const double s = since(t0);
    return {all_pass(rows) && s < 1.0,
            fmt("Psi closed forms vs ODE, both initial values: max rel err %.2e (<= 1e-8), %.2f s", worst(rows), s)};
}

Outcome c2() {
    const auto t0 = Clock::now();
    const auto rows = check_quadrature_constants();
    const double s = since(t0);
    std::string d = "quadrature constants:";
    for (const auto& r : rows) d += fmt(" %s %.4f (published %.2f)", r.check.c_str(), r.value, r.target);
    d += fmt(", %.2f s", s);
    return {all_pass(rows) && s < 1.0, d};
}

Outcome c3() {
    const auto rows = check_psi_d_identity();
    return {all_pass(rows), fmt("Psi_d identity integral %.15f (1 +- 1e-6)", rows.at(0).value)};
}

Outcome c4() {
    const auto rows = check_expansions();
    return {all_pass(rows), fmt("expansions: small offset worst rel %.2e, large offset worst rel %.2e (<= 0.05)",
                                rows.at(0).value, rows.at(1).value)};
}

Outcome c5() {
    const auto rows = check_snr_b0();
    return {all_pass(rows), fmt("broadband SNR at B -> 0 vs closed form: worst rel %.2e (<= 1e-6)", rows.at(0).value)};
}

Outcome c6() {
    const auto t0 = Clock::now();
    const auto rows = check_a_equation();
    const double s = since(t0);
    return {all_pass(rows) && s < 60.0,
            fmt("A-equation: L1 rel err vs exact %.2e (<= 1e-3), scaled-medium errors monotone: %s, %.1f s",
                rows.at(0).value, rows.back().pass ? "yes" : "no", s)};
}

Outcome c7() {
    const GridSpec g{256, 64.0};
    const auto m = MediumModel::gaussian(0.01, 1.0);
    const double k = 10.0, big_l = 25.6;
    const int slabs = 256;
    ComplexField f(g, k);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) f.at(i, j) = fresnel_gaussian({g.coord(j), g.coord(i)}, 3.0, k, 0.0);
    const double n0 = f.l2_norm();
    const auto screens = ScreenSet::generate(make_screen_filter(m, g, big_l / slabs), {5, 0}, slabs);
    PropagateOptions opt;
    opt.check_leak = false;
    const auto out = propagate(f, screens, opt);
    const double drift = std::abs(out.l2_norm() - n0) / n0;

    // homogeneous Gaussian beam
    ComplexField h(g, k);
    const double w = 2.0, z = 20.0;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) h.at(i, j) = fresnel_gaussian({g.coord(j), g.coord(i)}, w, k, 0.0);
    Stepper st(g, k, z / 64);
    for (int s = 0; s < 64; ++s) st.diffract(h, z / 64);
    double peak = 0.0, err = 0.0;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            const cplx ref = fresnel_gaussian({g.coord(j), g.coord(i)}, w, k, z);
            peak = std::max(peak, std::abs(ref));
            err = std::max(err, std::abs(h.at(i, j) - ref));
        }
    err /= peak;
    return {drift <= 1e-10 && err <= 1e-6,
            fmt("unitarity drift %.2e over 256 slabs on 256^2 (<= 1e-10); Fresnel error %.2e (<= 1e-6)", drift, err)};
}

Outcome c8() {
    const auto cfg = preset("strong_sweep").tr;
    const auto& g = cfg.grid;
    const double k = cfg.omega0 / cfg.c_speed;
    const int slabs = cfg.plan.n_slabs, nr = 1000;
    const auto filt = make_screen_filter(cfg.medium, g, cfg.plan.dz());
    Stepper st(g, k, cfg.plan.dz());
    std::vector<cplx> mean(slabs, 0.0);
    for (int r = 0; r < nr; ++r) {
        const auto screens = ScreenSet::generate(filt, {cfg.master_seed, static_cast<std::uint64_t>(r)}, slabs);
        ComplexField f(g, k);
        for (auto& v : f.values) v = 1.0;
        for (int s = 0; s < slabs; ++s) {
            st.step(f, screens.screen(s));
            cplx acc = 0.0;
            for (const auto& v : f.values) acc += v;
            mean[s] += acc / static_cast<double>(g.size());
        }
    }
    // ln |E u(z)| = -z / ell_sca, fitted through the origin
    double szz = 0.0, szy = 0.0;
    for (int s = 0; s < slabs; ++s) {
        const double z = (s + 1) * cfg.plan.dz();
        szz += z * z;
        szy += z * std::log(std::abs(mean[s]) / nr);
    }
    const double rate = -szy / szz;
    const double expect = 1.0 / derived_scales(cfg.medium, cfg.omega0, cfg.c_speed, cfg.big_l).ell_sca;
    const double rel = std::abs(rate - expect) / expect;
    return {rel <= 0.05, fmt("mean-field decay rate %.5f vs 1/ell_sca %.5f (rel %.3f, <= 0.05), %d realizations, 128^2",
                             rate, expect, rel, nr)};
}

Outcome c9() {
    const auto cfg = preset("strong_sweep").tr;
    const auto& g = cfg.grid;
    const double k = cfg.omega0 / cfg.c_speed;
    const int nr = 1000, lags = 8;
    const auto filt = make_screen_filter(cfg.medium, g, cfg.plan.dz());
    PropagateOptions opt;
    opt.check_leak = false;
    opt.absorber_fraction = cfg.absorber_fraction;
    const ComplexField src = make_source(g, {cfg.source, cfg.source_sigma, 1.0, cfg.spectral_source}, k);
    ScreenSet flat = ScreenSet::generate(filt, {0, 0}, cfg.plan.n_slabs);
    for (auto& s : flat.slabs) std::fill(s.begin(), s.end(), 0.0);
    const ComplexField u0 = propagate(src, flat, opt);

    // E[u(x + xi) conj u(x)] / (u0(x + xi) conj u0(x)) over a central box, lags along both axes
    const int half = static_cast<int>(std::lround(3.0 / g.spacing()));
    const int c = g.n / 2;
    std::vector<cplx> gamma(lags + 1, 0.0);
    std::vector<int> count(lags + 1, 0);
    for (int r = 0; r < nr; ++r) {
        const auto screens = ScreenSet::generate(filt, {cfg.master_seed, static_cast<std::uint64_t>(r)}, cfg.plan.n_slabs);
        const auto u = propagate(src, screens, opt);
        for (int i = c - half; i <= c + half; ++i)
            for (int j = c - half; j <= c + half; ++j)
                for (int l = 0; l <= lags; ++l) {
                    const cplx a = u.at(i, j + l) * std::conj(u.at(i, j)) / (u0.at(i, j + l) * std::conj(u0.at(i, j)));
                    const cplx b = u.at(i + l, j) * std::conj(u.at(i, j)) / (u0.at(i + l, j) * std::conj(u0.at(i, j)));
                    gamma[l] += a + b;
                    count[l] += 2;
                }
    }
    // ln(Gamma(xi)/Gamma(0)) = -xi^2 / Xc^2 over lags with Gamma above 0.2
    double sxx = 0.0, sxy = 0.0;
    const double g0 = (gamma[0] / static_cast<double>(count[0])).real();
    for (int l = 1; l <= lags; ++l) {
        const double v = (gamma[l] / static_cast<double>(count[l])).real() / g0;
        if (v < 0.2) break;
        const double xi2 = std::pow(l * g.spacing(), 2);
        sxx += xi2 * xi2;
        sxy += xi2 * std::log(v);
    }
    const double xc = std::sqrt(-sxx / sxy);
    const double d = diffusion_coefficient(cfg.medium);
    const double printed = derived_scales(cfg.medium, cfg.omega0, cfg.c_speed, cfg.big_l).xc_of_l;
    const double second_moment = std::sqrt(48.0) * cfg.c_speed / (cfg.omega0 * std::sqrt(d * cfg.big_l));
    const double rel = std::abs(xc - printed) / printed;
    return {rel <= 0.10,
            fmt("coherence radius %.4f vs X_c(L) %.4f (ratio %.3f, <= 10%% off); the second-moment "
                "radius sqrt(48) c0/(omega0 sqrt(DL)) = %.4f is off by %.3f; %d realizations",
                xc, printed, xc / printed, second_moment, std::abs(xc - second_moment) / second_moment, nr)};
}

Outcome c10() {
    const auto cfg = preset("strong_harmonic").tr;
    const TrParams p = params_of(cfg);
    const auto s = run_harmonic(cfg, thread_pool_executor(default_jobs()));
    const double mean = std::abs(s.mean()), mean_t = 1.0 / (1.0 + p.a_r());
    const double snr = s.snr_raw(), snr_t = snr_harmonic(0.0, p).snr;
    const double em = std::abs(mean - mean_t) / mean_t, es = std::abs(snr - snr_t) / snr_t;
    return {em <= 0.10 && es <= 0.25 && s.failures == 0,
            fmt("harmonic TR at Omega = 0: |mean| %.4f +- %.4f vs %.4f (rel %.3f, <= 0.10); snr %.3f +- %.3f vs %.3f "
                "(rel %.3f, <= 0.25); A_R %.3f, %d realizations",
                mean, s.mean_stderr(), mean_t, em, snr, s.snr_stderr(), snr_t, es, p.a_r(), s.count())};
}

Outcome c11() {
    const auto ec = preset("strong_sweep");
    const auto& cfg = ec.tr;
    const TrParams p = params_of(cfg);
    const auto rows = memory_sweep(cfg, ec.offsets, thread_pool_executor(default_jobs()));
    const double unit = cfg.c_speed / (p.d_coeff * cfg.big_l * cfg.big_l);
    std::vector<double> x, y, y_eps;
    for (const auto& r : rows) {
        if (r.omega_offset / unit < 10.0) continue;  // large-offset range
        // prefactor 2 / (1 + i L c0 / (Omega r0^2)) divided out
        const double pre = std::abs(1.0 + cplx(0.0, cfg.big_l * cfg.c_speed / (r.omega_offset * p.r0 * p.r0)));
        x.push_back(std::sqrt(r.omega_offset));
        y.push_back(std::log(std::abs(r.mean_peak) * pre));
        y_eps.push_back(y.back() + r.omega_offset * r.omega_offset * p.c_origin * cfg.big_l /
                                       (2.0 * cfg.c_speed * cfg.c_speed));
    }
    const double expect = -std::sqrt(p.d_coeff / (8.0 * cfg.c_speed)) * cfg.big_l;
    const double slope = linfit(x, y).first, slope_eps = linfit(x, y_eps).first;
    const double rel = std::abs(slope - expect) / std::abs(expect);

    // variance against the pooled value, in units of each entry's standard error
    double wsum = 0.0, vsum = 0.0, zmax = 0.0;
    for (const auto& r : rows) {
        const double w = 1.0 / (r.variance_stderr * r.variance_stderr);
        wsum += w;
        vsum += w * r.variance;
    }
    const double pooled = vsum / wsum;
    for (const auto& r : rows) zmax = std::max(zmax, std::abs(r.variance - pooled) / r.variance_stderr);

    std::string table;
    for (const auto& r : rows)
        table += fmt(" [beta %.0f |m| %.3f var %.3f]", r.omega_offset / unit, std::abs(r.mean_peak), r.variance);
    return {rel <= 0.15 && zmax <= 3.0,
            fmt("memory sweep: slope %.3f vs %.3f (rel %.3f, <= 0.15); slope with the finite-frequency phase "
                "factor exp(-Omega^2 C(0) L/2c0^2) removed %.3f; variance max deviation %.2f sigma (<= 3);%s",
                slope, expect, rel, slope_eps, zmax, table.c_str())};
}

Outcome c12() {
    auto wide = preset("strong_broadband").tr;
    const TrParams p = params_of(wide);
    const double bc = derived_scales(wide.medium, wide.omega0, wide.c_speed, wide.big_l).b_c;
    wide.bandwidth = 10.0 * bc;
    wide.n_freq = min_frequency_nodes(wide.bandwidth, bc);
    wide.plan = PropagationPlan::for_distance(wide.big_l, wide.medium, wide.grid, wide.max_frequency(), wide.c_speed);
    auto narrow = wide;
    narrow.bandwidth = 0.1 * bc;
    narrow.n_freq = min_frequency_nodes(narrow.bandwidth, bc);
    narrow.plan =
        PropagationPlan::for_distance(narrow.big_l, narrow.medium, narrow.grid, narrow.max_frequency(), narrow.c_speed);
    const auto pf = thread_pool_executor(default_jobs());
    const auto bn = run_broadband(narrow, pf);
    const auto bw = run_broadband(wide, pf);
    const double sn = bn.peak.snr_raw(), sw = bw.peak.snr_raw();
    const double tn = snr_broadband(narrow.bandwidth, p).snr, tw = snr_broadband(wide.bandwidth, p).snr;
    const double ratio = sw / sn;
    auto within2 = [](double a, double b) { return a > 0.0 && b > 0.0 && std::max(a / b, b / a) <= 2.0; };
    const bool fit = within2(sn, tn) && within2(sw, tw);
    return {ratio >= 3.0 && fit,
            fmt("broadband: snr(10 B_c) %.3f +- %.3f, snr(0.1 B_c) %.3f +- %.3f, ratio %.2f (>= 3); analytic %.3f and "
                "%.3f (ratio %.2f), MC/analytic %.2f and %.2f (within x2: %s); %d realizations, %d nodes",
                sw, bw.peak.snr_stderr(), sn, bn.peak.snr_stderr(), ratio, tw, tn, tw / tn, sw / tw, sn / tn,
                fit ? "yes" : "no", bw.peak.count(), wide.n_freq)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::function<Outcome()>> all = {c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12};
    std::set<int> pick;
    for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
    int passed = 0, ran = 0;
    for (int i = 0; i < static_cast<int>(all.size()); ++i) {
        if (!pick.empty() && !pick.count(i + 1)) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = all[i]();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        ++ran;
        passed += o.pass ? 1 : 0;
        std::printf("%s %2d  %s  [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, o.detail.c_str(), since(t0));
        std::fflush(stdout);
    }
    std::printf("%d of %d criteria pass\n", passed, ran);
    return 0;
}
