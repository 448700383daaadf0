#include "speckle/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "speckle/moments.hpp"
#include "speckle/thread_pool.hpp"
#include "speckle/validation.hpp"

#ifndef SPECKLE_VERSION
#define SPECKLE_VERSION "unknown"
#endif

namespace spk {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

TrParams tr_params(const TimeReversalConfig& t) {
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

std::vector<std::string> header(const ExperimentConfig& cfg, const std::string& units) {
    return {"config sha256 " + cfg.hash, "speckle " + std::string(SPECKLE_VERSION), "units: " + units};
}

class Manifest {
public:
    Manifest(const RunOptions& opt, const std::string& hash) : opt_(opt), hash_(hash) {
        start_ = std::chrono::steady_clock::now();
        const std::time_t now = std::time(nullptr);
        std::tm tm{};
        gmtime_r(&now, &tm);
        std::ostringstream s;
        s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
        started_ = s.str();
    }

    std::string path(const std::string& name) {
        files_.push_back(name);
        return (fs::path(opt_.out_dir) / name).string();
    }

    void write(std::uint64_t seed, int n_real) const {
        json j;
        j["command"] = opt_.command;
        j["config_hash"] = hash_;
        j["code_version"] = SPECKLE_VERSION;
        j["master_seed"] = seed;
        j["n_realizations"] = n_real;
        j["jobs"] = opt_.jobs;
        j["started_utc"] = started_;
        j["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        json out = json::object();
        for (const auto& f : files_) out[f] = sha256_file((fs::path(opt_.out_dir) / f).string());
        j["outputs"] = out;
        std::ofstream os(fs::path(opt_.out_dir) / "manifest.json");
        os << j.dump(2) << "\n";
    }

private:
    RunOptions opt_;
    std::string hash_;
    std::string started_;
    std::chrono::steady_clock::time_point start_;
    std::vector<std::string> files_;
};

bool wants(const ExperimentConfig& cfg, const std::string& fmt) {
    return std::find(cfg.formats.begin(), cfg.formats.end(), fmt) != cfg.formats.end();
}

std::string num(double v) {
    if (!std::isfinite(v)) return "nan";
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

int run_sweep(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log) {
    Manifest man(opt, cfg.hash);
    const auto rows = memory_sweep(cfg.tr, cfg.offsets, thread_pool_executor(opt.jobs));
    write_harmonic_stats_csv(man.path("harmonic_stats.csv"), rows,
                             header(cfg, "omega_offset 1/time; amplitudes dimensionless (K0 = 1)"));
    for (const auto& r : rows)
        log << "Omega = " << r.omega_offset << "  |E u| = " << std::abs(r.mean_peak)
            << "  var = " << r.variance << "\n";
    man.write(cfg.tr.master_seed, cfg.tr.n_realizations);
    return ExitOk;
}

}  // namespace

void print_derived(std::ostream& os, const ExperimentConfig& cfg) {
    const auto& t = cfg.tr;
    const auto s = derived_scales(t.medium, t.omega0, t.c_speed, t.big_l);
    const TrParams p = tr_params(t);
    os << std::setprecision(6);
    os << "config sha256   " << cfg.hash << "\n";
    os << "ell_sca         " << s.ell_sca << "   L/ell_sca = " << t.big_l / s.ell_sca << "\n";
    os << "ell_par         " << s.ell_par << "   L/ell_par = " << t.big_l / s.ell_par
       << (s.paraxial_flag ? "   (flag: ell_par < ell_sca)" : "") << "\n";
    os << "D               " << s.d_coeff << "\n";
    os << "X_c(L)          " << s.xc_of_l << "\n";
    os << "Omega_spec      " << s.omega_spec << "\n";
    os << "B_c             " << s.b_c << "\n";
    os << "D L^3/12r0^2    " << p.a_r() << "\n";
    os << "D L^3/12rho0^2  " << p.a_rho() << "\n";
    if (cfg.mode == ModeKind::Broadband)
        os << "D B L^2/4c0     " << s.d_coeff * t.bandwidth * t.big_l * t.big_l / (4.0 * t.c_speed) << "\n";
    else if (cfg.mode == ModeKind::Sweep)
        os << "D Omega L^2/c0  max " << s.d_coeff * cfg.offsets.back() * t.big_l * t.big_l / t.c_speed << "\n";
    else
        os << "D Omega L^2/c0  " << s.d_coeff * t.omega_offset * t.big_l * t.big_l / t.c_speed << "\n";
    os << "r0, rho0        " << t.trm.r0() << ", " << t.trm.rho0 << "   lc/r0 = " << t.medium.lc / t.trm.r0()
       << "   lc/L = " << t.medium.lc / t.big_l << "\n";
    os << "grid            " << t.grid.n << "^2, h = " << t.grid.spacing() << "\n";
    os << "slabs           " << t.plan.n_slabs << (cfg.n_slabs_defaulted ? " (from dz cap)" : "")
       << ", dz = " << t.plan.dz() << "\n";
}

int cmd_moments(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log) {
    if (opt.dry_run) {
        print_derived(log, cfg);
        return ExitOk;
    }
    fs::create_directories(opt.out_dir);
    Manifest man(opt, cfg.hash);
    const auto& m = cfg.moments;
    {
        std::ofstream os(man.path("psi.csv"));
        for (const auto& h : header(cfg, "s dimensionless")) os << "# " << h << "\n";
        os << "s,re_psi_a,re_psi_b,re_psi_c,re_psi_d\n";
        for (int i = 0; i < m.psi_points; ++i) {
            const double s = m.psi_s_max * i / (m.psi_points - 1);
            const PsiValues v = psi(s);
            os << num(s) << "," << num(v.a.real()) << "," << num(v.b.real()) << "," << num(v.c.real()) << ","
               << num(v.d.real()) << "\n";
        }
    }
    {
        std::ofstream os(man.path("snr_broadband.csv"));
        for (const auto& h : header(cfg, "B in units of B_c = 4 c0/(D L^2); snr dimensionless")) os << "# " << h << "\n";
        os << "a_r,rho_ratio,b_over_bc,snr\n";
        for (double ar : m.a_r)
            for (double ratio : m.rho_ratios) {
                TrParams q;
                q.c_speed = 1.0;
                q.big_l = 1.0;
                q.d_coeff = 1.0;
                q.r0 = std::sqrt(1.0 / (12.0 * ar));
                q.rho0 = q.r0 / std::sqrt(ratio);
                const double bc = 4.0;
                for (int i = 0; i < m.b_points; ++i) {
                    const double b = m.b_max * i / (m.b_points - 1);
                    os << num(ar) << "," << num(ratio) << "," << num(b) << "," << num(snr_broadband(b * bc, q).snr)
                       << "\n";
                }
            }
    }
    man.write(cfg.tr.master_seed, 0);
    log << "wrote psi.csv and snr_broadband.csv to " << opt.out_dir << "\n";
    return ExitOk;
}

int cmd_simulate(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log) {
    if (opt.dry_run) {
        print_derived(log, cfg);
        return ExitOk;
    }
    fs::create_directories(opt.out_dir);
    if (cfg.mode == ModeKind::Sweep) return run_sweep(cfg, opt, log);
    Manifest man(opt, cfg.hash);
    const auto pf = thread_pool_executor(opt.jobs);
    const auto& t = cfg.tr;
    if (cfg.mode == ModeKind::Harmonic) {
        const EnsembleStats s = run_harmonic(t, pf);
        write_harmonic_stats_csv(man.path("harmonic_stats.csv"), {summarize(t.omega_offset, s)},
                                 header(cfg, "omega_offset 1/time; amplitudes dimensionless (K0 = 1)"));
        if (t.full_map) {
            write_refocus_map_csv(man.path("refocus_map.csv"), s, header(cfg, "x, y length; field dimensionless"));
            if (wants(cfg, "spkl")) {
                ComplexField f(t.grid, (t.omega0 + t.omega_offset) / t.c_speed, t.big_l);
                for (std::size_t i = 0; i < f.values.size(); ++i)
                    f.values[i] = (*s.map_sum)[i] / static_cast<double>(s.map_count);
                write_spkl(man.path("mean_map.spkl"), f);
            }
        }
        log << "mean peak " << s.mean() << "  variance " << s.variance();
        if (auto snr = s.snr()) log << "  snr " << *snr;
        else log << "  snr unavailable";
        log << "  (" << s.count() << " realizations, " << s.failures << " failed)\n";
    } else {
        const BroadbandResult b = run_broadband(t, pf);
        const MemoryRow row = summarize(0.0, b.peak);
        {
            std::ofstream os(man.path("broadband_stats.csv"));
            for (const auto& h : header(cfg, "bandwidth 1/time; amplitudes dimensionless")) os << "# " << h << "\n";
            os << "bandwidth,n_freq,re_mean_peak,im_mean_peak,variance,snr,snr_stderr,n_real\n";
            os << num(t.bandwidth) << "," << b.nodes.size() << "," << num(row.mean_peak.real()) << ","
               << num(row.mean_peak.imag()) << "," << num(row.variance) << ","
               << (row.snr ? num(*row.snr) : std::string("nan")) << "," << num(row.snr_stderr) << ","
               << row.n_real << "\n";
        }
        write_trace_csv(man.path("trace.csv"), b, header(cfg, "t time; envelope dimensionless, carrier removed"));
        log << "mean peak " << row.mean_peak << "  variance " << row.variance;
        if (row.snr) log << "  snr " << *row.snr;
        else log << "  snr unavailable";
        log << "\n";
    }
    if (wants(cfg, "spkl")) {
        const double om = cfg.mode == ModeKind::Harmonic ? t.omega0 - t.omega_offset : t.omega0;
        const Realization r = make_realization(t, make_filter(t), 0);
        write_spkl(man.path("record_r0.spkl"), record(t, r, om).field);
    }
    man.write(t.master_seed, t.n_realizations);
    return ExitOk;
}

int cmd_sweep(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log) {
    if (cfg.mode != ModeKind::Sweep)
        throw SchemaError(std::vector<SchemaViolation>{{"mode.offsets", "sweep needs a harmonic mode with an offsets list"}});
    if (opt.dry_run) {
        print_derived(log, cfg);
        return ExitOk;
    }
    fs::create_directories(opt.out_dir);
    return run_sweep(cfg, opt, log);
}

int cmd_validate(const RunOptions& opt, std::ostream& log) {
    const auto rows = oracle_suite();
    int failed = 0;
    for (const auto& r : rows) {
        log << (r.pass ? "PASS " : "FAIL ") << std::left << std::setw(28) << r.check << std::setprecision(8)
            << " value " << r.value << "  target " << r.target << "  tol " << r.tolerance;
        if (!r.note.empty()) log << "  [" << r.note << "]";
        log << "\n";
        failed += r.pass ? 0 : 1;
    }
    log << failed << " of " << rows.size() << " checks failed\n";
    if (!opt.dry_run) {
        fs::create_directories(opt.out_dir);
        RunOptions o = opt;
        o.command = "validate";
        Manifest man(o, "none");
        write_report_csv(man.path("validate.csv"), rows, {"speckle " + std::string(SPECKLE_VERSION)});
        man.write(0, 0);
    }
    return failed == 0 ? ExitOk : ExitValidation;
}

std::string error_report(const std::exception& e) {
    json j;
    if (const auto* se = dynamic_cast<const SchemaError*>(&e)) {
        j["error"] = "SchemaError";
        json v = json::array();
        for (const auto& x : se->violations) v.push_back({{"field", x.field}, {"constraint", x.constraint}});
        j["violations"] = v;
    } else if (const auto* pe = dynamic_cast<const ParseError*>(&e)) {
        j["error"] = "ParseError";
        j["line"] = pe->line;
        j["column"] = pe->column;
    } else if (const auto* ee = dynamic_cast<const Error*>(&e)) {
        j["error"] = ee->kind();
    } else {
        j["error"] = "RuntimeError";
    }
    j["message"] = e.what();
    return j.dump();
}

}  // namespace spk
