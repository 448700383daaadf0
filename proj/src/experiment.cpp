#include "speckle/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>

#include "speckle/kernels.hpp"
#include "speckle/numerics.hpp"

namespace spk {

namespace {
constexpr double pi = 3.14159265358979323846;
constexpr int block_size = 16;

PropagateOptions prop_options(const TimeReversalConfig& cfg, Direction d) {
    PropagateOptions o;
    o.direction = d;
    o.absorber_fraction = cfg.absorber_fraction;
    o.check_leak = cfg.check_leak;
    return o;
}

SourceSpec point_source(const TimeReversalConfig& cfg) {
    SourceSpec s;
    s.center = cfg.source;
    s.sigma_src = cfg.source_sigma > 0.0 ? cfg.source_sigma : 2.0 * cfg.grid.spacing();
    s.spectral = cfg.spectral_source;
    return s;
}

// exp(-|x|^2 / R_m^2) on the grid
RVec mirror_window(const TimeReversalConfig& cfg) {
    const GridSpec& g = cfg.grid;
    RVec w(g.size());
    const double r2 = cfg.trm.big_r_m * cfg.trm.big_r_m;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            const double x = g.coord(j), y = g.coord(i);
            w[static_cast<std::size_t>(i) * g.n + j] = std::exp(-(x * x + y * y) / r2);
        }
    return w;
}

struct Failures {
    std::mutex mu;
    int count = 0;
    std::string first;
    void note(const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        if (count++ == 0) first = e.what();
    }
};

void check_failures(const Failures& f, int n) {
    if (f.count > 0 && 100 * f.count > n)
        throw RealizationFailure(std::to_string(f.count) + " of " + std::to_string(n) +
                                 " realizations failed; first: " + f.first);
}

int n_blocks(int n) { return (n + block_size - 1) / block_size; }

}  // namespace

double TrmSpec::r0() const { return std::sqrt(big_r_m * big_r_m + rho0 * rho0); }
double TrmSpec::n_elem() const { return r0() * r0() / (rho0 * rho0); }
double TrmSpec::kappa() const {
    return big_r_m * big_r_m / (4.0 * pi * rho0 * rho0 * r0() * r0());
}

void TrmSpec::validate() const {
    if (!(big_r_m > 0.0)) throw std::invalid_argument("mirror radius R_m must be > 0");
    if (!(rho0 > 0.0)) throw std::invalid_argument("element radius rho0 must be > 0");
}

double TimeReversalConfig::max_frequency() const {
    if (mode == TrMode::Broadband) return omega0 + 3.0 * bandwidth;
    return omega0 + std::abs(omega_offset);
}

int min_frequency_nodes(double bandwidth, double b_c) {
    if (bandwidth <= 0.0) return 1;
    return 8 * static_cast<int>(std::ceil(bandwidth / b_c * (1.0 - 1e-12)));
}

void TimeReversalConfig::validate() const {
    if (!(omega0 > 0.0) || !(c_speed > 0.0) || !(big_l > 0.0))
        throw std::invalid_argument("omega0, c0 and L must be > 0");
    trm.validate();
    medium.validate();
    grid.validate();
    if (trm.rho0 < 2.0 * grid.spacing() * (1.0 - 1e-12))
        throw GridTooCoarse("grid spacing " + std::to_string(grid.spacing()) +
                            " does not resolve rho0 = " + std::to_string(trm.rho0));
    if (std::abs(plan.big_l - big_l) > 1e-12 * big_l)
        throw std::invalid_argument("propagation plan length differs from L");
    plan.validate(medium, grid, max_frequency(), c_speed);
    if (n_realizations < 1) throw std::invalid_argument("n_realizations must be >= 1");
    if (mode == TrMode::Harmonic && std::abs(omega_offset) >= omega0)
        throw std::invalid_argument("frequency offset must be below omega0");
    if (mode == TrMode::Broadband) {
        if (bandwidth < 0.0) throw std::invalid_argument("bandwidth must be >= 0");
        if (omega0 - 3.0 * bandwidth <= 0.0)
            throw std::invalid_argument("band omega0 +- 3B reaches zero frequency");
        if (bandwidth > 0.0) {
            const double bc = derived_scales(medium, omega0, c_speed, big_l).b_c;
            const int need = min_frequency_nodes(bandwidth, bc);
            if (n_freq < need)
                throw UnderresolvedBand("n_freq = " + std::to_string(n_freq) + " below the floor " +
                                        std::to_string(need) + " for B/b_c = " +
                                        std::to_string(bandwidth / bc));
        }
    }
}

ScreenFilter make_filter(const TimeReversalConfig& cfg) {
    return make_screen_filter(cfg.medium, cfg.grid, cfg.plan.dz());
}

Realization make_realization(const TimeReversalConfig& cfg, const ScreenFilter& f, std::uint64_t index) {
    return {ScreenSet::generate(f, {cfg.master_seed, index}, cfg.plan.n_slabs)};
}

RecordedField record(const TimeReversalConfig& cfg, const Realization& r, double omega_tilde) {
    // the record at x_m is G from y evaluated at x_m; by reciprocity that is the
    // source at y propagated through the screens in reverse order
    ComplexField f = make_source(cfg.grid, point_source(cfg), omega_tilde / cfg.c_speed);
    f = propagate(std::move(f), r.screens, prop_options(cfg, Direction::Reverse));
    gaussian_smooth(f, cfg.trm.rho0);
    f.z = 0.0;
    return {std::move(f), omega_tilde, r.screens.stream};
}

RecordedField record(const TimeReversalConfig& cfg, std::uint64_t realization) {
    const Realization r = make_realization(cfg, make_filter(cfg), realization);
    return record(cfg, r, cfg.omega0 - cfg.omega_offset);
}

RefocusMap emit_conjugate(const RecordedField& rec, const TimeReversalConfig& cfg, double omega,
                          const Realization& r) {
    if (rec.stream.master_seed != r.screens.stream.master_seed ||
        rec.stream.realization != r.screens.stream.realization)
        throw SeedMismatch("record and emission use different media (" +
                           std::to_string(rec.stream.master_seed) + "/" +
                           std::to_string(rec.stream.realization) + " vs " +
                           std::to_string(r.screens.stream.master_seed) + "/" +
                           std::to_string(r.screens.stream.realization) + ")");
    if (!(rec.field.grid == cfg.grid)) throw GridMismatch("record grid differs from config grid");
    const RVec w = mirror_window(cfg);
    ComplexField s(cfg.grid, omega / cfg.c_speed);
    for (std::size_t i = 0; i < s.values.size(); ++i) s.values[i] = w[i] * std::conj(rec.field.values[i]);
    gaussian_smooth(s, cfg.trm.rho0);
    s = propagate(std::move(s), r.screens, prop_options(cfg, Direction::Forward));
    const double inv = 1.0 / cfg.trm.kappa();
    for (auto& v : s.values) v *= inv;
    return {std::move(s), cfg.source, omega};
}

RefocusMap emit_conjugate(const RecordedField& rec, const TimeReversalConfig& cfg, double omega,
                          std::uint64_t realization) {
    const Realization r = make_realization(cfg, make_filter(cfg), realization);
    return emit_conjugate(rec, cfg, omega, r);
}

cplx peak_from_records(const RecordedField& emit_side, const RecordedField& rec_side,
                       const TimeReversalConfig& cfg) {
    if (emit_side.stream.realization != rec_side.stream.realization ||
        emit_side.stream.master_seed != rec_side.stream.master_seed)
        throw SeedMismatch("peak from records of different media");
    const RVec w = mirror_window(cfg);
    const double h = cfg.grid.spacing();
    const cplx s = kernels::wdot(w.data(), rec_side.field.values.data(), emit_side.field.values.data(),
                                 w.size());
    return s * (h * h / cfg.trm.kappa());
}

void EnsembleStats::add(std::uint64_t realization, cplx value) { samples[realization] = value; }

void EnsembleStats::merge(const EnsembleStats& o) {
    for (const auto& [k, v] : o.samples) samples[k] = v;
    failures += o.failures;
}

cplx EnsembleStats::mean() const {
    cplx s = 0.0;
    for (const auto& kv : samples) s += kv.second;
    return samples.empty() ? cplx(std::nan(""), std::nan("")) : s / static_cast<double>(samples.size());
}

double EnsembleStats::variance() const {
    const int n = count();
    if (n < 2) return std::nan("");
    const cplx m = mean();
    double s = 0.0;
    for (const auto& kv : samples) s += std::norm(kv.second - m);
    return s / (n - 1);
}

double EnsembleStats::mean_stderr() const { return std::sqrt(variance() / count()); }

double EnsembleStats::variance_stderr() const {
    const int n = count();
    if (n < 3) return std::nan("");
    const cplx m = mean();
    double m4 = 0.0;
    for (const auto& kv : samples) m4 += std::pow(std::norm(kv.second - m), 2);
    m4 /= n;
    const double v = variance();
    return std::sqrt(std::max(0.0, m4 - v * v) / n);
}

double EnsembleStats::snr_raw() const { return std::norm(mean()) / variance(); }

std::optional<double> EnsembleStats::snr() const {
    const double v = variance();
    if (!(v > 0.0)) return std::nullopt;
    const double se = variance_stderr();
    if (!(se / v < 0.5)) return std::nullopt;
    return std::norm(mean()) / v;
}

double EnsembleStats::snr_stderr() const {
    const int n = count();
    if (n < 4) return std::nan("");
    cplx s1 = 0.0;
    double s2 = 0.0;
    for (const auto& kv : samples) {
        s1 += kv.second;
        s2 += std::norm(kv.second);
    }
    std::vector<double> loo;
    loo.reserve(n);
    for (const auto& kv : samples) {
        const cplx m = (s1 - kv.second) / static_cast<double>(n - 1);
        const double v = ((s2 - std::norm(kv.second)) - (n - 1) * std::norm(m)) / (n - 2);
        loo.push_back(std::norm(m) / v);
    }
    double mean = 0.0;
    for (double x : loo) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : loo) ss += (x - mean) * (x - mean);
    return std::sqrt((n - 1.0) / n * ss);
}

ParallelFor sequential_executor() {
    return [](int n, const std::function<void(int)>& body) {
        for (int i = 0; i < n; ++i) body(i);
    };
}

namespace {

// Runs per-realization work in fixed blocks; body returns false on a failed
// realization (already noted).
template <class Body>
void for_realizations(const TimeReversalConfig& cfg, const ParallelFor& pf, Failures& fail, Body&& body) {
    const ParallelFor exec = pf ? pf : sequential_executor();
    const ScreenFilter filt = make_filter(cfg);
    const int n = cfg.n_realizations;
    exec(n_blocks(n), [&](int b) {
        const int lo = b * block_size, hi = std::min(n, lo + block_size);
        for (int r = lo; r < hi; ++r) {
            try {
                const Realization real = make_realization(cfg, filt, static_cast<std::uint64_t>(r));
                body(b, r, real);
            } catch (const Error& e) {
                fail.note(e);
            } catch (const std::invalid_argument& e) {
                fail.note(e);
            }
        }
    });
    check_failures(fail, n);
}

}  // namespace

EnsembleStats run_harmonic(const TimeReversalConfig& cfg, const ParallelFor& pf) {
    cfg.validate();
    if (cfg.mode != TrMode::Harmonic) throw std::invalid_argument("run_harmonic needs harmonic mode");
    const double om = cfg.omega0 + cfg.omega_offset, omt = cfg.omega0 - cfg.omega_offset;
    const int nb = n_blocks(cfg.n_realizations);
    std::vector<EnsembleStats> parts(nb);
    std::vector<CVec> sums(cfg.full_map ? nb : 0);
    std::vector<RVec> sq(cfg.full_map ? nb : 0);
    Failures fail;
    for_realizations(cfg, pf, fail, [&](int b, int r, const Realization& real) {
        const RecordedField rec = record(cfg, real, omt);
        const RecordedField emit = cfg.omega_offset == 0.0 ? rec : record(cfg, real, om);
        const cplx peak = peak_from_records(emit, rec, cfg);
        if (cfg.full_map) {
            const RefocusMap map = emit_conjugate(rec, cfg, om, real);
            if (sums[b].empty()) {
                sums[b].assign(cfg.grid.size(), 0.0);
                sq[b].assign(cfg.grid.size(), 0.0);
            }
            for (std::size_t i = 0; i < map.field.values.size(); ++i) {
                sums[b][i] += map.field.values[i];
                sq[b][i] += std::norm(map.field.values[i]);
            }
        }
        parts[b].add(static_cast<std::uint64_t>(r), peak);
    });
    EnsembleStats out;
    for (const auto& p : parts) out.merge(p);
    out.failures = fail.count;
    if (cfg.full_map) {
        out.map_grid = cfg.grid;
        out.map_sum = CVec(cfg.grid.size(), 0.0);
        out.map_sum_sq = RVec(cfg.grid.size(), 0.0);
        for (int b = 0; b < nb; ++b) {
            if (sums[b].empty()) continue;
            for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
                (*out.map_sum)[i] += sums[b][i];
                (*out.map_sum_sq)[i] += sq[b][i];
            }
        }
        out.map_count = out.count();
    }
    return out;
}

BroadbandResult run_broadband(const TimeReversalConfig& cfg, const ParallelFor& pf) {
    cfg.validate();
    if (cfg.mode != TrMode::Broadband) throw std::invalid_argument("run_broadband needs broadband mode");
    BroadbandResult out;
    if (cfg.bandwidth == 0.0) {
        out.nodes = {cfg.omega0};
        out.weights = {1.0};
    } else {
        const auto gl = quad::gauss_legendre(cfg.n_freq);
        double total = 0.0;
        for (int j = 0; j < cfg.n_freq; ++j) {
            const double u = 3.0 * gl.x[j];  // in units of B
            out.nodes.push_back(cfg.omega0 + cfg.bandwidth * u);
            out.weights.push_back(gl.w[j] * std::exp(-0.5 * u * u));
            total += out.weights.back();
        }
        for (auto& w : out.weights) w /= total;
    }
    const int nf = static_cast<int>(out.nodes.size());
    const int nb = n_blocks(cfg.n_realizations);
    std::vector<EnsembleStats> parts(nb);
    std::vector<std::map<int, std::vector<cplx>>> node_vals(nb);
    Failures fail;
    for_realizations(cfg, pf, fail, [&](int b, int r, const Realization& real) {
        std::vector<cplx> vals(nf);
        cplx peak = 0.0;
        for (int j = 0; j < nf; ++j) {
            const RecordedField rec = record(cfg, real, out.nodes[j]);
            vals[j] = peak_from_records(rec, rec, cfg);
            peak += out.weights[j] * vals[j];
        }
        parts[b].add(static_cast<std::uint64_t>(r), peak);
        node_vals[b][r] = std::move(vals);
    });
    for (const auto& p : parts) out.peak.merge(p);
    out.peak.failures = fail.count;
    // mean envelope from the mean node values
    std::vector<cplx> node_mean(nf, 0.0);
    int cnt = 0;
    for (const auto& blk : node_vals)
        for (const auto& [r, v] : blk) {
            for (int j = 0; j < nf; ++j) node_mean[j] += v[j];
            ++cnt;
        }
    for (auto& v : node_mean) v /= std::max(1, cnt);
    const double tmax = cfg.bandwidth > 0.0 ? 3.0 / cfg.bandwidth : 0.0;
    const int nt = cfg.bandwidth > 0.0 ? 121 : 1;
    for (int i = 0; i < nt; ++i) {
        const double t = nt == 1 ? 0.0 : -tmax + 2.0 * tmax * i / (nt - 1);
        cplx e = 0.0;
        for (int j = 0; j < nf; ++j) {
            const double ph = -(out.nodes[j] - cfg.omega0) * t;
            e += out.weights[j] * node_mean[j] * cplx(std::cos(ph), std::sin(ph));
        }
        out.times.push_back(t);
        out.mean_trace.push_back(e);
    }
    return out;
}

MemoryRow summarize(double omega_offset, const EnsembleStats& s) {
    MemoryRow row;
    row.omega_offset = omega_offset;
    row.mean_peak = s.mean();
    row.variance = s.variance();
    row.snr = s.snr();
    row.snr_stderr = s.snr_stderr();
    row.mean_stderr = s.mean_stderr();
    row.variance_stderr = s.variance_stderr();
    row.n_real = s.count();
    return row;
}

std::vector<MemoryRow> memory_sweep(const TimeReversalConfig& cfg, const std::vector<double>& offsets,
                                    const ParallelFor& pf) {
    if (offsets.empty() || !std::is_sorted(offsets.begin(), offsets.end()) ||
        std::find(offsets.begin(), offsets.end(), 0.0) == offsets.end())
        throw std::invalid_argument("memory sweep offsets must be sorted and contain 0");
    TimeReversalConfig c = cfg;
    c.mode = TrMode::Harmonic;
    c.full_map = false;
    double widest = 0.0;
    for (double o : offsets) widest = std::max(widest, std::abs(o));
    c.omega_offset = widest;  // validates the plan at the highest frequency
    c.validate();
    const int no = static_cast<int>(offsets.size());
    const int nb = n_blocks(c.n_realizations);
    std::vector<std::vector<EnsembleStats>> parts(nb, std::vector<EnsembleStats>(no));
    Failures fail;
    for_realizations(c, pf, fail, [&](int b, int r, const Realization& real) {
        std::map<double, RecordedField> recs;
        auto get = [&](double om) -> const RecordedField& {
            auto it = recs.find(om);
            if (it == recs.end()) it = recs.emplace(om, record(c, real, om)).first;
            return it->second;
        };
        std::vector<cplx> peaks(no);
        for (int i = 0; i < no; ++i)
            peaks[i] = peak_from_records(get(c.omega0 + offsets[i]), get(c.omega0 - offsets[i]), c);
        for (int i = 0; i < no; ++i) parts[b][i].add(static_cast<std::uint64_t>(r), peaks[i]);
    });
    std::vector<MemoryRow> rows;
    for (int i = 0; i < no; ++i) {
        EnsembleStats s;
        for (int b = 0; b < nb; ++b) s.merge(parts[b][i]);
        s.failures = fail.count;
        rows.push_back(summarize(offsets[i], s));
    }
    return rows;
}

namespace {
std::ofstream open_csv(const std::string& path, const std::vector<std::string>& header) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << std::setprecision(17);
    for (const auto& h : header) os << "# " << h << "\n";
    return os;
}

std::string num(double v) {
    if (!std::isfinite(v)) return "nan";
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}
}  // namespace

void write_harmonic_stats_csv(const std::string& path, const std::vector<MemoryRow>& rows,
                              const std::vector<std::string>& header_comment) {
    auto os = open_csv(path, header_comment);
    os << "omega_offset,re_mean_peak,im_mean_peak,variance,snr,snr_stderr,n_real\n";
    for (const auto& r : rows)
        os << num(r.omega_offset) << "," << num(r.mean_peak.real()) << "," << num(r.mean_peak.imag())
           << "," << num(r.variance) << "," << (r.snr ? num(*r.snr) : std::string("nan")) << ","
           << num(r.snr_stderr) << "," << r.n_real << "\n";
}

void write_refocus_map_csv(const std::string& path, const EnsembleStats& s,
                           const std::vector<std::string>& header_comment) {
    if (!s.map_sum) throw std::invalid_argument("statistics carry no refocus map");
    auto os = open_csv(path, header_comment);
    os << "x,y,re_mean,im_mean,var\n";
    const GridSpec& g = s.map_grid;
    const double n = s.map_count;
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) {
            const std::size_t k = static_cast<std::size_t>(i) * g.n + j;
            const cplx m = (*s.map_sum)[k] / n;
            const double v = n > 1 ? ((*s.map_sum_sq)[k] - n * std::norm(m)) / (n - 1) : std::nan("");
            os << num(g.coord(j)) << "," << num(g.coord(i)) << "," << num(m.real()) << ","
               << num(m.imag()) << "," << num(v) << "\n";
        }
}

void write_trace_csv(const std::string& path, const BroadbandResult& b,
                     const std::vector<std::string>& header_comment) {
    auto os = open_csv(path, header_comment);
    os << "t,re_env,im_env\n";
    for (std::size_t i = 0; i < b.times.size(); ++i)
        os << num(b.times[i]) << "," << num(b.mean_trace[i].real()) << "," << num(b.mean_trace[i].imag())
           << "\n";
}

}  // namespace spk
