#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "speckle/errors.hpp"
#include "speckle/medium.hpp"
#include "speckle/propagator.hpp"

namespace spk {

struct TrmSpec {
    double big_r_m = 1.0;
    double rho0 = 0.1;

    double r0() const;
    double n_elem() const;
    // integrating the window and both element kernels over x_m leaves
    // kappa * exp(-|x'|^2/r0^2 - |y'|^2/4rho0^2)
    double kappa() const;
    void validate() const;
};

enum class TrMode { Harmonic, Broadband };

struct TimeReversalConfig {
    double omega0 = 1.0;
    double c_speed = 1.0;
    double big_l = 1.0;
    TrMode mode = TrMode::Harmonic;
    // harmonic: record at omega0 - Omega, emit at omega0 + Omega
    double omega_offset = 0.0;
    // broadband: Gaussian pulse of this bandwidth, n_freq Gauss-Legendre nodes on omega0 +- 3B
    double bandwidth = 0.0;
    int n_freq = 0;
    TrmSpec trm;
    Vec2 source;
    MediumModel medium;
    GridSpec grid;
    PropagationPlan plan;
    int n_realizations = 1;
    std::uint64_t master_seed = 0;
    // point source regularization; 0 selects the default (2 spacings, real-space Gaussian)
    double source_sigma = 0.0;
    bool spectral_source = false;
    double absorber_fraction = 0.0;
    bool check_leak = true;
    // evaluate the full refocused map by forward emission (harmonic only); the
    // peak at x = y is always computed through the recorded fields
    bool full_map = false;

    double max_frequency() const;
    void validate() const;
};

// conservative floor on the number of frequency nodes
int min_frequency_nodes(double bandwidth, double b_c);

struct RecordedField {
    ComplexField field;  // smoothed record in the mirror plane
    double omega = 0.0;
    ScreenStream stream;
};

struct RefocusMap {
    ComplexField field;  // u_tr over the observation plane z = L
    Vec2 source;
    double omega = 0.0;
};

// One realization of the medium with its screens kept for every frequency.
struct Realization {
    ScreenSet screens;
};

Realization make_realization(const TimeReversalConfig& cfg, const ScreenFilter& f, std::uint64_t index);
ScreenFilter make_filter(const TimeReversalConfig& cfg);

RecordedField record(const TimeReversalConfig& cfg, const Realization& r, double omega_tilde);
RecordedField record(const TimeReversalConfig& cfg, std::uint64_t realization);
RefocusMap emit_conjugate(const RecordedField& rec, const TimeReversalConfig& cfg, double omega,
                          const Realization& r);
RefocusMap emit_conjugate(const RecordedField& rec, const TimeReversalConfig& cfg, double omega,
                          std::uint64_t realization);
// u_tr(y; y) from two records: integral of the mirror window times rec(omega) conj(rec(omega~))
cplx peak_from_records(const RecordedField& emit_side, const RecordedField& rec_side,
                       const TimeReversalConfig& cfg);

// Per-realization samples keyed by realization index; merging is a set union,
// so results do not depend on the order realizations finish.
struct EnsembleStats {
    std::map<std::uint64_t, cplx> samples;
    int failures = 0;
    // optional map moments, accumulated in fixed realization blocks
    std::optional<CVec> map_sum;
    std::optional<RVec> map_sum_sq;
    GridSpec map_grid;
    int map_count = 0;

    void add(std::uint64_t realization, cplx value);
    void merge(const EnsembleStats& o);

    int count() const { return static_cast<int>(samples.size()); }
    cplx mean() const;
    double variance() const;       // unbiased, NaN if count < 2
    double mean_stderr() const;    // standard error of the mean (modulus)
    double variance_stderr() const;
    // |mean|^2 / variance; nullopt when the variance is not positive or its
    // relative standard error is 50% or more
    std::optional<double> snr() const;
    double snr_stderr() const;  // jackknife
    double snr_raw() const;     // |mean|^2 / variance without the guard
};

// Executor hook: runs body(i) for i in [0, n). Default runs sequentially.
using ParallelFor = std::function<void(int, const std::function<void(int)>&)>;
ParallelFor sequential_executor();

EnsembleStats run_harmonic(const TimeReversalConfig& cfg, const ParallelFor& pf = {});

struct BroadbandResult {
    EnsembleStats peak;                 // t = 0, x = y
    std::vector<double> times;
    std::vector<cplx> mean_trace;       // complex envelope at x = y
    std::vector<double> nodes;          // frequency nodes
    std::vector<double> weights;        // sum to 1
};

BroadbandResult run_broadband(const TimeReversalConfig& cfg, const ParallelFor& pf = {});

struct MemoryRow {
    double omega_offset = 0.0;
    cplx mean_peak;
    double variance = 0.0;
    std::optional<double> snr;
    double snr_stderr = 0.0;
    double mean_stderr = 0.0;
    double variance_stderr = 0.0;
    int n_real = 0;
};

std::vector<MemoryRow> memory_sweep(const TimeReversalConfig& cfg, const std::vector<double>& offsets,
                                    const ParallelFor& pf = {});

MemoryRow summarize(double omega_offset, const EnsembleStats& s);

// CSV outputs. header_comment lines are written first, each prefixed with '#'.
void write_harmonic_stats_csv(const std::string& path, const std::vector<MemoryRow>& rows,
                              const std::vector<std::string>& header_comment = {});
void write_refocus_map_csv(const std::string& path, const EnsembleStats& s,
                           const std::vector<std::string>& header_comment = {});
void write_trace_csv(const std::string& path, const BroadbandResult& b,
                     const std::vector<std::string>& header_comment = {});

}  // namespace spk
