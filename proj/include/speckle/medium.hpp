#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "speckle/errors.hpp"
#include "speckle/fft.hpp"

namespace spk {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline double norm2(Vec2 v) { return v.x * v.x + v.y * v.y; }

struct GridSpec {
    int n = 128;
    double extent = 1.0;

    double spacing() const { return extent / n; }
    std::size_t size() const { return static_cast<std::size_t>(n) * n; }
    // physical coordinate of index i, centered so that index n/2 sits at 0
    double coord(int i) const { return (i - n / 2) * spacing(); }
    // angular wavenumber of FFT index i
    double wavenumber(int i) const;
    void validate() const;
    bool operator==(const GridSpec& o) const { return n == o.n && extent == o.extent; }
};

enum class CovarianceFamily { Gaussian, Tabulated };

// C(x) is the z-integrated transverse covariance of the driving Brownian field.
struct MediumModel {
    CovarianceFamily family = CovarianceFamily::Gaussian;
    double c0 = 1.0;  // C(0) for the Gaussian family
    double lc = 1.0;
    // Tabulated family: radial spectrum samples Chat(|k|), k ascending from 0,
    // linearly interpolated and zero beyond the last node.
    std::vector<double> table_k;
    std::vector<double> table_chat;

    static MediumModel gaussian(double c0, double lc);
    static MediumModel tabulated(std::vector<double> k, std::vector<double> chat, double lc);
    void validate() const;
};

double covariance(const MediumModel& m, Vec2 x);
double spectral_covariance(const MediumModel& m, Vec2 k);
double covariance_at_origin(const MediumModel& m);
double diffusion_coefficient(const MediumModel& m);

struct ScatteringScales {
    double ell_sca = 0.0;
    double ell_par = 0.0;
    double d_coeff = 0.0;
    double xc_of_l = 0.0;
    double omega_spec = 0.0;
    double b_c = 0.0;
    bool paraxial_flag = false;  // ell_par < ell_sca although lc >= wavelength
};

ScatteringScales derived_scales(const MediumModel& m, double omega0, double c_speed, double big_l);

// Identifies one realization of the medium. Screens are a pure function of
// (master_seed, realization, slab index).
struct ScreenStream {
    std::uint64_t master_seed = 0;
    std::uint64_t realization = 0;
};

struct PhaseScreen {
    RVec values;
    double dz = 0.0;
    GridSpec grid;
};

// One complex FFT provides two independent real screens; slab 2j and 2j+1
// share pair j.
std::array<PhaseScreen, 2> synthesize_screen_pair(const MediumModel& m, const GridSpec& grid,
                                                  double dz, const ScreenStream& stream,
                                                  std::uint64_t pair);
PhaseScreen synthesize_screen(const MediumModel& m, const GridSpec& grid, double dz,
                              const ScreenStream& stream, std::uint64_t slab = 0);

// Amplitude filter sqrt(dz Chat(kappa)) / extent on the FFT grid, reused across
// realizations. Modes far below the spectral peak are stored as zero.
struct ScreenFilter {
    GridSpec grid;
    double dz = 0.0;
    RVec amp;
    std::vector<std::uint32_t> active;  // linear indices with amp > 0
};

ScreenFilter make_screen_filter(const MediumModel& m, const GridSpec& grid, double dz);
std::array<PhaseScreen, 2> synthesize_screen_pair(const ScreenFilter& f, const ScreenStream& stream,
                                                  std::uint64_t pair);

}  // namespace spk
