#pragma once

#include <complex>
#include <string>
#include <utility>

#include "speckle/errors.hpp"
#include "speckle/medium.hpp"

namespace spk {

using cplx = std::complex<double>;

// Physical parameters shared by all closed-form moment formulas.
struct TrParams {
    double omega0 = 1.0;
    double c_speed = 1.0;
    double big_l = 1.0;
    double d_coeff = 1.0;   // D
    double c_origin = 1.0;  // C(0)
    double r0 = 1.0;
    double rho0 = 1.0;

    double a_r() const { return d_coeff * big_l * big_l * big_l / (12.0 * r0 * r0); }
    double a_rho() const { return d_coeff * big_l * big_l * big_l / (12.0 * rho0 * rho0); }
    double ell_sca() const { return 8.0 * c_speed * c_speed / (omega0 * omega0 * c_origin); }
};

enum class Variant { LargeElements, ElementScaleMedium };

struct RegimeSpec {
    Variant variant = Variant::LargeElements;
    bool strongly_scattering = true;
};

struct PsiValues {
    cplx a, b, c, d;
};

// Psi_{a,b,c,d}(s) with u = e^{-i pi/4} s. t0 = 0 gives the large-element forms.
PsiValues psi(double s, cplx t0 = 0.0);

cplx t0_of(double omega, const TrParams& p);
double s_of(double z, double omega, const TrParams& p);

struct MomentCoefficients {
    cplx a, b, c, d, e, f, g, h;
    double k = 0.0;  // K(z)
};

MomentCoefficients coefficients(double z, double omega, const TrParams& p, const RegimeSpec& r);

// Expansions in D Omega z^2 / c0 for small and large offsets (a, b, c, d only).
MomentCoefficients coefficients_small_offset(double z, double omega, const TrParams& p);
MomentCoefficients coefficients_large_offset(double z, double omega, const TrParams& p);

cplx mean_refocused_harmonic(Vec2 x_off, double omega, const TrParams& p, const RegimeSpec& r);
// D Omega L^2 / c0 << 1 and >> 1 forms of the strongly scattering mean
cplx mean_refocused_small_offset(Vec2 x_off, const TrParams& p, const RegimeSpec& r);
cplx mean_refocused_large_offset(Vec2 x_off, double omega, const TrParams& p);
double mean_radius_squared(const TrParams& p, const RegimeSpec& r);

cplx mean_refocused_weak(Vec2 x_off, Vec2 y_off, double omega, const TrParams& p,
                         const RegimeSpec& r);

double variance_harmonic(const TrParams& p);

enum class SnrBranch { LargeElements = 1, Intermediate = 2, ManyElements = 3 };
enum class BandRegime { Narrow, Intermediate, Wide, Harmonic };

struct SnrReport {
    double snr = 0.0;
    SnrBranch branch = SnrBranch::LargeElements;
    BandRegime band = BandRegime::Harmonic;
    double a_r = 0.0;    // D L^3 / (12 r0^2)
    double a_rho = 0.0;  // D L^3 / (12 rho0^2)
    double beta = 0.0;   // D B L^2 / (4 c0), or D Omega L^2 / c0 for harmonic reports
    double asymptote = 0.0;
    std::string describe() const;
};

SnrBranch snr_branch(const TrParams& p);

SnrReport snr_harmonic(double omega, const TrParams& p);

std::pair<double, double> hat_a_hat_h(double s);

SnrReport snr_broadband(double bandwidth, const TrParams& p);

cplx mean_refocused_broadband(double t, Vec2 x_off, double bandwidth, const TrParams& p,
                              const RegimeSpec& r);

struct MemoryBandwidth {
    double omega_spec = 0.0;
    double b_c = 0.0;
    double refocus_threshold = 0.0;
};

MemoryBandwidth memory_bandwidth(const TrParams& p);

}  // namespace spk
