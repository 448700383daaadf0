#pragma once

#include <array>
#include <complex>
#include <vector>

#include "speckle/errors.hpp"
#include "speckle/fft.hpp"
#include "speckle/medium.hpp"
#include "speckle/moments.hpp"

namespace spk::oracle {

struct OdeSolution {
    std::vector<double> z;
    std::vector<cplx> a, b, c, d;
    double error_estimate = 0.0;
    int steps = 0;
};

// Integrates the (a, b, c, d) system from (0, b_init, 0, 0) and samples it at
// the requested depths (z_end is always included).
OdeSolution integrate_coefficient_odes(double z_end, double omega, const TrParams& p, double b_init,
                                       const std::vector<double>& samples = {}, double rtol = 1e-12);

struct WaveSetup {
    double omega0 = 1.0;
    double c_speed = 1.0;
    double rho0 = 1.0;  // only used by the element-scale variant
};

// A(z, xi, zeta, 0) by adaptive 2D quadrature in x.
cplx exact_A_omega0(double z, Vec2 xi, Vec2 zeta, const MediumModel& m, Variant scope,
                    const WaveSetup& w, double abs_tol = 1e-8);

struct XiGrid {
    int n = 64;
    double dxi = 0.3;
    double coord(int i) const { return (i - n / 2) * dxi; }
};

struct AField {
    XiGrid grid;
    Vec2 zeta;
    double omega = 0.0;
    double z = 0.0;
    CVec values;  // row-major, values[i * n + j] at (xi_x = coord(j), xi_y = coord(i))
    bool l1_bound_ok = true;
    double worst_bound_ratio = 0.0;
    int steps = 0;
};

// Same quantity as exact_A_omega0, sampled on a whole xi grid with a fine
// trapezoid rule in x.
AField exact_A_omega0_grid(double z, const XiGrid& g, Vec2 zeta, const MediumModel& m, Variant scope,
                           const WaveSetup& w);

// Closed form of the strongly scattering limit at Omega = 0, point value and on a grid.
cplx strong_A_omega0(double z, Vec2 xi, Vec2 zeta, double d_coeff, Variant scope, const WaveSetup& w);
AField strong_A_omega0_grid(double z, const XiGrid& g, Vec2 zeta, double d_coeff, Variant scope,
                            const WaveSetup& w);

struct SolverOptions {
    int n_steps = 0;  // 0 picks from the scattering rate
    bool check_resolution = true;
    double resolution_tol = 0.01;
};

AField solve_A_equation(double z, const XiGrid& g, Vec2 zeta, double omega, const MediumModel& m,
                        Variant b_init_variant, const WaveSetup& w, const SolverOptions& opt = {});

double l1_norm(const AField& f);
double l1_distance(const AField& a, const AField& b);

struct IdentityResult {
    double value = 0.0;
    double tail_change = 0.0;  // |I(60) - I(40)|
};

IdentityResult psi_d_integral_identity();

// (A1, A2, A3); cached after the first call.
std::array<double, 3> quadrature_constants();

}  // namespace spk::oracle
