#pragma once

#include <string>
#include <vector>

namespace spk {

// One row of the oracle report. pass <=> |value - target| <= tolerance.
struct CheckRow {
    std::string check;
    double value = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    double seconds = 0.0;
    std::string note;
};

CheckRow make_row(std::string check, double value, double target, double tolerance, std::string note = {});

// closed-form Psi / coefficients against the ODE system, 20 points, both initial values
std::vector<CheckRow> check_psi_vs_ode();
// A1, A2, A3 by quadrature against the published values
std::vector<CheckRow> check_quadrature_constants();
std::vector<CheckRow> check_psi_d_identity();
// small- and large-offset expansions of a, b, c, d
std::vector<CheckRow> check_expansions();
// broadband SNR as B -> 0 against (1 + A_rho) / (1 + A_R), 3x3 grid
std::vector<CheckRow> check_snr_b0();
// A-equation solver against the exact zero-offset solution and the strongly scattering limit
std::vector<CheckRow> check_a_equation();

std::vector<CheckRow> oracle_suite();

void write_report_csv(const std::string& path, const std::vector<CheckRow>& rows,
                      const std::vector<std::string>& header_comment = {});

}  // namespace spk
