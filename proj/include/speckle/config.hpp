#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "speckle/errors.hpp"
#include "speckle/experiment.hpp"

namespace spk {

struct ParseError : Error {
    ParseError(const std::string& msg, int line, int column);
    const char* kind() const noexcept override { return "ParseError"; }
    int line = 0;
    int column = 0;
};

struct SchemaViolation {
    std::string field;       // dotted path, e.g. "trm.rho0"
    std::string constraint;  // what failed
};

struct SchemaError : Error {
    explicit SchemaError(std::vector<SchemaViolation> v);
    const char* kind() const noexcept override { return "SchemaError"; }
    std::vector<SchemaViolation> violations;
};

enum class ModeKind { Harmonic, Sweep, Broadband };

// Curve request for the moments subcommand.
struct MomentsRequest {
    double psi_s_max = 5.0;
    int psi_points = 101;
    std::vector<double> a_r = {1.0};              // D L^3 / 12 r0^2 panels
    std::vector<double> rho_ratios = {1.0, 10.0, 100.0};  // r0^2 / rho0^2
    double b_max = 100.0;  // in units of B_c
    int b_points = 101;
};

struct ExperimentConfig {
    TimeReversalConfig tr;
    ModeKind mode = ModeKind::Harmonic;
    std::vector<double> offsets;  // sweep mode
    std::string output_dir = "out";
    std::vector<std::string> formats = {"csv"};
    MomentsRequest moments;
    bool n_slabs_defaulted = false;
    std::string canonical;  // normalized JSON text the hash is taken over
    std::string hash;       // sha256 hex of canonical
};

// Throws ParseError or SchemaError (all violations collected).
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::string& path);

// --seed: replaces mc.master_seed and refreshes the canonical text and hash
void override_seed(ExperimentConfig& cfg, std::uint64_t seed);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

}  // namespace spk
