#pragma once

#include <iosfwd>
#include <string>

#include "speckle/config.hpp"

namespace spk {

enum ExitCode { ExitOk = 0, ExitUsage = 1, ExitValidation = 2, ExitRuntime = 3 };

struct RunOptions {
    std::string out_dir;  // resolved output directory
    int jobs = 1;
    bool dry_run = false;
    std::string command = "simulate";
};

// Prints derived scales and dimensionless groups for a parsed config.
void print_derived(std::ostream& os, const ExperimentConfig& cfg);

// Each returns an exit code; outputs go to opt.out_dir together with manifest.json.
int cmd_moments(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log);
int cmd_simulate(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log);
int cmd_sweep(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log);
int cmd_validate(const RunOptions& opt, std::ostream& log);

// {"error": kind, "message": ..., "violations": [...]} on one line
std::string error_report(const std::exception& e);

}  // namespace spk
