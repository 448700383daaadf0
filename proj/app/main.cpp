#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "speckle/commands.hpp"
#include "speckle/thread_pool.hpp"

using namespace spk;

int main(int argc, char** argv) {
    CLI::App app{"speckle: time reversal in random media, moments and Monte Carlo"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int jobs = default_jobs();
    bool dry = false;
    std::optional<std::uint64_t> seed;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", config_path, "experiment config (JSON)");
        if (needs_config) c->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (overrides output.directory; SPKL_OUT overrides both)");
        sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--dry-run", dry, "validate and print derived scales only");
        sub->add_option("--seed", seed, "override mc.master_seed");
    };
    auto* moments = app.add_subcommand("moments", "closed-form Psi and broadband SNR tables");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo time reversal per config mode");
    auto* sweep = app.add_subcommand("sweep", "frequency memory sweep over mode.offsets");
    auto* validate = app.add_subcommand("validate", "run the oracle suite");
    add_common(moments, true);
    add_common(simulate, true);
    add_common(sweep, true);
    add_common(validate, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ExitOk : ExitUsage;
    }

    RunOptions opt;
    opt.jobs = jobs;
    opt.dry_run = dry;
    try {
        auto resolve_out = [&](const std::string& from_config) {
            if (const char* env = std::getenv("SPKL_OUT"); env && *env) return std::string(env);
            if (!out_dir.empty()) return out_dir;
            return from_config;
        };
        if (validate->parsed()) {
            opt.command = "validate";
            opt.out_dir = resolve_out("out");
            return cmd_validate(opt, std::cout);
        }
        ExperimentConfig cfg = parse_config(config_path);
        if (seed) override_seed(cfg, *seed);
        opt.out_dir = resolve_out(cfg.output_dir);
        if (moments->parsed()) {
            opt.command = "moments";
            return cmd_moments(cfg, opt, std::cout);
        }
        if (sweep->parsed()) {
            opt.command = "sweep";
            return cmd_sweep(cfg, opt, std::cout);
        }
        opt.command = "simulate";
        return cmd_simulate(cfg, opt, std::cout);
    } catch (const SchemaError& e) {
        std::cerr << error_report(e) << "\n";
        return ExitValidation;
    } catch (const ParseError& e) {
        std::cerr << error_report(e) << "\n";
        return ExitValidation;
    } catch (const std::exception& e) {
        std::cerr << error_report(e) << "\n";
        return ExitRuntime;
    }
}
