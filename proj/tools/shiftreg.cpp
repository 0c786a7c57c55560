// shiftreg: simulate cohorts, register them, score the result, sweep settings.
//
//   shiftreg simulate --scenario 2 --seed 7 --out runs/s2
//   shiftreg register --cohort runs/s2/cohort.csv --config cfg.json --out runs/s2/reg
//   shiftreg evaluate --truth runs/s2/truth.csv --result runs/s2/reg --out runs/s2/eval
//   shiftreg sweep --scenario 4 --parameter alpha --values 0.8,0.9,0.95,0.99 --replicates 5 --out runs/alpha
//   shiftreg replay --manifest runs/s2/reg/manifest.json --out runs/s2/reg2
//
// Exit codes: 0 ok, 1 usage, 2 io, 3 parse, 4 validation, 5 numeric, 6 other.

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "shiftreg/error.hpp"
#include "shiftreg/io.hpp"
#include "shiftreg/pipeline.hpp"

namespace {

int exit_code(shiftreg::ErrorKind kind) {
    switch (kind) {
        case shiftreg::ErrorKind::io: return 2;
        case shiftreg::ErrorKind::parse: return 3;
        case shiftreg::ErrorKind::validation: return 4;
        case shiftreg::ErrorKind::numeric: return 5;
    }
    return 6;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace shiftreg;

    CLI::App app{"Joint time-shift registration and subtype clustering of longitudinal trajectories"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic cohort with ground truth");
    simulate->add_option("--scenario", sim.scenario, "Scenario id (1-9)")->required();
    simulate->add_option("--seed", sim.seed, "Random seed");
    simulate->add_option("--out", sim.out_dir, "Output directory")->required();
    simulate->add_option("--outliers", sim.outliers, "Number of observations whose value is doubled");
    simulate->add_option("--deletion", sim.deletion, "Fraction of observations deleted at random");
    simulate->add_option("--noise-inflation", sim.noise_inflation, "Relative increase of the noise variance");

    RegisterOptions reg;
    std::optional<std::uint64_t> reg_seed;
    std::optional<int> reg_workers;
    auto* registr = app.add_subcommand("register", "Estimate shifts and clusters for a cohort");
    registr->add_option("--cohort", reg.cohort, "Cohort CSV (subject_id,time,value)")->required()->check(CLI::ExistingFile);
    registr->add_option("--config", reg.config, "JSON configuration")->check(CLI::ExistingFile);
    registr->add_option("--out", reg.out_dir, "Output directory")->required();
    registr->add_option("--seed", reg_seed, "Override the configured seed");
    registr->add_option("--workers", reg_workers, "Worker threads (0 = all cores)");

    EvaluateOptions ev;
    std::string profile = "default";
    auto* evaluate = app.add_subcommand("evaluate", "Score estimated shifts and clusters against ground truth");
    evaluate->add_option("--truth", ev.truth, "Ground-truth CSV")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--result", ev.result, "Register output directory or assignments CSV")->required()->check(CLI::ExistingPath);
    evaluate->add_option("--cohort", ev.cohort, "Cohort CSV, needed by --profile comparison");
    evaluate->add_option("--profile", profile, "default or comparison")->check(CLI::IsMember({"default", "comparison"}));
    evaluate->add_option("--label", ev.label, "Value of the scenario column");
    evaluate->add_option("--out", ev.out_dir, "Output directory")->required();

    SweepOptions sw;
    std::string parameter;
    auto* sweep = app.add_subcommand("sweep", "Replicated sensitivity sweep over one setting");
    sweep->add_option("--scenario", sw.scenario, "Scenario id (1-9)")->required();
    sweep->add_option("--parameter", parameter, "M, alpha, tau, outliers, deletion or noise")->required();
    sweep->add_option("--values", sw.values, "Values to try")->required()->delimiter(',');
    sweep->add_option("--replicates", sw.replicates, "Replicates per value");
    sweep->add_option("--seed", sw.seed, "Base seed");
    sweep->add_option("--config", sw.config, "Base JSON configuration")->check(CLI::ExistingFile);
    sweep->add_option("--workers", sw.workers, "Parallel replicates (0 = all cores)");
    sweep->add_option("--out", sw.out_dir, "Output directory")->required();

    std::string manifest, replay_out;
    auto* rep = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
    rep->add_option("--manifest", manifest, "manifest.json")->required()->check(CLI::ExistingFile);
    rep->add_option("--out", replay_out, "Output directory (default: the recorded one)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        nlohmann::json m;
        if (*simulate) {
            m = run_simulate(sim);
        } else if (*registr) {
            reg.seed = reg_seed;
            reg.workers = reg_workers;
            m = run_register(reg);
        } else if (*evaluate) {
            ev.profile = parse_profile(profile);
            m = run_evaluate(ev);
        } else if (*sweep) {
            sw.parameter = parse_sweep_parameter(parameter);
            m = run_sweep(sw);
        } else if (*rep) {
            m = replay(manifest, replay_out);
        }
        std::cout << m["command"].get<std::string>() << ": wrote";
        for (const auto& path : m["outputs"]) std::cout << ' ' << path.get<std::string>();
        if (m.contains("termination")) std::cout << " (" << m["termination"].get<std::string>() << ")";
        std::cout << '\n';
        return 0;
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 6;
    }
}
