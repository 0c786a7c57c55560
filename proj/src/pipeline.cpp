#include "shiftreg/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "shiftreg/cluster.hpp"
#include "shiftreg/error.hpp"
#include "shiftreg/evaluate.hpp"
#include "shiftreg/io.hpp"
#include "shiftreg/parallel.hpp"

namespace shiftreg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Shortest round-trip text, so metric files are byte-stable.
std::string num(double x) {
    if (std::isnan(x)) return "NA";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

fs::path prepare_dir(const std::string& dir) {
    if (dir.empty()) throw Error(ErrorKind::validation, "output directory is required");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::io, "cannot create output directory " + dir);
    return fs::path(dir);
}

json base_manifest(const std::string& command) {
    return json{{"command", command}, {"version", kVersion}};
}

void check_scenario(int id) {
    if (id < 1 || id > kScenarioCount)
        throw Error(ErrorKind::validation,
                    "scenario " + std::to_string(id) + " out of range 1.." + std::to_string(kScenarioCount));
}

// simulate

json simulate_impl(const SimulateOptions& opt) {
    check_scenario(opt.scenario);
    const auto dir = prepare_dir(opt.out_dir);
    const auto t0 = Clock::now();

    ScenarioSpec spec = make_scenario(opt.scenario, opt.seed);
    if (opt.noise_inflation != 0.0) {
        spec = apply_to_scenario(
            spec, CorruptionSpec{CorruptionKind::noise_inflation, 0, opt.noise_inflation, opt.seed});
    }
    CorruptionSpec outl{CorruptionKind::outlier_doubling, opt.outliers, 0.0, mix_seed(opt.seed, 1)};
    CorruptionSpec del{CorruptionKind::random_deletion, 0, opt.deletion, mix_seed(opt.seed, 2)};
    outl.validate();
    del.validate();

    auto sim = generate(spec);
    if (opt.outliers > 0) sim.data = corrupt(sim.data, outl);
    if (opt.deletion > 0.0) sim.data = corrupt(sim.data, del);

    save_cohort((dir / "cohort.csv").string(), sim.data);
    save_truth((dir / "truth.csv").string(), sim.data, sim.truth);

    json m = base_manifest("simulate");
    m["seed"] = opt.seed;
    m["options"] = {{"scenario", opt.scenario},
                    {"seed", opt.seed},
                    {"outliers", opt.outliers},
                    {"deletion", opt.deletion},
                    {"noise_inflation", opt.noise_inflation},
                    {"out_dir", opt.out_dir}};
    m["outputs"] = {(dir / "cohort.csv").string(), (dir / "truth.csv").string()};
    m["subjects"] = sim.data.size();
    m["observations"] = sim.data.total_observations();
    m["runtime_seconds"] = seconds_since(t0);
    write_json((dir / "manifest.json").string(), m);
    return m;
}

// register

json register_impl(const RunConfig& config, const RegisterOptions& opt) {
    config.registration.validate();
    const auto dir = prepare_dir(opt.out_dir);

    LoadReport report;
    const auto data = load_cohort(opt.cohort, config.window, &report, config.min_obs_per_subject);
    if (data.size() == 0) throw Error(ErrorKind::validation, opt.cohort + ": no subjects inside the window");

    const auto t0 = Clock::now();
    const auto result = register_cohort(data, config.registration);
    const double runtime = seconds_since(t0);

    std::ostringstream assign, hist;
    write_assignments(assign, data, result);
    write_history(hist, result);
    write_text((dir / "assignments.csv").string(), assign.str());
    write_text((dir / "history.csv").string(), hist.str());

    json m = base_manifest("register");
    m["seed"] = config.registration.seed;
    m["config"] = config_to_json(config);
    m["options"] = {{"cohort", opt.cohort}, {"config", opt.config}, {"out_dir", opt.out_dir}};
    m["outputs"] = {(dir / "assignments.csv").string(), (dir / "history.csv").string()};
    m["load"] = {{"rows_read", report.rows_read},
                 {"rows_out_of_window", report.rows_out_of_window},
                 {"subjects_kept", report.subjects_kept},
                 {"subjects_dropped", report.subjects_dropped},
                 {"dropped_ids", report.dropped_ids}};
    m["termination"] = to_string(result.termination);
    m["selected_K"] = result.selected_K;
    m["iterations"] = result.history.size();
    m["flagged_cells"] = result.flagged_cells;
    m["reassigned"] = result.reassigned.size();
    m["history"] = history_to_json(result);
    m["runtime_seconds"] = runtime;
    m["runtime_minutes"] = runtime / 60.0;
    write_json((dir / "manifest.json").string(), m);
    return m;
}

RunConfig resolve_config(const RegisterOptions& opt) {
    RunConfig config = opt.config.empty() ? RunConfig{} : load_config(opt.config);
    if (opt.seed) config.registration.seed = *opt.seed;
    if (opt.workers) config.registration.workers = *opt.workers;
    config.registration.validate();
    return config;
}

// evaluate

json evaluate_impl(const EvaluateOptions& opt) {
    const auto dir = prepare_dir(opt.out_dir);
    const auto truth = read_truth(opt.truth);

    fs::path assignments = opt.result;
    double runtime_minutes = 0.0;
    Window window = RunConfig{}.window;
    if (fs::is_directory(assignments)) {
        const auto manifest_path = assignments / "manifest.json";
        assignments /= "assignments.csv";
        if (fs::exists(manifest_path)) {
            const auto rm = read_json(manifest_path.string());
            runtime_minutes = rm.value("runtime_minutes", 0.0);
            if (rm.contains("config")) window = config_from_json(rm["config"]).window;
        }
    }
    const auto result = read_assignments(assignments.string());

    std::vector<std::string> missing;
    for (const auto& [id, row] : truth)
        if (!result.count(id)) missing.push_back(id + " (absent from result)");
    for (const auto& [id, row] : result)
        if (!truth.count(id)) missing.push_back(id + " (absent from truth)");
    if (!missing.empty()) {
        std::string msg = "subject-id mismatch between truth and result: " + std::to_string(missing.size()) +
                          " subject(s), e.g. " + missing.front();
        throw Error(ErrorKind::validation, msg);
    }

    std::set<std::string> excluded;
    if (opt.profile == EvalProfile::comparison) {
        if (opt.cohort.empty()) throw Error(ErrorKind::validation, "the comparison profile requires --cohort");
        const auto data = load_cohort(opt.cohort, window);
        const auto keep = comparison_profile_mask(data);
        std::set<std::string> seen;
        for (std::size_t i = 0; i < data.size(); ++i) {
            seen.insert(data.trajectories[i].subject_id);
            if (!keep[i]) excluded.insert(data.trajectories[i].subject_id);
        }
        // Subjects with nothing inside the window cannot cover either interval.
        for (const auto& [id, row] : truth)
            if (!seen.count(id)) excluded.insert(id);
    }

    std::vector<double> ts, es;
    std::vector<int> tg, eg;
    for (const auto& [id, row] : truth) {
        if (excluded.count(id)) continue;
        const auto& r = result.at(id);
        ts.push_back(row.shift);
        es.push_back(r.shift);
        tg.push_back(row.group);
        eg.push_back(r.cluster);
    }
    if (ts.empty()) throw Error(ErrorKind::validation, "no subjects left to evaluate");

    const auto rec = recovery(ts, es, runtime_minutes);
    const auto agr = agreement(tg, eg);
    const std::string label = opt.label.empty() ? "NA" : opt.label;

    std::ostringstream out;
    out << "scenario,exact,within_one,mae,runtime_minutes,ari,ami,acc,n_evaluated,n_excluded\n";
    out << label << ',' << num(rec.exact_rate) << ',' << num(rec.within_one_rate) << ',' << num(rec.mae_days)
        << ',' << num(rec.runtime_minutes) << ',' << num(agr.ari) << ',' << num(agr.ami) << ',' << num(agr.acc)
        << ',' << ts.size() << ',' << excluded.size() << '\n';
    write_text((dir / "metrics.csv").string(), out.str());

    json m = base_manifest("evaluate");
    m["options"] = {{"truth", opt.truth},
                    {"result", opt.result},
                    {"cohort", opt.cohort},
                    {"profile", to_string(opt.profile)},
                    {"label", opt.label},
                    {"out_dir", opt.out_dir}};
    m["outputs"] = {(dir / "metrics.csv").string()};
    m["n_evaluated"] = ts.size();
    m["n_excluded"] = excluded.size();
    write_json((dir / "manifest.json").string(), m);
    return m;
}

// sweep

struct ReplicateOutcome {
    RecoveryMetrics recovery;
    AgreementMetrics agreement;
    int K = 0;
    std::size_t iterations = 0;
    std::string termination;
    std::uint64_t seed = 0;
};

bool is_whole(double v) { return std::isfinite(v) && v == std::floor(v); }

void apply_sweep_value(RunConfig& config, SweepParameter p, double v) {
    auto& r = config.registration;
    switch (p) {
        case SweepParameter::M:
            if (!is_whole(v)) throw Error(ErrorKind::validation, "sweep value for M must be an integer, got " + num(v));
            r.max_clusters = static_cast<int>(v);
            break;
        case SweepParameter::alpha: r.trim_fraction = v; break;
        case SweepParameter::tau: r.threshold = v; break;
        default: break;
    }
}

json sweep_impl(const RunConfig& base, const SweepOptions& opt) {
    check_scenario(opt.scenario);
    if (opt.values.empty()) throw Error(ErrorKind::validation, "sweep needs at least one value");
    if (opt.replicates < 1) throw Error(ErrorKind::validation, "replicates must be >= 1");

    auto values = opt.values;
    std::sort(values.begin(), values.end());
    if (std::adjacent_find(values.begin(), values.end()) != values.end())
        throw Error(ErrorKind::validation, "duplicate sweep value");

    // Validate every value before any work starts.
    std::vector<RunConfig> configs;
    for (double v : values) {
        RunConfig c = base;
        apply_sweep_value(c, opt.parameter, v);
        c.registration.workers = 1;
        try {
            c.registration.validate();
            if (opt.parameter == SweepParameter::outliers && !(is_whole(v) && v >= 0.0))
                throw Error(ErrorKind::validation, "outlier count must be a nonnegative integer");
            corruption_for(opt.parameter, v, 0).validate();
        } catch (const Error& e) {
            throw Error(ErrorKind::validation,
                        std::string("invalid value ") + num(v) + " for parameter " + to_string(opt.parameter) + ": " +
                            e.what());
        }
        configs.push_back(std::move(c));
    }

    const auto dir = prepare_dir(opt.out_dir);
    const std::size_t R = opt.replicates;
    const std::size_t jobs = values.size() * R;
    std::vector<ReplicateOutcome> outcomes(jobs);
    const auto t0 = Clock::now();

    parallel_for(jobs, opt.workers, [&](std::size_t job) {
        const std::size_t vi = job / R, rep = job % R;
        const double v = values[vi];
        // Common random numbers: replicate r sees the same cohort for every value.
        const std::uint64_t seed = mix_seed(opt.seed, rep);

        ScenarioSpec spec = make_scenario(opt.scenario, seed);
        if (opt.parameter == SweepParameter::noise) spec = apply_to_scenario(spec, corruption_for(opt.parameter, v, seed));
        auto sim = generate(spec);
        if ((opt.parameter == SweepParameter::outliers || opt.parameter == SweepParameter::deletion) && v > 0.0)
            sim.data = corrupt(sim.data, corruption_for(opt.parameter, v, mix_seed(seed, 1)));

        auto config = configs[vi].registration;
        config.seed = seed;
        const auto t = Clock::now();
        const auto result = register_cohort(sim.data, config);
        const double minutes = seconds_since(t) / 60.0;

        std::vector<double> truth_shift(sim.truth.true_shifts.begin(), sim.truth.true_shifts.end());
        auto& o = outcomes[job];
        o.recovery = recovery(truth_shift, result.shifts, minutes);
        o.agreement = agreement(sim.truth.true_groups, result.labels);
        o.K = result.selected_K;
        o.iterations = result.history.size();
        o.termination = to_string(result.termination);
        o.seed = seed;
    });

    const char* pname = to_string(opt.parameter);
    std::ostringstream raw, summary, runtime;
    raw << "parameter,value,replicate,seed,exact,within_one,mae,ari,ami,acc,K,iterations,termination\n";
    summary << "parameter,value,replicates,exact,exact_lower,exact_upper,within_one,within_one_lower,"
               "within_one_upper,mae,mae_lower,mae_upper,ari,ami,acc\n";
    runtime << "parameter,value,replicate,runtime_minutes\n";

    for (std::size_t vi = 0; vi < values.size(); ++vi) {
        std::vector<RecoveryMetrics> recs;
        double ari = 0, ami = 0, acc = 0;
        for (std::size_t rep = 0; rep < R; ++rep) {
            const auto& o = outcomes[vi * R + rep];
            recs.push_back(o.recovery);
            ari += o.agreement.ari;
            ami += o.agreement.ami;
            acc += o.agreement.acc;
            raw << pname << ',' << num(values[vi]) << ',' << rep << ',' << o.seed << ',' << num(o.recovery.exact_rate)
                << ',' << num(o.recovery.within_one_rate) << ',' << num(o.recovery.mae_days) << ','
                << num(o.agreement.ari) << ',' << num(o.agreement.ami) << ',' << num(o.agreement.acc) << ',' << o.K
                << ',' << o.iterations << ',' << o.termination << '\n';
            runtime << pname << ',' << num(values[vi]) << ',' << rep << ',' << num(o.recovery.runtime_minutes)
                    << '\n';
        }
        const auto s = summarize(recs);
        const double n = static_cast<double>(R);
        summary << pname << ',' << num(values[vi]) << ',' << R;
        for (const auto& iv : {s.exact, s.within_one, s.mae})
            summary << ',' << num(iv.mean) << ',' << num(iv.lower) << ',' << num(iv.upper);
        summary << ',' << num(ari / n) << ',' << num(ami / n) << ',' << num(acc / n) << '\n';
    }

    write_text((dir / "raw.csv").string(), raw.str());
    write_text((dir / "summary.csv").string(), summary.str());
    write_text((dir / "runtime.csv").string(), runtime.str());

    json m = base_manifest("sweep");
    m["seed"] = opt.seed;
    m["config"] = config_to_json(base);
    m["options"] = {{"scenario", opt.scenario},
                    {"parameter", pname},
                    {"values", opt.values},
                    {"replicates", opt.replicates},
                    {"seed", opt.seed},
                    {"config", opt.config},
                    {"workers", opt.workers},
                    {"out_dir", opt.out_dir}};
    m["outputs"] = {(dir / "summary.csv").string(), (dir / "raw.csv").string(), (dir / "runtime.csv").string()};
    m["runtime_seconds"] = seconds_since(t0);
    write_json((dir / "manifest.json").string(), m);
    return m;
}

template <typename T>
T opt_field(const json& options, const char* key) {
    try {
        return options.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorKind::parse, std::string("manifest option '") + key + "' missing or malformed");
    }
}

}  // namespace

const char* to_string(EvalProfile p) { return p == EvalProfile::comparison ? "comparison" : "default"; }

EvalProfile parse_profile(const std::string& s) {
    if (s == "default") return EvalProfile::all_subjects;
    if (s == "comparison") return EvalProfile::comparison;
    throw Error(ErrorKind::validation, "unknown profile '" + s + "' (expected default or comparison)");
}

const char* to_string(SweepParameter p) {
    switch (p) {
        case SweepParameter::M: return "M";
        case SweepParameter::alpha: return "alpha";
        case SweepParameter::tau: return "tau";
        case SweepParameter::outliers: return "outliers";
        case SweepParameter::deletion: return "deletion";
        case SweepParameter::noise: return "noise";
    }
    return "?";
}

SweepParameter parse_sweep_parameter(const std::string& s) {
    for (auto p : {SweepParameter::M, SweepParameter::alpha, SweepParameter::tau, SweepParameter::outliers,
                   SweepParameter::deletion, SweepParameter::noise})
        if (s == to_string(p)) return p;
    throw Error(ErrorKind::validation, "unknown sweep parameter '" + s + "' (expected M, alpha, tau, outliers, deletion or noise)");
}

CorruptionSpec corruption_for(SweepParameter p, double value, std::uint64_t seed) {
    switch (p) {
        case SweepParameter::outliers:
            return {CorruptionKind::outlier_doubling, static_cast<std::size_t>(std::max(0.0, value)), 0.0, seed};
        case SweepParameter::deletion: return {CorruptionKind::random_deletion, 0, value, seed};
        case SweepParameter::noise: return {CorruptionKind::noise_inflation, 0, value, seed};
        default: return {CorruptionKind::outlier_doubling, 0, 0.0, seed};
    }
}

json run_simulate(const SimulateOptions& opt) { return simulate_impl(opt); }

json run_register(const RegisterOptions& opt) { return register_impl(resolve_config(opt), opt); }

json run_evaluate(const EvaluateOptions& opt) { return evaluate_impl(opt); }

json run_sweep(const SweepOptions& opt) {
    const RunConfig base = opt.config.empty() ? RunConfig{} : load_config(opt.config);
    return sweep_impl(base, opt);
}

json replay(const std::string& manifest_path, const std::string& out_dir) {
    const json m = read_json(manifest_path);
    const std::string command = m.value("command", "");
    if (!m.contains("options")) throw Error(ErrorKind::parse, manifest_path + ": no options recorded");
    const json& o = m["options"];
    const std::string dir = out_dir.empty() ? opt_field<std::string>(o, "out_dir") : out_dir;

    if (command == "simulate") {
        SimulateOptions s;
        s.scenario = opt_field<int>(o, "scenario");
        s.seed = opt_field<std::uint64_t>(o, "seed");
        s.outliers = opt_field<std::size_t>(o, "outliers");
        s.deletion = opt_field<double>(o, "deletion");
        s.noise_inflation = opt_field<double>(o, "noise_inflation");
        s.out_dir = dir;
        return simulate_impl(s);
    }
    if (command == "register") {
        RegisterOptions r;
        r.cohort = opt_field<std::string>(o, "cohort");
        r.config = opt_field<std::string>(o, "config");
        r.out_dir = dir;
        // The snapshot wins over the config file, which may have changed since.
        return register_impl(config_from_json(m.at("config")), r);
    }
    if (command == "evaluate") {
        EvaluateOptions e;
        e.truth = opt_field<std::string>(o, "truth");
        e.result = opt_field<std::string>(o, "result");
        e.cohort = opt_field<std::string>(o, "cohort");
        e.profile = parse_profile(opt_field<std::string>(o, "profile"));
        e.label = opt_field<std::string>(o, "label");
        e.out_dir = dir;
        return evaluate_impl(e);
    }
    if (command == "sweep") {
        SweepOptions s;
        s.scenario = opt_field<int>(o, "scenario");
        s.parameter = parse_sweep_parameter(opt_field<std::string>(o, "parameter"));
        s.values = opt_field<std::vector<double>>(o, "values");
        s.replicates = opt_field<std::size_t>(o, "replicates");
        s.seed = opt_field<std::uint64_t>(o, "seed");
        s.config = opt_field<std::string>(o, "config");
        s.workers = opt_field<int>(o, "workers");
        s.out_dir = dir;
        return sweep_impl(config_from_json(m.at("config")), s);
    }
    throw Error(ErrorKind::parse, manifest_path + ": unknown command '" + command + "'");
}

}  // namespace shiftreg
