#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "shiftreg/simulate.hpp"

namespace shiftreg {

// Each run_* writes its outputs plus manifest.json into out_dir and returns
// the manifest. Manifests carry every option needed by replay().

struct SimulateOptions {
    int scenario = 1;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::size_t outliers = 0;        // outlier_doubling count
    double deletion = 0.0;           // random_deletion fraction
    double noise_inflation = 0.0;
};

struct RegisterOptions {
    std::string cohort;
    std::string config;  // empty: defaults
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
};

enum class EvalProfile { all_subjects, comparison };

struct EvaluateOptions {
    std::string truth;
    std::string result;  // register output directory or assignments file
    std::string cohort;  // required by the comparison profile
    EvalProfile profile = EvalProfile::all_subjects;
    std::string label;   // scenario column; defaults to the result's source
    std::string out_dir;
};

enum class SweepParameter { M, alpha, tau, outliers, deletion, noise };

struct SweepOptions {
    int scenario = 4;
    SweepParameter parameter = SweepParameter::alpha;
    std::vector<double> values;
    std::size_t replicates = 5;
    std::uint64_t seed = 0;
    std::string config;  // base registration config; empty: defaults
    std::string out_dir;
    int workers = 0;     // replicate-level parallelism, 0 = all cores
};

const char* to_string(EvalProfile p);
EvalProfile parse_profile(const std::string& s);
const char* to_string(SweepParameter p);
SweepParameter parse_sweep_parameter(const std::string& s);

nlohmann::json run_simulate(const SimulateOptions& opt);
nlohmann::json run_register(const RegisterOptions& opt);
nlohmann::json run_evaluate(const EvaluateOptions& opt);
nlohmann::json run_sweep(const SweepOptions& opt);

// Re-runs the command recorded in a manifest. A non-empty out_dir redirects
// the outputs; otherwise the recorded directory is reused.
nlohmann::json replay(const std::string& manifest_path, const std::string& out_dir = "");

// Corruption settings implied by a sweep value, or by simulate options.
CorruptionSpec corruption_for(SweepParameter p, double value, std::uint64_t seed);

}  // namespace shiftreg
