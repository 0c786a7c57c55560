#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "shiftreg/dataset.hpp"
#include "shiftreg/registration.hpp"

namespace shiftreg {

constexpr const char* kVersion = "0.1.0";

// Registration knobs plus the loader settings that travel with them.
struct RunConfig {
    RegistrationConfig registration;
    Window window{1.0, 21.0};
    std::size_t min_obs_per_subject = 1;
};

// Strict parse: unknown keys and wrong types are validation errors naming
// the field. Missing keys keep their defaults.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_config(const std::string& path);

const char* to_string(BoundaryPolicy p);
const char* to_string(ClusteringMethod m);

// subject_id,shift,cluster (clusters numbered from 1)
void write_assignments(std::ostream& out, const CohortDataset& data, const RegistrationResult& result);
void write_history(std::ostream& out, const RegistrationResult& result);
nlohmann::json history_to_json(const RegistrationResult& result);

struct AssignmentRow {
    double shift = 0.0;
    int cluster = 0;
};
std::map<std::string, AssignmentRow> read_assignments(const std::string& path);

struct TruthRow {
    double shift = 0.0;
    int group = 0;
};
std::map<std::string, TruthRow> read_truth(const std::string& path);

nlohmann::json read_json(const std::string& path);
void write_json(const std::string& path, const nlohmann::json& j);
void write_text(const std::string& path, const std::string& text);

}  // namespace shiftreg
