#include "shiftreg/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "shiftreg/error.hpp"

namespace shiftreg {

using nlohmann::json;

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
    throw Error(ErrorKind::validation, "config field '" + field + "': " + why);
}

template <typename T>
T get_field(const json& j, const std::string& key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        bad_field(key, std::string("wrong type (") + e.what() + ")");
    }
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        while (!field.empty() && field.front() == ' ') field.erase(field.begin());
        out.push_back(field);
    }
    return out;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

const char* to_string(BoundaryPolicy p) { return p == BoundaryPolicy::global ? "global" : "adaptive"; }
const char* to_string(ClusteringMethod m) { return m == ClusteringMethod::kmeans ? "kmeans" : "kmedoids"; }

RunConfig config_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorKind::validation, "config must be a JSON object");
    RunConfig c;
    auto& r = c.registration;
    for (const auto& [key, value] : j.items()) {
        if (key == "shift_grid") r.shift_grid = get_field<std::vector<double>>(j, key);
        else if (key == "max_clusters") r.max_clusters = get_field<int>(j, key);
        else if (key == "trim_fraction") r.trim_fraction = get_field<double>(j, key);
        else if (key == "threshold") r.threshold = get_field<double>(j, key);
        else if (key == "max_iters") r.max_iters = get_field<int>(j, key);
        else if (key == "lambda") r.lambda = get_field<double>(j, key);
        else if (key == "interior_knots") r.interior_knots = get_field<std::vector<double>>(j, key);
        else if (key == "seed") r.seed = get_field<std::uint64_t>(j, key);
        else if (key == "min_obs_per_fit") r.min_obs_per_fit = get_field<std::size_t>(j, key);
        else if (key == "workers") r.workers = get_field<int>(j, key);
        else if (key == "min_obs_per_subject") c.min_obs_per_subject = get_field<std::size_t>(j, key);
        else if (key == "boundary_policy") {
            const auto s = get_field<std::string>(j, key);
            if (s == "global") r.boundary_policy = BoundaryPolicy::global;
            else if (s == "adaptive") r.boundary_policy = BoundaryPolicy::adaptive;
            else bad_field(key, "expected 'global' or 'adaptive', got '" + s + "'");
        } else if (key == "clustering_method") {
            const auto s = get_field<std::string>(j, key);
            if (s == "kmeans") r.clustering_method = ClusteringMethod::kmeans;
            else if (s == "kmedoids") r.clustering_method = ClusteringMethod::kmedoids;
            else bad_field(key, "expected 'kmeans' or 'kmedoids', got '" + s + "'");
        } else if (key == "window") {
            const auto w = get_field<std::vector<double>>(j, key);
            if (w.size() != 2) bad_field(key, "expected [T_min, T_max]");
            if (!(w[0] < w[1])) bad_field(key, "T_min must be < T_max");
            c.window = Window{w[0], w[1]};
        } else {
            throw Error(ErrorKind::validation, "unknown config field '" + key + "'");
        }
    }
    r.validate();
    if (c.min_obs_per_subject < 1) bad_field("min_obs_per_subject", "must be >= 1");
    return c;
}

json config_to_json(const RunConfig& c) {
    const auto& r = c.registration;
    return json{{"shift_grid", r.shift_grid},
                {"max_clusters", r.max_clusters},
                {"trim_fraction", r.trim_fraction},
                {"threshold", r.threshold},
                {"max_iters", r.max_iters},
                {"lambda", r.lambda},
                {"interior_knots", r.interior_knots},
                {"boundary_policy", to_string(r.boundary_policy)},
                {"clustering_method", to_string(r.clustering_method)},
                {"seed", r.seed},
                {"min_obs_per_fit", r.min_obs_per_fit},
                {"workers", r.workers},
                {"window", {c.window.lo, c.window.hi}},
                {"min_obs_per_subject", c.min_obs_per_subject}};
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::parse, path + ": " + e.what());
    }
}

RunConfig load_config(const std::string& path) { return config_from_json(read_json(path)); }

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path);
    out << text;
    if (!out) throw Error(ErrorKind::io, "write failed: " + path);
}

void write_assignments(std::ostream& out, const CohortDataset& data, const RegistrationResult& result) {
    if (result.shifts.size() != data.size()) throw Error(ErrorKind::validation, "result does not match cohort");
    out << "subject_id,shift,cluster\n";
    for (std::size_t i = 0; i < data.size(); ++i)
        out << data.trajectories[i].subject_id << ',' << result.shifts[i] << ',' << result.labels[i] + 1 << '\n';
}

void write_history(std::ostream& out, const RegistrationResult& result) {
    out << "iteration,K,silhouette,second_silhouette,shifts_changed\n" << std::setprecision(12);
    for (const auto& h : result.history) {
        out << h.iteration << ',' << h.K << ',' << h.best_silhouette << ',';
        if (std::isfinite(h.second_silhouette)) out << h.second_silhouette;
        else out << "NA";
        out << ',' << h.shifts_changed << '\n';
    }
}

json history_to_json(const RegistrationResult& result) {
    json arr = json::array();
    for (const auto& h : result.history) {
        json table = json::array();
        for (const auto& e : h.table) table.push_back({{"k", e.k}, {"silhouette", e.silhouette}});
        arr.push_back({{"iteration", h.iteration},
                       {"K", h.K},
                       {"silhouette", h.best_silhouette},
                       {"second_silhouette", finite_or_null(h.second_silhouette)},
                       {"silhouette_table", table},
                       {"cluster_sizes", h.cluster_sizes},
                       {"trimmed_sizes", h.trimmed_sizes},
                       {"shifts_changed", h.shifts_changed}});
    }
    return arr;
}

namespace {

std::vector<std::vector<std::string>> read_table(const std::string& path, const std::vector<std::string>& header) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || split_csv(line) != header) {
        std::string h;
        for (std::size_t i = 0; i < header.size(); ++i) h += (i ? "," : "") + header[i];
        throw Error(ErrorKind::parse, path + ": expected header '" + h + "'");
    }
    std::vector<std::vector<std::string>> rows;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        auto f = split_csv(line);
        if (f.size() != header.size())
            throw Error(ErrorKind::parse, path + ": row " + std::to_string(row) + ": malformed row");
        rows.push_back(std::move(f));
    }
    return rows;
}

double number(const std::string& path, const std::string& s) {
    double v = 0.0;
    if (!parse_double(s, v) || !std::isfinite(v)) throw Error(ErrorKind::parse, path + ": bad number '" + s + "'");
    return v;
}

}  // namespace

std::map<std::string, AssignmentRow> read_assignments(const std::string& path) {
    std::map<std::string, AssignmentRow> out;
    for (const auto& f : read_table(path, {"subject_id", "shift", "cluster"})) {
        if (!out.emplace(f[0], AssignmentRow{number(path, f[1]), static_cast<int>(number(path, f[2]))}).second)
            throw Error(ErrorKind::parse, path + ": duplicate subject " + f[0]);
    }
    return out;
}

std::map<std::string, TruthRow> read_truth(const std::string& path) {
    std::map<std::string, TruthRow> out;
    for (const auto& f : read_table(path, {"subject_id", "true_shift", "true_group"})) {
        if (!out.emplace(f[0], TruthRow{number(path, f[1]), static_cast<int>(number(path, f[2]))}).second)
            throw Error(ErrorKind::parse, path + ": duplicate subject " + f[0]);
    }
    return out;
}

}  // namespace shiftreg
