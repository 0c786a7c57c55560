#include "shiftreg/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "shiftreg/error.hpp"

namespace shiftreg {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

void sort_by_time(Trajectory& t) {
    std::stable_sort(t.observations.begin(), t.observations.end(),
                     [](const Observation& a, const Observation& b) { return a.time < b.time; });
}

void check_window(Window w) {
    if (!std::isfinite(w.lo) || !std::isfinite(w.hi))
        throw Error(ErrorKind::validation, "window bounds must be finite");
    if (w.lo >= w.hi) {
        std::ostringstream msg;
        msg << "invalid window: T_min (" << w.lo << ") must be < T_max (" << w.hi << ")";
        throw Error(ErrorKind::validation, msg.str());
    }
}

}  // namespace

bool parse_double(std::string_view text, double& out) {
    text = trim(text);
    if (text.empty()) return false;
    if (text.front() == '+') text.remove_prefix(1);
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end;
}

std::size_t CohortDataset::total_observations() const {
    std::size_t n = 0;
    for (const auto& t : trajectories) n += t.size();
    return n;
}

void LoadReport::write(std::ostream& os) const {
    os << "load_report rows_read=" << rows_read << " rows_out_of_window=" << rows_out_of_window
       << " subjects_kept=" << subjects_kept << " subjects_removed=" << subjects_dropped;
    if (!dropped_ids.empty()) {
        os << " removed_ids=";
        for (std::size_t i = 0; i < dropped_ids.size(); ++i) os << (i ? ";" : "") << dropped_ids[i];
    }
    os << '\n';
}

CohortDataset make_cohort(std::vector<Trajectory> trajectories, Window window) {
    check_window(window);
    if (trajectories.empty()) throw Error(ErrorKind::validation, "cohort has no subjects");
    std::unordered_set<std::string> seen;
    for (auto& t : trajectories) {
        if (!seen.insert(t.subject_id).second)
            throw Error(ErrorKind::validation, "duplicate subject id: " + t.subject_id);
        if (t.empty()) throw Error(ErrorKind::validation, "subject " + t.subject_id + " has no observations");
        for (const auto& o : t.observations) {
            if (!std::isfinite(o.time) || !std::isfinite(o.value))
                throw Error(ErrorKind::validation, "non-finite observation for subject " + t.subject_id);
            if (!window.contains(o.time))
                throw Error(ErrorKind::validation, "observation outside window for subject " + t.subject_id);
        }
        sort_by_time(t);
    }
    return CohortDataset{std::move(trajectories), window};
}

CohortDataset read_cohort(std::istream& in, Window window, LoadReport* report, std::size_t min_obs,
                          const std::string& source) {
    check_window(window);
    LoadReport local;
    // insertion order of first appearance keeps subject order stable
    std::vector<Trajectory> subjects;
    std::map<std::string, std::size_t> index;
    std::unordered_set<std::string> all_ids;

    std::string line;
    std::size_t row = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto fields = split_commas(line);
        if (!header_seen) {
            header_seen = true;
            if (fields.size() == 3 && fields[0] == "subject_id" && fields[1] == "time" && fields[2] == "value")
                continue;
            throw Error(ErrorKind::parse, source + ": row 1: expected header 'subject_id,time,value'");
        }
        if (fields.size() != 3 || fields[0].empty()) {
            throw Error(ErrorKind::parse, source + ": row " + std::to_string(row) + ": malformed row '" + line + "'");
        }
        double t = 0.0;
        double v = 0.0;
        const bool ok_t = parse_double(fields[1], t);
        const bool ok_v = parse_double(fields[2], v);
        if (!ok_t || !ok_v) {
            // distinguish "nan"/"inf" from garbage for clearer messages
            const std::string what = (ok_t || ok_v) ? "malformed numeric field" : "malformed row";
            throw Error(ErrorKind::parse, source + ": row " + std::to_string(row) + ": " + what + " '" + line + "'");
        }
        if (!std::isfinite(t) || !std::isfinite(v)) {
            throw Error(ErrorKind::parse, source + ": row " + std::to_string(row) + ": non-finite numeric field");
        }
        ++local.rows_read;
        std::string id(fields[0]);
        all_ids.insert(id);
        if (!window.contains(t)) {
            ++local.rows_out_of_window;
            if (!index.count(id)) {
                index.emplace(id, subjects.size());
                subjects.push_back(Trajectory{id, {}});
            }
            continue;
        }
        auto it = index.find(id);
        if (it == index.end()) {
            it = index.emplace(id, subjects.size()).first;
            subjects.push_back(Trajectory{id, {}});
        }
        subjects[it->second].observations.push_back({t, v});
    }
    if (in.bad()) throw Error(ErrorKind::io, source + ": read failure");
    if (!header_seen) throw Error(ErrorKind::parse, source + ": empty file");

    std::vector<Trajectory> kept;
    kept.reserve(subjects.size());
    for (auto& s : subjects) {
        if (s.observations.size() < std::max<std::size_t>(min_obs, 1)) {
            ++local.subjects_dropped;
            local.dropped_ids.push_back(s.subject_id);
            continue;
        }
        kept.push_back(std::move(s));
    }
    local.subjects_kept = kept.size();
    if (report) *report = local;
    if (kept.empty()) throw Error(ErrorKind::validation, source + ": no subjects left after windowing");
    return make_cohort(std::move(kept), window);
}

CohortDataset load_cohort(const std::string& path, Window window, LoadReport* report, std::size_t min_obs) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open cohort file: " + path);
    return read_cohort(in, window, report, min_obs, path);
}

namespace {

void put_double(std::ostream& out, double x) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    out.write(buf, ptr - buf);
}

}  // namespace

void write_cohort(std::ostream& out, const CohortDataset& data) {
    out << "subject_id,time,value\n";
    for (const auto& t : data.trajectories) {
        for (const auto& o : t.observations) {
            out << t.subject_id << ',';
            put_double(out, o.time);
            out << ',';
            put_double(out, o.value);
            out << '\n';
        }
    }
}

void save_cohort(const std::string& path, const CohortDataset& data) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write cohort file: " + path);
    write_cohort(out, data);
    if (!out) throw Error(ErrorKind::io, "write failed: " + path);
}

Trajectory shift_trajectory(const Trajectory& traj, double shift, Window window) {
    Trajectory out{traj.subject_id, {}};
    out.observations.reserve(traj.size());
    for (const auto& o : traj.observations) {
        const double t = o.time + shift;
        if (window.contains(t)) out.observations.push_back({t, o.value});
    }
    return out;
}

}  // namespace shiftreg
