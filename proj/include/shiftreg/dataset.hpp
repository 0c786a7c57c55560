#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace shiftreg {

struct Observation {
    double time = 0.0;   // days
    double value = 0.0;
};

// Closed study window [lo, hi] in days.
struct Window {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double t) const { return t >= lo && t <= hi; }
};

struct Trajectory {
    std::string subject_id;
    std::vector<Observation> observations;  // sorted by time

    std::size_t size() const { return observations.size(); }
    bool empty() const { return observations.empty(); }
};

// Validated cohort: unique ids, every trajectory nonempty, sorted and inside
// the window. Construct through make_cohort() or load_cohort().
struct CohortDataset {
    std::vector<Trajectory> trajectories;
    Window window;

    std::size_t size() const { return trajectories.size(); }
    std::size_t total_observations() const;
};

struct LoadReport {
    std::size_t rows_read = 0;
    std::size_t rows_out_of_window = 0;
    std::size_t subjects_kept = 0;
    std::size_t subjects_dropped = 0;  // no observation left after windowing / filter
    std::vector<std::string> dropped_ids;

    void write(std::ostream& os) const;
};

// Sorts each trajectory, checks every invariant and throws on violation.
CohortDataset make_cohort(std::vector<Trajectory> trajectories, Window window);

// Reads `subject_id,time,value` rows. Observations outside the window are
// dropped; subjects with fewer than min_obs surviving rows are dropped and
// listed in the report.
CohortDataset load_cohort(const std::string& path, Window window, LoadReport* report = nullptr,
                          std::size_t min_obs = 1);
CohortDataset read_cohort(std::istream& in, Window window, LoadReport* report = nullptr,
                          std::size_t min_obs = 1, const std::string& source = "<stream>");

void write_cohort(std::ostream& out, const CohortDataset& data);
void save_cohort(const std::string& path, const CohortDataset& data);

// Adds `shift` to every time and removes observations that leave the window.
// May return an empty trajectory.
Trajectory shift_trajectory(const Trajectory& traj, double shift, Window window);

// Locale-independent parse of a full numeric field; false on junk.
bool parse_double(std::string_view text, double& out);

}  // namespace shiftreg
