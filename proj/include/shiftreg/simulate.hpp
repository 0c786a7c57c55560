#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "shiftreg/dataset.hpp"

namespace shiftreg {

// intercept + slope * t + amplitude * sin(frequency * (t + phase))
struct MeanCurve {
    double intercept = 0.0;
    double slope = 0.0;
    double amplitude = 0.0;
    double frequency = 0.0;
    double phase = 0.0;

    double operator()(double t) const;
};

struct GroupSpec {
    std::size_t size = 0;
    MeanCurve curve;
    double speed_lo = 1.0;  // speed factor ~ Uniform(speed_lo, speed_hi); fixed when equal
    double speed_hi = 1.0;
};

// How the speed factor s enters: time_axis records the draw t at time s*t,
// argument evaluates the curve at s*t and records time t.
enum class SpeedMode { time_axis, argument };

struct ScenarioSpec {
    int scenario_id = 1;
    std::vector<GroupSpec> groups;
    double noise_sd = 0.8;
    double noise_variance_inflation = 0.0;  // relative increase of the noise variance
    std::size_t n_obs_per_subject = 28;
    Window sample_window{1.0, 21.0};
    double truncation_hi = 17.0;
    double zero_shift_fraction = 0.6;
    int max_shift = 4;  // nonzero shifts uniform on {1, ..., max_shift}
    bool force_zero_shifts = false;
    SpeedMode speed_mode = SpeedMode::time_axis;
    std::uint64_t seed = 0;

    std::size_t total_subjects() const;
    double effective_noise_sd() const;
    void validate() const;
};

constexpr int kScenarioCount = 9;  // 1..8 benchmarks, 9 = heterogeneous-speed comparison design

ScenarioSpec make_scenario(int scenario_id, std::uint64_t seed);

struct GroundTruth {
    std::vector<int> true_shifts;
    std::vector<int> true_groups;  // 1-based
    std::vector<double> speed_factors;
};

struct SimulatedCohort {
    CohortDataset data;
    GroundTruth truth;
};

// Observation window of generated cohorts: the sampling window, so that
// registration shifts up to max_shift stay inside it.
SimulatedCohort generate(const ScenarioSpec& spec);

enum class CorruptionKind { outlier_doubling, random_deletion, noise_inflation };

struct CorruptionSpec {
    CorruptionKind kind = CorruptionKind::outlier_doubling;
    std::size_t count = 0;   // outlier_doubling
    double fraction = 0.0;   // random_deletion (in [0,1)) or noise_inflation (>= 0)
    std::uint64_t seed = 0;

    void validate() const;
};

// Post-generation corruptions. Noise inflation acts on the generator, so it
// is composed through apply_to_scenario(); passing a nonzero inflation here
// is an error.
CohortDataset corrupt(const CohortDataset& data, const CorruptionSpec& spec);
ScenarioSpec apply_to_scenario(ScenarioSpec spec, const CorruptionSpec& corruption);

void write_truth(std::ostream& out, const CohortDataset& data, const GroundTruth& truth);
void save_truth(const std::string& path, const CohortDataset& data, const GroundTruth& truth);

}  // namespace shiftreg
