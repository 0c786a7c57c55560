#include "shiftreg/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>

#include "shiftreg/cluster.hpp"
#include "shiftreg/error.hpp"

namespace shiftreg {

double MeanCurve::operator()(double t) const {
    return intercept + slope * t + amplitude * std::sin(frequency * (t + phase));
}

std::size_t ScenarioSpec::total_subjects() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.size;
    return n;
}

double ScenarioSpec::effective_noise_sd() const { return noise_sd * std::sqrt(1.0 + noise_variance_inflation); }

void ScenarioSpec::validate() const {
    if (groups.empty() || total_subjects() == 0) throw Error(ErrorKind::validation, "scenario has no subjects");
    if (!(noise_sd >= 0.0)) throw Error(ErrorKind::validation, "noise_sd must be >= 0");
    if (!(noise_variance_inflation >= 0.0)) throw Error(ErrorKind::validation, "noise inflation must be >= 0");
    if (!(zero_shift_fraction >= 0.0 && zero_shift_fraction <= 1.0))
        throw Error(ErrorKind::validation, "zero_shift_fraction must lie in [0, 1]");
    if (max_shift < 1) throw Error(ErrorKind::validation, "max_shift must be >= 1");
    if (n_obs_per_subject < 1) throw Error(ErrorKind::validation, "n_obs_per_subject must be >= 1");
    if (!(sample_window.lo < truncation_hi)) throw Error(ErrorKind::validation, "truncation bound below window");
    for (const auto& g : groups) {
        if (!(g.speed_lo > 0.0 && g.speed_lo <= g.speed_hi))
            throw Error(ErrorKind::validation, "speed factors must satisfy 0 < lo <= hi");
    }
}

namespace {

MeanCurve sine(double intercept, double amplitude, double frequency, double phase, double slope = 0.0) {
    return MeanCurve{intercept, slope, amplitude, frequency, phase};
}

GroupSpec group(std::size_t n, MeanCurve c, double s_lo = 1.0, double s_hi = 1.0) {
    return GroupSpec{n, c, s_lo, s_hi};
}

}  // namespace

ScenarioSpec make_scenario(int id, std::uint64_t seed) {
    ScenarioSpec s;
    s.scenario_id = id;
    s.seed = seed;
    switch (id) {
        case 1:
            s.groups = {group(500, sine(20, 3, 0.6, 4)), group(500, sine(17, 3, 0.6, 4))};
            break;
        case 2:
            s.groups = {group(500, sine(17, 2, 0.6, 4)), group(500, sine(0, 3, 0.6, 4, 2.0))};
            break;
        case 3:
            s.groups = {group(300, sine(20, 3, 0.6, 4)), group(400, sine(17, 3, 0.6, 4)),
                        group(300, sine(16, 3, 0.9, 4, 0.5))};
            break;
        case 4:
            s.groups = {group(250, sine(24, 3, 0.6, 4)), group(250, sine(17, 3, 0.6, 4)),
                        group(250, sine(38, 4, 0.9, 3, -0.5)), group(250, sine(21, 3, 0.6, 4, 0.9))};
            break;
        case 5:
            s.groups = {group(250, sine(24, 3, 0.6, 4)), group(250, sine(17, 3, 0.6, 4)),
                        group(250, sine(28, 4, 0.9, 3, -0.5)), group(250, sine(21, 4, 0.9, 3, -0.5))};
            break;
        case 6:
            s.groups = {group(250, sine(23, 3, 0.6, 4)), group(250, sine(17, 3, 0.6, 4)),
                        group(250, sine(20, 3, 0.6, 4)), group(250, sine(25, 4, 0.9, 3, -0.5))};
            break;
        case 7:
            s.groups = {group(500, sine(17, 2, 0.6, 4)), group(250, sine(0, 3, 0.6, 4, 2.0), 1.0, 1.0),
                        group(250, sine(0, 3, 0.6, 4, 2.0), 0.7, 0.7)};
            break;
        case 8:
            s.groups = {group(300, sine(20, 3, 0.6, 4)), group(300, sine(17, 3, 0.6, 4)),
                        group(200, sine(16, 3, 0.9, 4, 0.5), 1.0, 1.0),
                        group(200, sine(16, 3, 0.9, 4, 0.5), 1.3, 1.3)};
            break;
        case 9:
            s.groups = {group(300, sine(7, 4, 0.7, 4, 1.5)), group(250, sine(0, 3, 1.0, 4, 2.0), 1.0, 1.0),
                        group(250, sine(0, 3, 1.0, 4, 2.0), 0.7, 0.7),
                        group(200, sine(0, 3, 1.0, 4, 2.0), 0.7, 1.0)};
            break;
        default:
            throw Error(ErrorKind::validation,
                        "unknown scenario id " + std::to_string(id) + " (expected 1.." + std::to_string(kScenarioCount) + ")");
    }
    return s;
}

SimulatedCohort generate(const ScenarioSpec& spec) {
    spec.validate();
    const std::size_t n = spec.total_subjects();
    std::vector<Trajectory> subjects(n);
    GroundTruth truth;
    truth.true_shifts.resize(n);
    truth.true_groups.resize(n);
    truth.speed_factors.resize(n);
    const double sd = spec.effective_noise_sd();
    const int width = static_cast<int>(std::to_string(n).size());

    std::size_t i = 0;
    for (std::size_t g = 0; g < spec.groups.size(); ++g) {
        const GroupSpec& grp = spec.groups[g];
        for (std::size_t m = 0; m < grp.size; ++m, ++i) {
            // per-subject stream: output does not depend on generation order
            std::mt19937_64 rng(mix_seed(spec.seed, i));
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            std::uniform_real_distribution<double> when(spec.sample_window.lo, spec.sample_window.hi);
            std::normal_distribution<double> noise(0.0, 1.0);

            const double speed = grp.speed_lo == grp.speed_hi
                                     ? grp.speed_lo
                                     : std::uniform_real_distribution<double>(grp.speed_lo, grp.speed_hi)(rng);
            int shift = 0;
            const double u = unit(rng);
            if (!spec.force_zero_shifts && u >= spec.zero_shift_fraction)
                shift = std::uniform_int_distribution<int>(1, spec.max_shift)(rng);

            char id[32];
            std::snprintf(id, sizeof(id), "S%0*zu", width, i + 1);
            Trajectory traj{id, {}};
            // redraw on the (practically impossible) event of an empty subject
            while (traj.observations.empty()) {
                std::vector<double> times(spec.n_obs_per_subject);
                for (auto& t : times) t = when(rng);
                std::sort(times.begin(), times.end());
                for (double t : times) {
                    const double eps = sd * noise(rng);
                    double recorded = t;
                    double value = 0.0;
                    if (spec.speed_mode == SpeedMode::time_axis) {
                        recorded = speed * t;
                        value = grp.curve(t) + eps;
                    } else {
                        value = grp.curve(speed * t) + eps;
                    }
                    const double observed = recorded - shift;
                    if (observed < spec.sample_window.lo || observed > spec.truncation_hi) continue;
                    traj.observations.push_back({observed, value});
                }
            }
            subjects[i] = std::move(traj);
            truth.true_shifts[i] = shift;
            truth.true_groups[i] = static_cast<int>(g) + 1;
            truth.speed_factors[i] = speed;
        }
    }
    return SimulatedCohort{make_cohort(std::move(subjects), spec.sample_window), std::move(truth)};
}

void CorruptionSpec::validate() const {
    switch (kind) {
        case CorruptionKind::outlier_doubling: break;
        case CorruptionKind::random_deletion:
            if (!(fraction >= 0.0 && fraction < 1.0))
                throw Error(ErrorKind::validation, "deletion fraction must lie in [0, 1)");
            break;
        case CorruptionKind::noise_inflation:
            if (!(fraction >= 0.0)) throw Error(ErrorKind::validation, "noise inflation must be >= 0");
            break;
    }
}

CohortDataset corrupt(const CohortDataset& data, const CorruptionSpec& spec) {
    spec.validate();
    const std::size_t total = data.total_observations();
    std::mt19937_64 rng(mix_seed(spec.seed, 0xC0FFEE));
    CohortDataset out = data;

    switch (spec.kind) {
        case CorruptionKind::outlier_doubling: {
            if (spec.count > total) {
                throw Error(ErrorKind::validation, "outlier count " + std::to_string(spec.count) +
                                                       " exceeds total observations " + std::to_string(total));
            }
            std::vector<std::size_t> all(total);
            std::iota(all.begin(), all.end(), 0);
            std::vector<std::size_t> pick;
            std::sample(all.begin(), all.end(), std::back_inserter(pick), spec.count, rng);
            std::size_t next = 0;
            std::size_t flat = 0;
            for (auto& t : out.trajectories) {
                for (auto& o : t.observations) {
                    if (next < pick.size() && pick[next] == flat) {
                        o.value *= 2.0;
                        ++next;
                    }
                    ++flat;
                }
            }
            return out;
        }
        case CorruptionKind::random_deletion: {
            const auto count = static_cast<std::size_t>(std::floor(spec.fraction * static_cast<double>(total)));
            // one protected observation per subject keeps every subject present
            std::vector<std::size_t> pool;
            pool.reserve(total);
            std::size_t flat = 0;
            for (const auto& t : data.trajectories) {
                const auto keep = std::uniform_int_distribution<std::size_t>(0, t.size() - 1)(rng);
                for (std::size_t r = 0; r < t.size(); ++r, ++flat)
                    if (r != keep) pool.push_back(flat);
            }
            if (count > pool.size())
                throw Error(ErrorKind::validation, "deletion count exceeds deletable observations");
            std::vector<std::size_t> drop;
            std::sample(pool.begin(), pool.end(), std::back_inserter(drop), count, rng);
            std::size_t next = 0;
            flat = 0;
            for (auto& t : out.trajectories) {
                std::vector<Observation> kept;
                kept.reserve(t.size());
                for (const auto& o : t.observations) {
                    if (next < drop.size() && drop[next] == flat) {
                        ++next;
                    } else {
                        kept.push_back(o);
                    }
                    ++flat;
                }
                t.observations = std::move(kept);
            }
            return out;
        }
        case CorruptionKind::noise_inflation:
            if (spec.fraction != 0.0) {
                throw Error(ErrorKind::validation,
                            "noise inflation acts at generation time; compose it with apply_to_scenario()");
            }
            return out;
    }
    return out;
}

ScenarioSpec apply_to_scenario(ScenarioSpec spec, const CorruptionSpec& corruption) {
    corruption.validate();
    if (corruption.kind == CorruptionKind::noise_inflation) spec.noise_variance_inflation = corruption.fraction;
    return spec;
}

void write_truth(std::ostream& out, const CohortDataset& data, const GroundTruth& truth) {
    if (truth.true_shifts.size() != data.size() || truth.true_groups.size() != data.size())
        throw Error(ErrorKind::validation, "ground truth does not match cohort size");
    out << "subject_id,true_shift,true_group\n";
    for (std::size_t i = 0; i < data.size(); ++i)
        out << data.trajectories[i].subject_id << ',' << truth.true_shifts[i] << ',' << truth.true_groups[i] << '\n';
}

void save_truth(const std::string& path, const CohortDataset& data, const GroundTruth& truth) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write truth file: " + path);
    write_truth(out, data, truth);
}

}  // namespace shiftreg
