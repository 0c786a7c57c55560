#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "shiftreg/error.hpp"
#include "shiftreg/simulate.hpp"

using namespace shiftreg;

namespace {

std::string dump(const CohortDataset& d) {
    std::ostringstream os;
    write_cohort(os, d);
    return os.str();
}

}  // namespace

TEST_CASE("scenario 1 group 1 mean at t=0") {
    const auto spec = make_scenario(1, 0);
    CHECK(std::abs(spec.groups[0].curve(0.0) - (20.0 + 3.0 * std::sin(2.4))) < 1e-12);
}

TEST_CASE("group sizes per scenario") {
    const std::map<int, std::vector<std::size_t>> sizes{
        {1, {500, 500}},           {2, {500, 500}},           {3, {300, 400, 300}},
        {4, {250, 250, 250, 250}}, {5, {250, 250, 250, 250}}, {6, {250, 250, 250, 250}},
        {7, {500, 250, 250}},      {8, {300, 300, 200, 200}}, {9, {300, 250, 250, 200}}};
    for (const auto& [id, expect] : sizes) {
        const auto sim = generate(make_scenario(id, 1));
        std::vector<std::size_t> got(expect.size(), 0);
        for (int g : sim.truth.true_groups) got.at(static_cast<std::size_t>(g - 1)) += 1;
        CHECK(got == expect);
        CHECK(sim.data.size() == 1000);
    }
    CHECK_THROWS_AS(make_scenario(0, 1), Error);
    CHECK_THROWS_AS(make_scenario(42, 1), Error);
}

TEST_CASE("observations stay inside the truncated window") {
    for (int id = 1; id <= kScenarioCount; ++id) {
        const auto sim = generate(make_scenario(id, 7));
        for (std::size_t i = 0; i < sim.data.size(); ++i) {
            const auto& t = sim.data.trajectories[i];
            CHECK(t.observations.size() <= 28);
            CHECK_FALSE(t.observations.empty());
            for (const auto& o : t.observations) {
                CHECK(o.time >= 1.0);
                CHECK(o.time <= 17.0);
                // onset gap: the subject's own timeline starts at 1 + shift
                CHECK(o.time + sim.truth.true_shifts[i] >= 1.0 + sim.truth.true_shifts[i]);
            }
        }
    }
}

TEST_CASE("shift distribution") {
    ScenarioSpec spec = make_scenario(1, 123);
    spec.groups = {GroupSpec{100000, spec.groups[0].curve, 1.0, 1.0}};
    spec.n_obs_per_subject = 3;
    spec.truncation_hi = 21;
    const auto sim = generate(spec);
    std::vector<double> freq(5, 0.0);
    for (int s : sim.truth.true_shifts) freq.at(static_cast<std::size_t>(s)) += 1e-5;
    CHECK(std::abs(freq[0] - 0.6) < 0.01);
    for (int s = 1; s <= 4; ++s) CHECK(std::abs(freq[s] - 0.1) < 0.01);
}

TEST_CASE("noise-free unshifted data lies on the group curve") {
    for (int id : {1, 3, 7, 8, 9}) {
        for (auto mode : {SpeedMode::time_axis, SpeedMode::argument}) {
            ScenarioSpec spec = make_scenario(id, 5);
            spec.noise_sd = 0.0;
            spec.force_zero_shifts = true;
            spec.speed_mode = mode;
            const auto sim = generate(spec);
            for (std::size_t i = 0; i < sim.data.size(); ++i) {
                const auto& curve = spec.groups[sim.truth.true_groups[i] - 1].curve;
                const double s = sim.truth.speed_factors[i];
                CHECK(sim.truth.true_shifts[i] == 0);
                for (const auto& o : sim.data.trajectories[i].observations) {
                    const double expect = mode == SpeedMode::time_axis ? curve(o.time / s) : curve(s * o.time);
                    CHECK(std::abs(o.value - expect) < 1e-12);
                }
            }
        }
    }
}

TEST_CASE("generation is deterministic per seed") {
    const auto a = generate(make_scenario(2, 99));
    const auto b = generate(make_scenario(2, 99));
    const auto c = generate(make_scenario(2, 100));
    CHECK(dump(a.data) == dump(b.data));
    CHECK(a.truth.true_shifts == b.truth.true_shifts);
    CHECK(dump(a.data) != dump(c.data));
}

TEST_CASE("speed factors of the mixed-speed groups") {
    const auto sim = generate(make_scenario(9, 3));
    for (std::size_t i = 0; i < sim.data.size(); ++i) {
        const double s = sim.truth.speed_factors[i];
        switch (sim.truth.true_groups[i]) {
            case 3: CHECK(s == 0.7); break;
            case 4:
                CHECK(s >= 0.7);
                CHECK(s <= 1.0);
                break;
            default: CHECK(s == 1.0);
        }
    }
}

TEST_CASE("outlier doubling") {
    const auto base = generate(make_scenario(3, 4)).data;
    const auto same = corrupt(base, CorruptionSpec{CorruptionKind::outlier_doubling, 0, 0.0, 1});
    CHECK(dump(same) == dump(base));

    const auto hit = corrupt(base, CorruptionSpec{CorruptionKind::outlier_doubling, 100, 0.0, 1});
    std::size_t doubled = 0, other = 0;
    for (std::size_t i = 0; i < base.size(); ++i) {
        const auto& a = base.trajectories[i].observations;
        const auto& b = hit.trajectories[i].observations;
        REQUIRE(a.size() == b.size());
        for (std::size_t j = 0; j < a.size(); ++j) {
            CHECK(a[j].time == b[j].time);
            if (b[j].value == a[j].value) ++other;
            else if (b[j].value == 2.0 * a[j].value) ++doubled;
        }
    }
    CHECK(doubled == 100);
    CHECK(doubled + other == base.total_observations());
    CHECK_THROWS_AS(corrupt(base, CorruptionSpec{CorruptionKind::outlier_doubling, base.total_observations() + 1, 0.0, 1}),
                    Error);
}

TEST_CASE("random deletion removes an exact count") {
    ScenarioSpec spec = make_scenario(1, 8);
    spec.force_zero_shifts = true;
    spec.truncation_hi = 21;
    const auto base = generate(spec).data;
    REQUIRE(base.total_observations() == 28000);
    const auto cut = corrupt(base, CorruptionSpec{CorruptionKind::random_deletion, 0, 0.10, 3});
    CHECK(cut.total_observations() == 25200);
    CHECK(cut.size() == base.size());
    for (const auto& t : cut.trajectories) CHECK_FALSE(t.observations.empty());
    CHECK_THROWS_AS(corrupt(base, CorruptionSpec{CorruptionKind::random_deletion, 0, 1.0, 3}), Error);
}

TEST_CASE("noise inflation acts on the generator") {
    const auto spec = make_scenario(3, 1);
    const auto inflated = apply_to_scenario(spec, CorruptionSpec{CorruptionKind::noise_inflation, 0, 0.5, 0});
    CHECK(std::abs(inflated.effective_noise_sd() - 0.8 * std::sqrt(1.5)) < 1e-12);
    CHECK(spec.effective_noise_sd() == 0.8);
    const auto data = generate(spec).data;
    CHECK_THROWS_AS(corrupt(data, CorruptionSpec{CorruptionKind::noise_inflation, 0, 0.5, 0}), Error);
    CHECK_THROWS_AS(apply_to_scenario(spec, CorruptionSpec{CorruptionKind::noise_inflation, 0, -0.1, 0}), Error);
}

TEST_CASE("truth file layout") {
    const auto sim = generate(make_scenario(1, 2));
    std::ostringstream os;
    write_truth(os, sim.data, sim.truth);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "subject_id,true_shift,true_group");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 1000);
}
