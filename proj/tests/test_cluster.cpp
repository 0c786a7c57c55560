#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "oracles.hpp"
#include "shiftreg/cluster.hpp"
#include "shiftreg/error.hpp"

using namespace shiftreg;

namespace {

ActiveEmbedding from_points(const oracle::Points& pts) {
    const std::size_t p = pts.front().size();
    std::vector<double> flat;
    for (const auto& x : pts) flat.insert(flat.end(), x.begin(), x.end());
    return ActiveEmbedding(pts.size(), p, flat);
}

oracle::Points line(std::vector<double> xs) {
    oracle::Points pts;
    for (double x : xs) pts.push_back({x});
    return pts;
}

oracle::Points blobs(std::mt19937_64& rng, int groups, int per, double spread, std::size_t p = 3) {
    std::normal_distribution<double> z(0, spread);
    oracle::Points pts;
    for (int g = 0; g < groups; ++g)
        for (int i = 0; i < per; ++i) {
            std::vector<double> x(p);
            for (std::size_t j = 0; j < p; ++j) x[j] = 10.0 * g * (j == 0 ? 1 : (j == 1 ? (g % 2) : 0)) + z(rng);
            x[1] += 10.0 * (g / 2);
            pts.push_back(x);
        }
    return pts;
}

double wcss(const oracle::Points& x, const Partition& part) {
    double total = 0.0;
    for (const auto& m : part.members()) {
        std::vector<double> mean(x[0].size(), 0.0);
        for (auto i : m)
            for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += x[i][j];
        for (auto& v : mean) v /= static_cast<double>(m.size());
        for (auto i : m) total += std::pow(oracle::dist(x[i], mean), 2);
    }
    return total;
}

double medoid_cost(const oracle::Points& x, const Partition& part) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double m = INFINITY;
        for (auto c : part.medoids) m = std::min(m, oracle::dist(x[i], x[c]));
        total += m;
    }
    return total;
}

// same grouping, any label names
bool same_grouping(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j)
            if ((a[i] == a[j]) != (b[i] == b[j])) return false;
    return true;
}

}  // namespace

TEST_CASE("canonical labels follow first appearance") {
    const auto p = canonical_partition({2, 2, 0, 1, 0}, 3);
    CHECK(p.labels == std::vector<int>{0, 0, 1, 2, 1});
    CHECK(p.sizes() == std::vector<std::size_t>{2, 2, 1});
    CHECK_THROWS_AS(canonical_partition({0, 0, 2}, 3), Error);
}

TEST_CASE("distance matrix is symmetric with zero diagonal") {
    std::mt19937_64 rng(1);
    const auto pts = blobs(rng, 2, 6, 1.0);
    const DistanceMatrix d(from_points(pts), 3);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK(d(i, i) == 0.0);
        for (std::size_t j = 0; j < pts.size(); ++j) {
            CHECK(d(i, j) == d(j, i));
            CHECK(std::abs(d(i, j) - oracle::dist(pts[i], pts[j])) < 1e-12);
        }
    }
}

TEST_CASE("separable duplicate groups") {
    oracle::Points pts;
    for (int i = 0; i < 5; ++i) pts.push_back({0, 0});
    for (int i = 0; i < 5; ++i) pts.push_back({10, 10});
    const auto emb = from_points(pts);
    const std::vector<int> expect{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    CHECK(kmeans(emb, 2, 7).partition.labels == expect);
    CHECK(kmedoids(emb, 2, 7).partition.labels == expect);
}

TEST_CASE("k equal to N gives singletons") {
    const auto pts = line({0, 3, 7, 12, 20});
    const auto emb = from_points(pts);
    for (const auto& run : {kmeans(emb, 5, 1), kmedoids(emb, 5, 1)}) {
        CHECK(run.partition.k == 5);
        CHECK(run.partition.sizes() == std::vector<std::size_t>(5, 1));
        CHECK(run.objective == doctest::Approx(0.0));
    }
}

TEST_CASE("1-D example: k-means optimum over all 2-partitions") {
    const auto pts = line({0, 1, 2, 10, 11, 12});
    const auto run = kmeans(from_points(pts), 2, 3);
    CHECK(run.partition.labels == std::vector<int>{0, 0, 0, 1, 1, 1});
    CHECK(std::abs(wcss(pts, run.partition) - oracle::best_two_partition_wcss(pts)) < 1e-12);
    CHECK(std::abs(run.objective - wcss(pts, run.partition)) < 1e-9);
}

TEST_CASE("1-D example: k-medoids optimum over all medoid pairs") {
    const auto pts = line({0, 1, 2, 10, 11, 12});
    const auto run = kmedoids(from_points(pts), 2, 3);
    CHECK(std::set<std::size_t>(run.partition.medoids.begin(), run.partition.medoids.end()) ==
          std::set<std::size_t>{1, 4});
    CHECK(std::abs(run.objective - oracle::best_medoid_cost(pts, 2)) < 1e-12);
}

TEST_CASE("identical points, k=2") {
    const oracle::Points pts(6, std::vector<double>{1.5, -2.0});
    const auto run = kmedoids(from_points(pts), 2, 0);
    CHECK(run.partition.k == 2);
    for (auto s : run.partition.sizes()) CHECK(s >= 1);
    CHECK(run.objective == 0.0);
    const auto km = kmeans(from_points(pts), 2, 0);
    for (auto s : km.partition.sizes()) CHECK(s >= 1);
}

TEST_CASE("k-medoids matches exhaustive search for small N") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int rep = 0; rep < 60; ++rep) {
        const std::size_t n = 3 + rep % 6;  // 3..8
        oracle::Points pts(n, std::vector<double>(2));
        for (auto& x : pts)
            for (auto& v : x) v = u(rng);
        for (int k = 2; k <= static_cast<int>(std::min<std::size_t>(n, 4)); ++k) {
            const auto run = kmedoids(from_points(pts), k, 0);
            CHECK(std::abs(medoid_cost(pts, run.partition) - oracle::best_medoid_cost(pts, k)) < 1e-9);
        }
    }
}

TEST_CASE("objective traces never increase") {
    std::mt19937_64 rng(13);
    const auto pts = blobs(rng, 4, 25, 3.0);
    const auto emb = from_points(pts);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto km = kmeans_single(emb, 4, seed);
        for (std::size_t t = 1; t < km.trace.size(); ++t) CHECK(km.trace[t] <= km.trace[t - 1] + 1e-9);
    }
    const auto pam = kmedoids(emb, 4, 0);
    for (std::size_t t = 1; t < pam.trace.size(); ++t) CHECK(pam.trace[t] <= pam.trace[t - 1] + 1e-12);
}

TEST_CASE("clusterers are deterministic and order-invariant up to labels") {
    std::mt19937_64 rng(19);
    const auto pts = blobs(rng, 3, 20, 1.0);
    const auto emb = from_points(pts);
    CHECK(kmeans(emb, 3, 5).partition.labels == kmeans(emb, 3, 5).partition.labels);
    CHECK(kmedoids(emb, 3, 5).partition.labels == kmedoids(emb, 3, 5).partition.labels);

    std::vector<std::size_t> perm(pts.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    oracle::Points shuffled;
    for (auto i : perm) shuffled.push_back(pts[i]);
    const auto emb2 = from_points(shuffled);
    for (auto method : {0, 1}) {
        const auto a = method ? kmedoids(emb, 3, 5).partition : kmeans(emb, 3, 5).partition;
        const auto b = method ? kmedoids(emb2, 3, 5).partition : kmeans(emb2, 3, 5).partition;
        std::vector<int> back(pts.size());
        for (std::size_t r = 0; r < perm.size(); ++r) back[perm[r]] = b.labels[r];
        CHECK(same_grouping(a.labels, back));
    }
}

TEST_CASE("silhouette: coincident groups score 1") {
    oracle::Points pts;
    for (int i = 0; i < 4; ++i) pts.push_back({0, 0});
    for (int i = 0; i < 3; ++i) pts.push_back({3, 4});
    const auto part = canonical_partition({0, 0, 0, 0, 1, 1, 1}, 2);
    const auto rep = silhouette(from_points(pts), part);
    for (double s : rep.per_subject) CHECK(s == 1.0);
    CHECK(rep.average == 1.0);
}

TEST_CASE("silhouette: equidistant point scores 0") {
    const auto pts = line({0, 5, 10});
    const auto part = canonical_partition({0, 0, 1}, 2);
    const auto rep = silhouette(from_points(pts), part);
    CHECK(rep.per_subject[1] == 0.0);  // a = 5, b = 5
    CHECK(rep.per_subject[2] == 0.0);  // singleton
}

TEST_CASE("silhouette matches the direct formula") {
    const auto pts = line({0, 1, 2, 10, 11, 12});
    const std::vector<int> labels{0, 0, 0, 1, 1, 1};
    const auto rep = silhouette(from_points(pts), canonical_partition(labels, 2));
    const auto ref = oracle::silhouette(pts, labels);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(rep.per_subject[i] - ref[i]) < 1e-12);
    const double mean = std::accumulate(ref.begin(), ref.end(), 0.0) / 6;
    CHECK(std::abs(rep.average - mean) < 1e-12);

    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> lab(0, 3);
    for (int rep_i = 0; rep_i < 30; ++rep_i) {
        const auto x = blobs(rng, 3, 8, 4.0);
        std::vector<int> l(x.size());
        for (auto& v : l) v = lab(rng);
        int k = 0;
        std::vector<int> used(4, -1);
        for (auto& v : l) {
            if (used[v] < 0) used[v] = k++;
            v = used[v];
        }
        const auto r = silhouette(from_points(x), canonical_partition(l, k));
        const auto o = oracle::silhouette(x, l);
        double sum = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            CHECK(std::abs(r.per_subject[i] - o[i]) < 1e-12);
            CHECK(r.per_subject[i] >= -1.0);
            CHECK(r.per_subject[i] <= 1.0);
            sum += r.per_subject[i];
        }
        CHECK(r.average == sum / static_cast<double>(x.size()));
    }
}

TEST_CASE("select_k finds planted groups") {
    std::mt19937_64 rng(99);
    const auto pts = blobs(rng, 3, 30, 0.5);
    for (auto method : {ClusteringMethod::kmeans, ClusteringMethod::kmedoids}) {
        const auto sel = select_k(from_points(pts), 8, method, 4);
        CHECK(sel.best_k == 3);
        REQUIRE(sel.table.size() == 7);
        for (std::size_t i = 0; i < sel.table.size(); ++i) CHECK(sel.table[i].k == static_cast<int>(i) + 2);
        CHECK(sel.best_score() == sel.best_report.average);
    }
}

TEST_CASE("select_k over a single candidate") {
    std::mt19937_64 rng(2);
    const auto pts = blobs(rng, 4, 10, 1.0);
    const auto sel = select_k(from_points(pts), 2, ClusteringMethod::kmedoids, 0);
    CHECK(sel.best_k == 2);
    CHECK(sel.table.size() == 1);
    CHECK(std::isinf(sel.second_score()));
    CHECK(sel.second_score() < 0);
}

TEST_CASE("select_k rejects impossible ranges") {
    const auto pts = line({0, 1, 2});
    CHECK_THROWS_AS(select_k(from_points(pts), 1, ClusteringMethod::kmedoids, 0), Error);
    CHECK_THROWS_AS(select_k(from_points(pts), 4, ClusteringMethod::kmedoids, 0), Error);
}

TEST_CASE("select_k is identical across worker counts") {
    std::mt19937_64 rng(8);
    const auto pts = blobs(rng, 4, 40, 2.0);
    const auto emb = from_points(pts);
    for (auto method : {ClusteringMethod::kmeans, ClusteringMethod::kmedoids}) {
        const auto a = select_k(emb, 6, method, 11, 1);
        const auto b = select_k(emb, 6, method, 11, 4);
        CHECK(a.best_k == b.best_k);
        CHECK(a.best.labels == b.best.labels);
        for (std::size_t i = 0; i < a.table.size(); ++i) CHECK(a.table[i].silhouette == b.table[i].silhouette);
    }
}
