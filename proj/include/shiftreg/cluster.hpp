#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace shiftreg {

// Row-major N x p matrix; row i is the embedding of subject i at its
// current shift.
class ActiveEmbedding {
public:
    ActiveEmbedding() = default;
    ActiveEmbedding(std::size_t n, std::size_t p) : n_(n), p_(p), data_(n * p, 0.0) {}
    ActiveEmbedding(std::size_t n, std::size_t p, std::vector<double> data);

    std::size_t rows() const { return n_; }
    std::size_t dim() const { return p_; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * p_, p_}; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * p_, p_}; }

private:
    std::size_t n_ = 0;
    std::size_t p_ = 0;
    std::vector<double> data_;
};

double squared_distance(std::span<const double> a, std::span<const double> b);
double distance(std::span<const double> a, std::span<const double> b);

// Dense symmetric Euclidean distance matrix.
class DistanceMatrix {
public:
    DistanceMatrix(const ActiveEmbedding& emb, int workers = 1);

    std::size_t size() const { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
    std::span<const double> row(std::size_t i) const { return {d_.data() + i * n_, n_}; }

private:
    std::size_t n_;
    std::vector<double> d_;
};

// Labels are 0-based and canonical: clusters are numbered in order of
// their first member.
struct Partition {
    std::vector<int> labels;
    int k = 0;
    std::vector<std::size_t> medoids;  // k-medoids only, indexed by label

    std::vector<std::vector<std::size_t>> members() const;
    std::vector<std::size_t> sizes() const;
};

// Relabels in first-appearance order and checks every label is used.
Partition canonical_partition(std::vector<int> labels, int k, std::vector<std::size_t> medoids = {});

enum class ClusteringMethod { kmeans, kmedoids };

struct ClusterRun {
    Partition partition;
    double objective = 0.0;      // WCSS for k-means, total distance for k-medoids
    std::vector<double> trace;   // objective after each iteration / swap
};

constexpr int kKMeansRestarts = 5;
constexpr int kKMeansMaxIter = 300;

ClusterRun kmeans(const ActiveEmbedding& emb, int k, std::uint64_t seed);
ClusterRun kmeans_single(const ActiveEmbedding& emb, int k, std::uint64_t seed);

// PAM build + swap. When there are at most a few thousand medoid subsets the
// optimum is found by enumeration instead. Both paths are deterministic; the
// seed is accepted for interface symmetry with kmeans.
ClusterRun kmedoids(const DistanceMatrix& dist, int k, std::uint64_t seed);
ClusterRun kmedoids(const ActiveEmbedding& emb, int k, std::uint64_t seed);

struct SilhouetteReport {
    std::vector<double> per_subject;
    double average = 0.0;
};

SilhouetteReport silhouette(const DistanceMatrix& dist, const Partition& part);
SilhouetteReport silhouette(const ActiveEmbedding& emb, const Partition& part);

struct KScore {
    int k = 0;
    double silhouette = 0.0;
};

struct KSelection {
    int best_k = 0;
    Partition best;
    SilhouetteReport best_report;
    std::vector<KScore> table;  // k = 2..M in order
    double best_score() const;
    double second_score() const;  // max over k != best_k; -inf if M == 2
};

KSelection select_k(const ActiveEmbedding& emb, int max_k, ClusteringMethod method, std::uint64_t seed,
                    int workers = 1);
KSelection select_k(const ActiveEmbedding& emb, const DistanceMatrix& dist, int max_k, ClusteringMethod method,
                    std::uint64_t seed, int workers = 1);

void write_silhouette_table(std::ostream& out, const std::vector<KScore>& table);

// splitmix64 step, used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace shiftreg
