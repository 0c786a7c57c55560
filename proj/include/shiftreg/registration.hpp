#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shiftreg/cluster.hpp"
#include "shiftreg/dataset.hpp"
#include "shiftreg/spline.hpp"

namespace shiftreg {

struct RegistrationConfig {
    std::vector<double> shift_grid{0, 1, 2, 3, 4};
    int max_clusters = 8;            // M
    double trim_fraction = 0.95;     // alpha
    double threshold = 0.45;         // tau
    int max_iters = 10;              // hard iteration cap
    double lambda = 0.03;
    std::vector<double> interior_knots{8, 13};
    BoundaryPolicy boundary_policy = BoundaryPolicy::adaptive;
    ClusteringMethod clustering_method = ClusteringMethod::kmedoids;
    std::uint64_t seed = 0;
    std::size_t min_obs_per_fit = 2;
    int workers = 1;

    // Throws Error(validation) naming the offending field.
    void validate() const;
    EmbeddingSettings embedding_settings() const;
};

struct TrimmedCentroid {
    std::vector<std::size_t> selected;  // S, sorted by subject index
    std::vector<double> trimmed;        // gamma-bar
    std::vector<double> raw;            // beta-bar
};

// ceil(alpha * |cluster|), computed so that exact products are not bumped
// up by rounding noise.
std::size_t trimmed_size(std::size_t cluster_size, double alpha);

TrimmedCentroid trimmed_centroid(const ActiveEmbedding& emb, std::span<const std::size_t> cluster, double alpha);

struct ClusterState {
    int iteration = 0;
    std::vector<std::size_t> prior_shift_index;  // shifts used for clustering
    std::vector<std::size_t> shift_index;        // shifts after the update
    Partition partition;
    std::vector<std::vector<std::size_t>> trimmed_sets;
    std::vector<std::vector<double>> raw_centroids;
    std::vector<std::vector<double>> trimmed_centroids;
    std::vector<KScore> silhouette_table;
    int K = 0;
};

struct ShiftUpdate {
    std::vector<std::size_t> shift_index;
    std::vector<std::size_t> stuck_subjects;  // no usable cell; previous shift kept
};

// Per subject: the usable grid index closest (squared distance) to the
// trimmed centroid of its cluster; ties go to the smaller shift.
ShiftUpdate update_shifts(const EmbeddingTensor& tensor, const ClusterState& state);

enum class Termination { early_quality, stabilized, iter_cap };
enum class StopDecision { proceed, early_quality, stabilized, iter_cap };

const char* to_string(Termination t);

struct IterationSummary {
    int iteration = 0;
    int K = 0;
    double best_silhouette = 0.0;
    double second_silhouette = 0.0;  // -inf when only one candidate k
    std::vector<KScore> table;
    std::vector<std::size_t> cluster_sizes;
    std::vector<std::size_t> trimmed_sizes;
    std::size_t shifts_changed = 0;
};

StopDecision check_stopping(std::span<const IterationSummary> history, const RegistrationConfig& config);

struct RegistrationResult {
    std::vector<std::size_t> shift_index;
    std::vector<double> shifts;
    std::vector<int> labels;                         // 0-based cluster per subject
    std::vector<std::vector<std::size_t>> clusters;  // final S sets after reassignment
    int selected_K = 0;
    std::vector<IterationSummary> history;
    Termination termination = Termination::iter_cap;
    std::vector<std::size_t> reassigned;  // subjects placed by the final joint search
    std::size_t flagged_cells = 0;
};

// Reassigns every subject outside the trimmed sets by a joint argmin over
// (shift, cluster); ties prefer the smaller shift, then the smaller cluster.
RegistrationResult finalize(const EmbeddingTensor& tensor, const ClusterState& last_state);

ActiveEmbedding active_embedding(const EmbeddingTensor& tensor, std::span<const std::size_t> shift_index);

// Initial shifts: the zero shift, or the usable shift nearest to zero.
std::vector<std::size_t> initial_shifts(const EmbeddingTensor& tensor);

// Iterative loop on a prebuilt tensor.
RegistrationResult register_embedding(const EmbeddingTensor& tensor, const RegistrationConfig& config);

// Builds the embedding, iterates and finalizes.
RegistrationResult register_cohort(const CohortDataset& data, const RegistrationConfig& config);

}  // namespace shiftreg
