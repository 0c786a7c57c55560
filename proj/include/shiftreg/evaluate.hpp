#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "shiftreg/dataset.hpp"

namespace shiftreg {

struct RecoveryMetrics {
    double exact_rate = 0.0;
    double within_one_rate = 0.0;
    double mae_days = 0.0;
    double runtime_minutes = 0.0;
};

RecoveryMetrics recovery(std::span<const double> true_shifts, std::span<const double> estimated,
                         double runtime_minutes = 0.0);

struct AgreementMetrics {
    double ari = 0.0;
    double ami = 0.0;
    double acc = 0.0;
};

double adjusted_rand_index(std::span<const int> a, std::span<const int> b);
// Chance-adjusted mutual information, max(H_a, H_b) normalization.
double adjusted_mutual_information(std::span<const int> a, std::span<const int> b);
// Fraction matched under the optimal one-to-one label assignment.
double clustering_accuracy(std::span<const int> a, std::span<const int> b);
AgreementMetrics agreement(std::span<const int> true_labels, std::span<const int> pred_labels);

// Maximum-weight assignment on a rows x cols matrix (row-major). Returns the
// column assigned to each row, or -1 when rows > cols leaves it unmatched.
std::vector<int> max_weight_assignment(const std::vector<double>& weights, std::size_t rows, std::size_t cols);

struct Interval {
    double mean = 0.0;
    double lower = 0.0;  // empirical 2.5th percentile
    double upper = 0.0;  // empirical 97.5th percentile
};

// Linear-interpolated empirical quantile of unsorted data, q in [0,1].
double quantile(std::vector<double> values, double q);
Interval summarize(std::span<const double> values);

struct ReplicateSummary {
    std::size_t replicates = 0;
    Interval exact;
    Interval within_one;
    Interval mae;
    Interval runtime;
};

ReplicateSummary summarize(std::span<const RecoveryMetrics> replicates);

// Subjects with at least one observation in [0, 8] and one in (8, 13];
// everything else is excluded under the comparison profile.
std::vector<bool> comparison_profile_mask(const CohortDataset& data);

}  // namespace shiftreg
