#include "shiftreg/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "shiftreg/error.hpp"

namespace shiftreg {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b) {
        throw Error(ErrorKind::validation,
                    "length mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
    }
}

// Dense contingency table with labels remapped to 0..k-1.
struct Contingency {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> table;
    std::vector<double> row_sums;
    std::vector<double> col_sums;
    double n = 0.0;
};

std::vector<std::size_t> dense_labels(std::span<const int> labels, std::size_t& k) {
    std::map<int, std::size_t> ids;
    for (int l : labels) ids.emplace(l, 0);
    std::size_t next = 0;
    for (auto& [l, id] : ids) id = next++;
    k = next;
    std::vector<std::size_t> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = ids[labels[i]];
    return out;
}

Contingency contingency(std::span<const int> a, std::span<const int> b) {
    check_lengths(a.size(), b.size());
    if (a.empty()) throw Error(ErrorKind::validation, "agreement metrics need at least one subject");
    Contingency c;
    const auto da = dense_labels(a, c.rows);
    const auto db = dense_labels(b, c.cols);
    c.table.assign(c.rows * c.cols, 0.0);
    c.row_sums.assign(c.rows, 0.0);
    c.col_sums.assign(c.cols, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        c.table[da[i] * c.cols + db[i]] += 1.0;
        c.row_sums[da[i]] += 1.0;
        c.col_sums[db[i]] += 1.0;
    }
    c.n = static_cast<double>(a.size());
    return c;
}

double comb2(double x) { return x * (x - 1.0) / 2.0; }

double entropy(const std::vector<double>& counts, double n) {
    double h = 0.0;
    for (double c : counts)
        if (c > 0) h -= c / n * std::log(c / n);
    return h;
}

}  // namespace

RecoveryMetrics recovery(std::span<const double> true_shifts, std::span<const double> estimated,
                         double runtime_minutes) {
    check_lengths(true_shifts.size(), estimated.size());
    if (true_shifts.empty()) throw Error(ErrorKind::validation, "recovery metrics need at least one subject");
    RecoveryMetrics m;
    for (std::size_t i = 0; i < true_shifts.size(); ++i) {
        const double err = std::abs(estimated[i] - true_shifts[i]);
        m.exact_rate += err < 1e-9;
        m.within_one_rate += err <= 1.0 + 1e-9;
        m.mae_days += err;
    }
    const auto n = static_cast<double>(true_shifts.size());
    m.exact_rate /= n;
    m.within_one_rate /= n;
    m.mae_days /= n;
    m.runtime_minutes = runtime_minutes;
    return m;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    const Contingency c = contingency(a, b);
    double index = 0.0;
    for (double v : c.table) index += comb2(v);
    double sum_a = 0.0, sum_b = 0.0;
    for (double v : c.row_sums) sum_a += comb2(v);
    for (double v : c.col_sums) sum_b += comb2(v);
    const double total = comb2(c.n);
    const double expected = total > 0 ? sum_a * sum_b / total : 0.0;
    const double max_index = 0.5 * (sum_a + sum_b);
    const double denom = max_index - expected;
    if (denom == 0.0) return 1.0;  // both partitions trivial in the same way
    return (index - expected) / denom;
}

double adjusted_mutual_information(std::span<const int> a, std::span<const int> b) {
    const Contingency c = contingency(a, b);
    if ((c.rows == 1 && c.cols == 1) ||
        (c.rows == static_cast<std::size_t>(c.n) && c.cols == static_cast<std::size_t>(c.n)))
        return 1.0;
    const double n = c.n;
    double mi = 0.0;
    for (std::size_t i = 0; i < c.rows; ++i)
        for (std::size_t j = 0; j < c.cols; ++j) {
            const double nij = c.table[i * c.cols + j];
            if (nij > 0) mi += nij / n * std::log(n * nij / (c.row_sums[i] * c.col_sums[j]));
        }

    // expected MI under the hypergeometric (fixed marginals) model
    double emi = 0.0;
    const double lg_n = std::lgamma(n + 1);
    for (double ai : c.row_sums) {
        for (double bj : c.col_sums) {
            const double lo = std::max(1.0, ai + bj - n);
            const double hi = std::min(ai, bj);
            for (double nij = lo; nij <= hi; nij += 1.0) {
                const double term = nij / n * std::log(n * nij / (ai * bj));
                const double log_p = std::lgamma(ai + 1) + std::lgamma(bj + 1) + std::lgamma(n - ai + 1) +
                                     std::lgamma(n - bj + 1) - lg_n - std::lgamma(nij + 1) -
                                     std::lgamma(ai - nij + 1) - std::lgamma(bj - nij + 1) -
                                     std::lgamma(n - ai - bj + nij + 1);
                emi += term * std::exp(log_p);
            }
        }
    }
    const double norm = std::max(entropy(c.row_sums, n), entropy(c.col_sums, n));
    const double denom = norm - emi;
    if (std::abs(denom) < std::numeric_limits<double>::epsilon()) return mi - emi == 0.0 ? 1.0 : 0.0;
    return (mi - emi) / denom;
}

std::vector<int> max_weight_assignment(const std::vector<double>& weights, std::size_t rows, std::size_t cols) {
    // Hungarian algorithm (potentials form) on a square cost matrix.
    const std::size_t n = std::max(rows, cols);
    double wmax = 0.0;
    for (double w : weights) wmax = std::max(wmax, w);
    auto cost = [&](std::size_t i, std::size_t j) {
        const double w = (i < rows && j < cols) ? weights[i * cols + j] : 0.0;
        return wmax - w;
    };
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> out(rows, -1);
    for (std::size_t j = 1; j <= n; ++j) {
        const std::size_t i = match[j] - 1;
        if (i < rows && j - 1 < cols) out[i] = static_cast<int>(j - 1);
    }
    return out;
}

double clustering_accuracy(std::span<const int> a, std::span<const int> b) {
    const Contingency c = contingency(a, b);
    const auto assign = max_weight_assignment(c.table, c.rows, c.cols);
    double matched = 0.0;
    for (std::size_t i = 0; i < c.rows; ++i)
        if (assign[i] >= 0) matched += c.table[i * c.cols + static_cast<std::size_t>(assign[i])];
    return matched / c.n;
}

AgreementMetrics agreement(std::span<const int> true_labels, std::span<const int> pred_labels) {
    return AgreementMetrics{adjusted_rand_index(true_labels, pred_labels),
                            adjusted_mutual_information(true_labels, pred_labels),
                            clustering_accuracy(true_labels, pred_labels)};
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw Error(ErrorKind::validation, "quantile of empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

Interval summarize(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorKind::validation, "summarize: no replicates");
    Interval out;
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(values.size());
    std::vector<double> copy(values.begin(), values.end());
    out.lower = quantile(copy, 0.025);
    out.upper = quantile(std::move(copy), 0.975);
    return out;
}

ReplicateSummary summarize(std::span<const RecoveryMetrics> replicates) {
    if (replicates.empty()) throw Error(ErrorKind::validation, "summarize: no replicates");
    std::vector<double> e, w, m, r;
    for (const auto& x : replicates) {
        e.push_back(x.exact_rate);
        w.push_back(x.within_one_rate);
        m.push_back(x.mae_days);
        r.push_back(x.runtime_minutes);
    }
    return ReplicateSummary{replicates.size(), summarize(e), summarize(w), summarize(m), summarize(r)};
}

std::vector<bool> comparison_profile_mask(const CohortDataset& data) {
    std::vector<bool> keep(data.size(), false);
    for (std::size_t i = 0; i < data.size(); ++i) {
        bool early = false, mid = false;
        for (const auto& o : data.trajectories[i].observations) {
            early = early || (o.time >= 0.0 && o.time <= 8.0);
            mid = mid || (o.time > 8.0 && o.time <= 13.0);
        }
        keep[i] = early && mid;
    }
    return keep;
}

}  // namespace shiftreg
