#pragma once

// Deliberately naive reference implementations. None of them call into the
// library; they are slow and only meant for small instances.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace oracle {

// Textbook recursive Cox-de Boor on a full knot vector. The right end of the
// span belongs to the last interval with positive length.
inline double bspline(const std::vector<double>& u, int j, int d, double t) {
    if (d == 0) {
        if (u[j] < u[j + 1] && u[j] <= t && t < u[j + 1]) return 1.0;
        if (t == u.back() && u[j] < u[j + 1] && u[j + 1] == u.back()) return 1.0;
        return 0.0;
    }
    double left = 0.0, right = 0.0;
    if (u[j + d] != u[j]) left = (t - u[j]) / (u[j + d] - u[j]) * bspline(u, j, d - 1, t);
    if (u[j + d + 1] != u[j + 1]) right = (u[j + d + 1] - t) / (u[j + d + 1] - u[j + 1]) * bspline(u, j + 1, d - 1, t);
    return left + right;
}

inline std::vector<double> clamped_knots(double lo, double hi, const std::vector<double>& interior) {
    std::vector<double> u(4, lo);
    u.insert(u.end(), interior.begin(), interior.end());
    u.insert(u.end(), 4, hi);
    return u;
}

// Design row: 1 followed by B_2..B_p.
inline std::vector<double> design_row(const std::vector<double>& u, double t) {
    const int p = static_cast<int>(u.size()) - 4;
    std::vector<double> row{1.0};
    for (int j = 1; j < p; ++j) row.push_back(bspline(u, j, 3, t));
    return row;
}

// Dense Gaussian elimination with partial pivoting.
inline std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t k = r + 1; k < n; ++k) s -= a[r][k] * x[k];
        x[r] = s / a[r][r];
    }
    return x;
}

// (G'G + lambda * diag(0,1,...,1))^{-1} G'y
inline std::vector<double> ridge(const std::vector<std::vector<double>>& g, const std::vector<double>& y,
                                 double lambda) {
    const std::size_t p = g.front().size();
    std::vector<std::vector<double>> a(p, std::vector<double>(p, 0.0));
    std::vector<double> b(p, 0.0);
    for (std::size_t r = 0; r < g.size(); ++r)
        for (std::size_t i = 0; i < p; ++i) {
            b[i] += g[r][i] * y[r];
            for (std::size_t j = 0; j < p; ++j) a[i][j] += g[r][i] * g[r][j];
        }
    for (std::size_t i = 1; i < p; ++i) a[i][i] += lambda;
    return solve(a, b);
}

using Points = std::vector<std::vector<double>>;

inline double dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(s);
}

// s(i) = (b - a) / max(a, b), singletons 0.
inline std::vector<double> silhouette(const Points& x, const std::vector<int>& labels) {
    const std::size_t n = x.size();
    const int k = *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<double> s(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> sum(k, 0.0);
        std::vector<int> cnt(k, 0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            sum[labels[j]] += dist(x[i], x[j]);
            cnt[labels[j]] += 1;
        }
        if (cnt[labels[i]] == 0) continue;
        const double a = sum[labels[i]] / cnt[labels[i]];
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c)
            if (c != labels[i] && cnt[c] > 0) b = std::min(b, sum[c] / cnt[c]);
        const double m = std::max(a, b);
        s[i] = m > 0 ? (b - a) / m : 0.0;
    }
    return s;
}

// Minimum total distance to the nearest medoid over every k-subset.
inline double best_medoid_cost(const Points& x, int k) {
    const std::size_t n = x.size();
    double best = std::numeric_limits<double>::infinity();
    std::vector<bool> pick(n, false);
    std::fill(pick.begin(), pick.begin() + k, true);
    do {
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double m = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j)
                if (pick[j]) m = std::min(m, dist(x[i], x[j]));
            cost += m;
        }
        best = std::min(best, cost);
    } while (std::prev_permutation(pick.begin(), pick.end()));
    return best;
}

// Smallest within-cluster sum of squares over every 2-partition.
inline double best_two_partition_wcss(const Points& x) {
    const std::size_t n = x.size();
    double best = std::numeric_limits<double>::infinity();
    for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
        double wcss = 0.0;
        for (int side = 0; side < 2; ++side) {
            std::vector<double> mean(x[0].size(), 0.0);
            int cnt = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (((mask >> i) & 1u) == static_cast<unsigned>(side)) {
                    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += x[i][j];
                    ++cnt;
                }
            for (auto& m : mean) m /= cnt;
            for (std::size_t i = 0; i < n; ++i)
                if (((mask >> i) & 1u) == static_cast<unsigned>(side)) wcss += std::pow(dist(x[i], mean), 2);
        }
        best = std::min(best, wcss);
    }
    return best;
}

// Agreement metrics straight from their definitions.

inline double choose(double n, double k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= static_cast<int>(k); ++i) r = r * (n - k + i) / i;
    return r;
}

inline double ari(const std::vector<int>& a, const std::vector<int>& b) {
    const std::size_t n = a.size();
    double both = 0, in_a = 0, in_b = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool sa = a[i] == a[j], sb = b[i] == b[j];
            both += sa && sb;
            in_a += sa;
            in_b += sb;
        }
    const double pairs = n * (n - 1) / 2.0;
    const double expected = in_a * in_b / pairs;
    const double max_index = (in_a + in_b) / 2.0;
    if (max_index == expected) return 1.0;
    return (both - expected) / (max_index - expected);
}

inline std::vector<double> counts(const std::vector<int>& a) {
    std::vector<int> s = a;
    std::sort(s.begin(), s.end());
    std::vector<double> c;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i == 0 || s[i] != s[i - 1]) c.push_back(0);
        c.back() += 1;
    }
    return c;
}

inline double entropy(const std::vector<int>& a) {
    double h = 0.0, n = static_cast<double>(a.size());
    for (double c : counts(a)) h -= c / n * std::log(c / n);
    return h;
}

inline double mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
    const double n = static_cast<double>(a.size());
    double mi = 0.0;
    std::vector<int> ua = a, ub = b;
    std::sort(ua.begin(), ua.end());
    ua.erase(std::unique(ua.begin(), ua.end()), ua.end());
    std::sort(ub.begin(), ub.end());
    ub.erase(std::unique(ub.begin(), ub.end()), ub.end());
    for (int x : ua)
        for (int y : ub) {
            double nij = 0, ai = 0, bj = 0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                nij += a[i] == x && b[i] == y;
                ai += a[i] == x;
                bj += b[i] == y;
            }
            if (nij > 0) mi += nij / n * std::log(n * nij / (ai * bj));
        }
    return mi;
}

// Expected MI under the permutation model, summing the hypergeometric
// probabilities with exact binomials.
inline double expected_mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
    const double n = static_cast<double>(a.size());
    double e = 0.0;
    for (double ai : counts(a))
        for (double bj : counts(b))
            for (double nij = std::max(1.0, ai + bj - n); nij <= std::min(ai, bj); nij += 1) {
                const double prob = choose(bj, nij) * choose(n - bj, ai - nij) / choose(n, ai);
                e += prob * nij / n * std::log(n * nij / (ai * bj));
            }
    return e;
}

inline double ami_max(const std::vector<int>& a, const std::vector<int>& b) {
    const double mi = mutual_information(a, b), emi = expected_mutual_information(a, b);
    const double denom = std::max(entropy(a), entropy(b)) - emi;
    if (denom == 0.0) return 1.0;
    return (mi - emi) / denom;
}

// Best label matching by enumerating every injection of the smaller label set.
inline double accuracy(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> ua = a, ub = b;
    std::sort(ua.begin(), ua.end());
    ua.erase(std::unique(ua.begin(), ua.end()), ua.end());
    std::sort(ub.begin(), ub.end());
    ub.erase(std::unique(ub.begin(), ub.end()), ub.end());
    // pad b's labels with sentinels so a permutation covers every injection
    std::vector<int> targets = ub;
    while (targets.size() < ua.size()) targets.push_back(std::numeric_limits<int>::min() + static_cast<int>(targets.size()));
    std::sort(targets.begin(), targets.end());
    double best = 0.0;
    do {
        double hit = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const auto pos = std::find(ua.begin(), ua.end(), a[i]) - ua.begin();
            hit += targets[pos] == b[i];
        }
        best = std::max(best, hit);
    } while (std::next_permutation(targets.begin(), targets.end()));
    return best / static_cast<double>(a.size());
}

}  // namespace oracle
