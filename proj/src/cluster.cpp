#include "shiftreg/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "shiftreg/error.hpp"
#include "shiftreg/parallel.hpp"

namespace shiftreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_k(std::size_t n, int k) {
    if (k < 2 || static_cast<std::size_t>(k) > n) {
        throw Error(ErrorKind::validation,
                    "cluster count k=" + std::to_string(k) + " out of range [2, " + std::to_string(n) + "]");
    }
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

ActiveEmbedding::ActiveEmbedding(std::size_t n, std::size_t p, std::vector<double> data)
    : n_(n), p_(p), data_(std::move(data)) {
    if (data_.size() != n * p) throw Error(ErrorKind::validation, "embedding data has wrong size");
    for (double v : data_) {
        if (!std::isfinite(v)) throw Error(ErrorKind::numeric, "embedding contains non-finite values");
    }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

double distance(std::span<const double> a, std::span<const double> b) { return std::sqrt(squared_distance(a, b)); }

DistanceMatrix::DistanceMatrix(const ActiveEmbedding& emb, int workers) : n_(emb.rows()), d_(n_ * n_, 0.0) {
    parallel_for(n_, workers, [&](std::size_t i) {
        for (std::size_t j = 0; j < n_; ++j) d_[i * n_ + j] = i == j ? 0.0 : distance(emb.row(i), emb.row(j));
    });
}

std::vector<std::vector<std::size_t>> Partition::members() const {
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < labels.size(); ++i) out[static_cast<std::size_t>(labels[i])].push_back(i);
    return out;
}

std::vector<std::size_t> Partition::sizes() const {
    std::vector<std::size_t> out(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++out[static_cast<std::size_t>(l)];
    return out;
}

Partition canonical_partition(std::vector<int> labels, int k, std::vector<std::size_t> medoids) {
    std::vector<int> remap(static_cast<std::size_t>(k), -1);
    int next = 0;
    for (int& l : labels) {
        if (l < 0 || l >= k) throw Error(ErrorKind::validation, "label out of range");
        auto& r = remap[static_cast<std::size_t>(l)];
        if (r < 0) r = next++;
        l = r;
    }
    if (next != k) throw Error(ErrorKind::validation, "partition has empty clusters");
    std::vector<std::size_t> reordered;
    if (!medoids.empty()) {
        reordered.resize(medoids.size());
        for (std::size_t c = 0; c < medoids.size(); ++c) reordered[static_cast<std::size_t>(remap[c])] = medoids[c];
    }
    return Partition{std::move(labels), k, std::move(reordered)};
}

// ---------------------------------------------------------------- k-means

ClusterRun kmeans_single(const ActiveEmbedding& emb, int k, std::uint64_t seed) {
    const std::size_t n = emb.rows();
    const std::size_t p = emb.dim();
    check_k(n, k);
    const auto kk = static_cast<std::size_t>(k);
    std::mt19937_64 rng(seed);

    // k-means++ seeding
    std::vector<std::size_t> chosen;
    std::vector<char> is_chosen(n, 0);
    chosen.push_back(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
    is_chosen[chosen.back()] = 1;
    std::vector<double> d2(n, kInf);
    while (chosen.size() < kk) {
        const auto last = emb.row(chosen.back());
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(emb.row(i), last));
            if (!is_chosen[i]) total += d2[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            double u = std::uniform_real_distribution<double>(0.0, total)(rng);
            for (std::size_t i = 0; i < n; ++i) {
                if (is_chosen[i] || d2[i] <= 0.0) continue;
                pick = i;
                u -= d2[i];
                if (u <= 0.0) break;
            }
        }
        if (pick == n) {
            // remaining points coincide with chosen centers
            std::vector<std::size_t> free;
            for (std::size_t i = 0; i < n; ++i)
                if (!is_chosen[i]) free.push_back(i);
            pick = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
        }
        chosen.push_back(pick);
        is_chosen[pick] = 1;
    }

    std::vector<double> centers(kk * p);
    for (std::size_t c = 0; c < kk; ++c) {
        const auto r = emb.row(chosen[c]);
        std::copy(r.begin(), r.end(), centers.begin() + static_cast<std::ptrdiff_t>(c * p));
    }
    auto center = [&](std::size_t c) { return std::span<const double>(centers.data() + c * p, p); };

    std::vector<int> labels(n, -1);
    std::vector<double> cost(n, 0.0);
    ClusterRun run;
    for (int iter = 0; iter < kKMeansMaxIter; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = kInf;
            for (std::size_t c = 0; c < kk; ++c) {
                const double d = squared_distance(emb.row(i), center(c));
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(c);
                }
            }
            if (labels[i] != best) changed = true;
            labels[i] = best;
            cost[i] = best_d;
        }
        // repair empty clusters with the point farthest from its center
        std::vector<std::size_t> counts(kk, 0);
        for (int l : labels) ++counts[static_cast<std::size_t>(l)];
        for (std::size_t c = 0; c < kk; ++c) {
            if (counts[c] > 0) continue;
            std::size_t far = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[static_cast<std::size_t>(labels[i])] < 2) continue;
                if (far == n || cost[i] > cost[far]) far = i;
            }
            --counts[static_cast<std::size_t>(labels[far])];
            labels[far] = static_cast<int>(c);
            cost[far] = 0.0;
            counts[c] = 1;
            changed = true;
        }
        std::fill(centers.begin(), centers.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = emb.row(i);
            double* dst = centers.data() + static_cast<std::size_t>(labels[i]) * p;
            for (std::size_t j = 0; j < p; ++j) dst[j] += r[j];
        }
        for (std::size_t c = 0; c < kk; ++c)
            for (std::size_t j = 0; j < p; ++j) centers[c * p + j] /= static_cast<double>(counts[c]);

        double wcss = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            wcss += squared_distance(emb.row(i), center(static_cast<std::size_t>(labels[i])));
        run.trace.push_back(wcss);
        if (!changed && iter > 0) break;
    }
    run.objective = run.trace.back();
    run.partition = canonical_partition(std::move(labels), k);
    return run;
}

ClusterRun kmeans(const ActiveEmbedding& emb, int k, std::uint64_t seed) {
    ClusterRun best;
    for (int r = 0; r < kKMeansRestarts; ++r) {
        ClusterRun run = kmeans_single(emb, k, mix_seed(seed, static_cast<std::uint64_t>(r)));
        if (r == 0 || run.objective < best.objective) best = std::move(run);
    }
    return best;
}

// -------------------------------------------------------------- k-medoids

namespace {

struct MedoidCache {
    std::vector<std::size_t> nearest;  // slot of nearest medoid
    std::vector<double> d_nearest;
    std::vector<double> d_second;
};

MedoidCache assign_to_medoids(const DistanceMatrix& dist, const std::vector<std::size_t>& medoids) {
    const std::size_t n = dist.size();
    MedoidCache cache{std::vector<std::size_t>(n), std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t o = 0; o < n; ++o) {
        double best = kInf;
        double second = kInf;
        std::size_t slot = 0;
        for (std::size_t m = 0; m < medoids.size(); ++m) {
            const double d = dist(o, medoids[m]);
            if (d < best) {
                second = best;
                best = d;
                slot = m;
            } else if (d < second) {
                second = d;
            }
        }
        cache.nearest[o] = slot;
        cache.d_nearest[o] = best;
        cache.d_second[o] = second;
    }
    return cache;
}

// Number of k-subsets of n items, saturating at `cap`.
std::size_t subsets_capped(std::size_t n, std::size_t k, std::size_t cap) {
    double c = 1.0;
    for (std::size_t i = 1; i <= k; ++i) {
        c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
        if (c > static_cast<double>(cap)) return cap + 1;
    }
    return static_cast<std::size_t>(std::llround(c));
}

constexpr std::size_t kExactMedoidSubsets = 5000;

ClusterRun finish_medoids(const DistanceMatrix& dist, int k, const std::vector<std::size_t>& medoids,
                          MedoidCache cache, ClusterRun run) {
    const std::size_t n = dist.size();
    std::vector<int> labels(n);
    for (std::size_t o = 0; o < n; ++o) labels[o] = static_cast<int>(cache.nearest[o]);
    // a medoid always belongs to its own cluster, even when it coincides with
    // another medoid
    for (std::size_t m = 0; m < medoids.size(); ++m) labels[medoids[m]] = static_cast<int>(m);
    run.objective = std::accumulate(cache.d_nearest.begin(), cache.d_nearest.end(), 0.0);
    run.partition = canonical_partition(std::move(labels), k, medoids);
    return run;
}

// Small instances: every medoid subset, first optimum in lexicographic order.
ClusterRun exact_medoids(const DistanceMatrix& dist, int k) {
    const std::size_t n = dist.size();
    const auto kk = static_cast<std::size_t>(k);
    std::vector<std::size_t> pick(kk), best;
    std::iota(pick.begin(), pick.end(), 0);
    double best_cost = kInf;
    while (true) {
        double cost = 0.0;
        for (std::size_t o = 0; o < n; ++o) {
            double m = kInf;
            for (auto c : pick) m = std::min(m, dist(o, c));
            cost += m;
        }
        if (cost < best_cost) {
            best_cost = cost;
            best = pick;
        }
        std::size_t i = kk;
        while (i > 0 && pick[i - 1] == n - kk + i - 1) --i;
        if (i == 0) break;
        ++pick[i - 1];
        for (std::size_t j = i; j < kk; ++j) pick[j] = pick[j - 1] + 1;
    }
    ClusterRun run;
    MedoidCache cache = assign_to_medoids(dist, best);
    run.trace.push_back(std::accumulate(cache.d_nearest.begin(), cache.d_nearest.end(), 0.0));
    return finish_medoids(dist, k, best, std::move(cache), std::move(run));
}

}  // namespace

ClusterRun kmedoids(const DistanceMatrix& dist, int k, std::uint64_t /*seed*/) {
    const std::size_t n = dist.size();
    check_k(n, k);
    const auto kk = static_cast<std::size_t>(k);
    if (subsets_capped(n, kk, kExactMedoidSubsets) <= kExactMedoidSubsets) return exact_medoids(dist, k);
    std::vector<std::size_t> medoids;
    std::vector<char> is_medoid(n, 0);

    // BUILD
    {
        std::size_t first = 0;
        double best = kInf;
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (double d : dist.row(j)) s += d;
            if (s < best) {
                best = s;
                first = j;
            }
        }
        medoids.push_back(first);
        is_medoid[first] = 1;
    }
    std::vector<double> nearest(dist.row(medoids[0]).begin(), dist.row(medoids[0]).end());
    while (medoids.size() < kk) {
        std::size_t pick = n;
        double best_gain = -1.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (is_medoid[j]) continue;
            double gain = 0.0;
            for (std::size_t i = 0; i < n; ++i) gain += std::max(0.0, nearest[i] - dist(i, j));
            if (gain > best_gain) {
                best_gain = gain;
                pick = j;
            }
        }
        medoids.push_back(pick);
        is_medoid[pick] = 1;
        for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], dist(i, pick));
    }

    // SWAP: best improving (medoid, non-medoid) exchange per pass, with the
    // per-candidate change for all medoids accumulated in one O(N) sweep.
    ClusterRun run;
    MedoidCache cache = assign_to_medoids(dist, medoids);
    auto total = [&] { return std::accumulate(cache.d_nearest.begin(), cache.d_nearest.end(), 0.0); };
    double td = total();
    run.trace.push_back(td);
    std::vector<double> removal(kk);
    std::vector<double> delta(kk);
    const int max_passes = 100 + 10 * static_cast<int>(n);
    for (int pass = 0; pass < max_passes; ++pass) {
        std::fill(removal.begin(), removal.end(), 0.0);
        for (std::size_t o = 0; o < n; ++o) removal[cache.nearest[o]] += cache.d_second[o] - cache.d_nearest[o];

        double best_delta = 0.0;
        std::size_t best_slot = kk;
        std::size_t best_cand = n;
        for (std::size_t c = 0; c < n; ++c) {
            if (is_medoid[c]) continue;
            std::copy(removal.begin(), removal.end(), delta.begin());
            double shared = 0.0;
            const auto drow = dist.row(c);
            for (std::size_t o = 0; o < n; ++o) {
                const double doc = drow[o];
                const double dn = cache.d_nearest[o];
                if (doc < dn) {
                    shared += doc - dn;
                    delta[cache.nearest[o]] += dn - cache.d_second[o];
                } else if (doc < cache.d_second[o]) {
                    delta[cache.nearest[o]] += doc - cache.d_second[o];
                }
            }
            for (std::size_t m = 0; m < kk; ++m) {
                const double change = delta[m] + shared;
                if (change < best_delta) {
                    best_delta = change;
                    best_slot = m;
                    best_cand = c;
                }
            }
        }
        if (best_slot == kk || best_delta > -1e-12 * (1.0 + td)) break;
        is_medoid[medoids[best_slot]] = 0;
        medoids[best_slot] = best_cand;
        is_medoid[best_cand] = 1;
        cache = assign_to_medoids(dist, medoids);
        const double next = total();
        if (next >= td) break;  // numerical stall
        td = next;
        run.trace.push_back(td);
    }

    return finish_medoids(dist, k, medoids, std::move(cache), std::move(run));
}

ClusterRun kmedoids(const ActiveEmbedding& emb, int k, std::uint64_t seed) {
    check_k(emb.rows(), k);
    return kmedoids(DistanceMatrix(emb), k, seed);
}

// ------------------------------------------------------------- silhouette

SilhouetteReport silhouette(const DistanceMatrix& dist, const Partition& part) {
    const std::size_t n = dist.size();
    if (part.labels.size() != n) throw Error(ErrorKind::validation, "partition size does not match embedding");
    if (part.k < 2) throw Error(ErrorKind::validation, "silhouette requires at least 2 clusters");
    const auto kk = static_cast<std::size_t>(part.k);
    const auto sizes = part.sizes();
    SilhouetteReport rep;
    rep.per_subject.assign(n, 0.0);
    std::vector<double> sums(kk);
    for (std::size_t i = 0; i < n; ++i) {
        const auto own = static_cast<std::size_t>(part.labels[i]);
        if (sizes[own] <= 1) continue;  // singleton convention: s = 0
        std::fill(sums.begin(), sums.end(), 0.0);
        const auto row = dist.row(i);
        for (std::size_t j = 0; j < n; ++j) sums[static_cast<std::size_t>(part.labels[j])] += row[j];
        const double a = sums[own] / static_cast<double>(sizes[own] - 1);
        double b = kInf;
        for (std::size_t c = 0; c < kk; ++c) {
            if (c == own || sizes[c] == 0) continue;
            b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
        }
        const double denom = std::max(a, b);
        double s = denom > 0.0 ? (b - a) / denom : 0.0;
        rep.per_subject[i] = std::clamp(s, -1.0, 1.0);
    }
    double total = 0.0;
    for (double s : rep.per_subject) total += s;
    rep.average = total / static_cast<double>(n);
    return rep;
}

SilhouetteReport silhouette(const ActiveEmbedding& emb, const Partition& part) {
    return silhouette(DistanceMatrix(emb), part);
}

// ------------------------------------------------------------ K selection

double KSelection::best_score() const {
    for (const auto& e : table)
        if (e.k == best_k) return e.silhouette;
    return -kInf;
}

double KSelection::second_score() const {
    double s = -kInf;
    for (const auto& e : table)
        if (e.k != best_k) s = std::max(s, e.silhouette);
    return s;
}

namespace {

void check_max_k(std::size_t n, int max_k) {
    if (max_k < 2) throw Error(ErrorKind::validation, "max_clusters must be >= 2");
    if (static_cast<std::size_t>(max_k) > n) {
        throw Error(ErrorKind::validation,
                    "max_clusters=" + std::to_string(max_k) + " exceeds cohort size " + std::to_string(n));
    }
}

}  // namespace

KSelection select_k(const ActiveEmbedding& emb, const DistanceMatrix& dist, int max_k, ClusteringMethod method,
                    std::uint64_t seed, int workers) {
    check_max_k(emb.rows(), max_k);
    const std::size_t count = static_cast<std::size_t>(max_k - 1);
    std::vector<Partition> parts(count);
    std::vector<SilhouetteReport> reports(count);
    parallel_for(count, workers, [&](std::size_t idx) {
        const int k = static_cast<int>(idx) + 2;
        const std::uint64_t s = mix_seed(seed, static_cast<std::uint64_t>(k));
        ClusterRun run = method == ClusteringMethod::kmeans ? kmeans(emb, k, s) : kmedoids(dist, k, s);
        reports[idx] = silhouette(dist, run.partition);
        parts[idx] = std::move(run.partition);
    });
    KSelection sel;
    std::size_t best = 0;
    for (std::size_t idx = 0; idx < count; ++idx) {
        sel.table.push_back({static_cast<int>(idx) + 2, reports[idx].average});
        if (reports[idx].average > reports[best].average) best = idx;  // ties keep the smaller k
    }
    sel.best_k = static_cast<int>(best) + 2;
    sel.best = std::move(parts[best]);
    sel.best_report = std::move(reports[best]);
    return sel;
}

KSelection select_k(const ActiveEmbedding& emb, int max_k, ClusteringMethod method, std::uint64_t seed,
                    int workers) {
    check_max_k(emb.rows(), max_k);
    return select_k(emb, DistanceMatrix(emb, workers), max_k, method, seed, workers);
}

void write_silhouette_table(std::ostream& out, const std::vector<KScore>& table) {
    out << "k,silhouette\n" << std::setprecision(12);
    for (const auto& e : table) out << e.k << ',' << e.silhouette << '\n';
}

}  // namespace shiftreg
