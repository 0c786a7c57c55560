#include "shiftreg/registration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "shiftreg/error.hpp"
#include "shiftreg/parallel.hpp"

namespace shiftreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void invalid(const std::string& field, const std::string& why) {
    throw Error(ErrorKind::validation, "config field '" + field + "': " + why);
}

}  // namespace

void RegistrationConfig::validate() const {
    try {
        ShiftGrid grid(shift_grid);
    } catch (const Error& e) {
        invalid("shift_grid", e.what());
    }
    if (max_clusters < 2) invalid("max_clusters", "must be >= 2");
    if (!(trim_fraction > 0.0 && trim_fraction <= 1.0)) invalid("trim_fraction", "must lie in (0, 1]");
    if (!std::isfinite(threshold)) invalid("threshold", "must be finite");
    if (max_iters < 1) invalid("max_iters", "must be >= 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) invalid("lambda", "must be finite and >= 0");
    for (std::size_t i = 0; i < interior_knots.size(); ++i) {
        if (!std::isfinite(interior_knots[i])) invalid("interior_knots", "must be finite");
        if (i > 0 && interior_knots[i] < interior_knots[i - 1]) invalid("interior_knots", "must be nondecreasing");
    }
    if (min_obs_per_fit < 1) invalid("min_obs_per_fit", "must be >= 1");
}

EmbeddingSettings RegistrationConfig::embedding_settings() const {
    return EmbeddingSettings{interior_knots, boundary_policy, lambda, min_obs_per_fit, workers};
}

std::size_t trimmed_size(std::size_t cluster_size, double alpha) {
    const double x = alpha * static_cast<double>(cluster_size);
    const double r = std::round(x);
    double c = std::abs(x - r) <= 1e-9 * std::max(1.0, x) ? r : std::ceil(x);
    auto s = static_cast<std::size_t>(c);
    return std::clamp<std::size_t>(s, 1, cluster_size);
}

TrimmedCentroid trimmed_centroid(const ActiveEmbedding& emb, std::span<const std::size_t> cluster, double alpha) {
    if (cluster.empty()) throw Error(ErrorKind::validation, "trimmed_centroid: empty cluster");
    const std::size_t p = emb.dim();
    TrimmedCentroid out;
    out.raw.assign(p, 0.0);
    for (auto i : cluster) {
        const auto r = emb.row(i);
        for (std::size_t j = 0; j < p; ++j) out.raw[j] += r[j];
    }
    for (auto& v : out.raw) v /= static_cast<double>(cluster.size());

    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(cluster.size());
    for (auto i : cluster) dist.emplace_back(distance(emb.row(i), out.raw), i);
    std::sort(dist.begin(), dist.end());  // ties by subject index

    const std::size_t keep = trimmed_size(cluster.size(), alpha);
    out.selected.reserve(keep);
    for (std::size_t r = 0; r < keep; ++r) out.selected.push_back(dist[r].second);
    std::sort(out.selected.begin(), out.selected.end());

    out.trimmed.assign(p, 0.0);
    for (auto i : out.selected) {
        const auto r = emb.row(i);
        for (std::size_t j = 0; j < p; ++j) out.trimmed[j] += r[j];
    }
    for (auto& v : out.trimmed) v /= static_cast<double>(keep);
    return out;
}

ShiftUpdate update_shifts(const EmbeddingTensor& tensor, const ClusterState& state) {
    const std::size_t n = tensor.subjects();
    ShiftUpdate out;
    out.shift_index.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& centre = state.trimmed_centroids.at(static_cast<std::size_t>(state.partition.labels[i]));
        std::size_t best = tensor.shift_count();
        double best_d = kInf;
        for (std::size_t l = 0; l < tensor.shift_count(); ++l) {
            if (!tensor.usable(i, l)) continue;
            const double d = squared_distance(tensor.cell(i, l), centre);
            if (d < best_d) {
                best_d = d;
                best = l;
            }
        }
        if (best == tensor.shift_count()) {
            out.shift_index[i] = state.prior_shift_index.at(i);
            out.stuck_subjects.push_back(i);
        } else {
            out.shift_index[i] = best;
        }
    }
    return out;
}

const char* to_string(Termination t) {
    switch (t) {
        case Termination::early_quality: return "early_quality";
        case Termination::stabilized: return "stabilized";
        case Termination::iter_cap: return "iter_cap";
    }
    return "unknown";
}

StopDecision check_stopping(std::span<const IterationSummary> history, const RegistrationConfig& config) {
    if (history.empty()) throw Error(ErrorKind::validation, "check_stopping: empty history");
    const auto h = history.size();
    const auto& cur = history.back();
    if (h == 1 && cur.best_silhouette > config.threshold) return StopDecision::early_quality;
    if (h >= 2) {
        const auto& prev = history[h - 2];
        if (cur.K == prev.K && cur.best_silhouette <= prev.best_silhouette &&
            cur.second_silhouette <= prev.second_silhouette)
            return StopDecision::stabilized;
    }
    if (static_cast<long>(h) > config.max_iters) return StopDecision::iter_cap;
    return StopDecision::proceed;
}

ActiveEmbedding active_embedding(const EmbeddingTensor& tensor, std::span<const std::size_t> shift_index) {
    const std::size_t n = tensor.subjects();
    const std::size_t p = tensor.dim();
    if (shift_index.size() != n) throw Error(ErrorKind::validation, "shift vector length does not match tensor");
    ActiveEmbedding emb(n, p);
    for (std::size_t i = 0; i < n; ++i) {
        if (!tensor.usable(i, shift_index[i]))
            throw Error(ErrorKind::numeric, "active shift selects a flagged embedding cell");
        const auto c = tensor.cell(i, shift_index[i]);
        std::copy(c.begin(), c.end(), emb.row(i).begin());
    }
    return emb;
}

std::vector<std::size_t> initial_shifts(const EmbeddingTensor& tensor) {
    const auto& grid = tensor.grid();
    std::vector<std::size_t> out(tensor.subjects());
    for (std::size_t i = 0; i < tensor.subjects(); ++i) {
        std::size_t best = grid.zero_index();
        if (!tensor.usable(i, best)) {
            double best_abs = kInf;
            for (std::size_t l = 0; l < grid.size(); ++l) {
                if (tensor.usable(i, l) && std::abs(grid[l]) < best_abs) {
                    best_abs = std::abs(grid[l]);
                    best = l;
                }
            }
        }
        out[i] = best;
    }
    return out;
}

RegistrationResult finalize(const EmbeddingTensor& tensor, const ClusterState& last_state) {
    const std::size_t n = tensor.subjects();
    const auto K = static_cast<std::size_t>(last_state.K);
    RegistrationResult res;
    res.selected_K = last_state.K;
    res.shift_index = last_state.shift_index;
    res.labels.assign(n, -1);
    res.clusters = last_state.trimmed_sets;
    for (std::size_t k = 0; k < K; ++k)
        for (auto i : last_state.trimmed_sets[k]) res.labels[i] = static_cast<int>(k);

    for (std::size_t j = 0; j < n; ++j) {
        if (res.labels[j] >= 0) continue;
        std::size_t best_l = tensor.shift_count();
        std::size_t best_k = 0;
        double best_d = kInf;
        for (std::size_t l = 0; l < tensor.shift_count(); ++l) {
            if (!tensor.usable(j, l)) continue;
            for (std::size_t k = 0; k < K; ++k) {
                const double d = squared_distance(tensor.cell(j, l), last_state.trimmed_centroids[k]);
                if (d < best_d) {
                    best_d = d;
                    best_l = l;
                    best_k = k;
                }
            }
        }
        if (best_l == tensor.shift_count()) best_l = res.shift_index[j];
        res.shift_index[j] = best_l;
        res.labels[j] = static_cast<int>(best_k);
        res.clusters[best_k].push_back(j);
        res.reassigned.push_back(j);
    }
    for (auto& c : res.clusters) std::sort(c.begin(), c.end());
    res.shifts.resize(n);
    for (std::size_t i = 0; i < n; ++i) res.shifts[i] = tensor.grid()[res.shift_index[i]];
    res.flagged_cells = tensor.flagged_count();
    return res;
}

RegistrationResult register_embedding(const EmbeddingTensor& tensor, const RegistrationConfig& config) {
    config.validate();
    if (!(tensor.grid() == ShiftGrid(config.shift_grid)))
        throw Error(ErrorKind::validation, "tensor shift grid does not match config.shift_grid");

    std::vector<IterationSummary> history;
    ClusterState state;
    std::vector<std::size_t> shifts = initial_shifts(tensor);
    Termination reason = Termination::iter_cap;

    for (int h = 1;; ++h) {
        try {
            const ActiveEmbedding emb = active_embedding(tensor, shifts);
            KSelection sel = select_k(emb, config.max_clusters, config.clustering_method,
                                      mix_seed(config.seed, static_cast<std::uint64_t>(h)), config.workers);

            state = ClusterState{};
            state.iteration = h;
            state.prior_shift_index = shifts;
            state.K = sel.best_k;
            state.silhouette_table = sel.table;
            state.partition = std::move(sel.best);
            const auto members = state.partition.members();
            const auto K = static_cast<std::size_t>(state.K);
            std::vector<TrimmedCentroid> trims(K);
            parallel_for(K, config.workers, [&](std::size_t k) {
                trims[k] = trimmed_centroid(emb, members[k], config.trim_fraction);
            });
            for (auto& t : trims) {
                state.trimmed_sets.push_back(std::move(t.selected));
                state.raw_centroids.push_back(std::move(t.raw));
                state.trimmed_centroids.push_back(std::move(t.trimmed));
            }
            ShiftUpdate upd = update_shifts(tensor, state);
            state.shift_index = std::move(upd.shift_index);

            IterationSummary summary;
            summary.iteration = h;
            summary.K = state.K;
            summary.table = state.silhouette_table;
            // recompute from the table so best/second come from one source
            for (const auto& e : summary.table)
                if (e.k == state.K) summary.best_silhouette = e.silhouette;
            summary.second_silhouette = -kInf;
            for (const auto& e : summary.table)
                if (e.k != state.K) summary.second_silhouette = std::max(summary.second_silhouette, e.silhouette);
            summary.cluster_sizes = state.partition.sizes();
            for (const auto& s : state.trimmed_sets) summary.trimmed_sizes.push_back(s.size());
            for (std::size_t i = 0; i < shifts.size(); ++i) summary.shifts_changed += shifts[i] != state.shift_index[i];
            history.push_back(std::move(summary));
        } catch (const Error& e) {
            throw Error(e.kind(), "iteration " + std::to_string(h) + ": " + e.what());
        }

        shifts = state.shift_index;
        const StopDecision d = check_stopping(history, config);
        if (d == StopDecision::proceed) continue;
        reason = d == StopDecision::early_quality ? Termination::early_quality
                 : d == StopDecision::stabilized  ? Termination::stabilized
                                                  : Termination::iter_cap;
        break;
    }

    RegistrationResult res = finalize(tensor, state);
    res.history = std::move(history);
    res.termination = reason;
    return res;
}

RegistrationResult register_cohort(const CohortDataset& data, const RegistrationConfig& config) {
    config.validate();
    const EmbeddingTensor tensor = build_embedding(data, ShiftGrid(config.shift_grid), config.embedding_settings());
    return register_embedding(tensor, config);
}

}  // namespace shiftreg
