#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "shiftreg/dataset.hpp"

namespace shiftreg {

constexpr int kCubicDegree = 3;

// Clamped cubic knot vector: four copies of each boundary knot around q
// interior knots, q + 8 entries in total.
class KnotVector {
public:
    KnotVector(double lo, double hi, std::vector<double> interior);

    std::span<const double> knots() const { return knots_; }
    std::size_t interior_count() const { return knots_.size() - 8; }
    double lo() const { return knots_.front(); }
    double hi() const { return knots_.back(); }

private:
    std::vector<double> knots_;
};

// Intercept plus the cubic basis with B_1 dropped. coefficient layout:
// [intercept, B_2, ..., B_p], so a fit is a dense vector of size p.
struct BasisSpec {
    KnotVector knots;

    std::size_t p() const { return knots.interior_count() + 4; }
};

BasisSpec make_basis(Window window, const std::vector<double>& interior_knots);

// Values of all B_{j,degree}(t) for an arbitrary nondecreasing knot vector,
// built bottom-up from the piecewise-constant B_{j,0} with 0/0 := 0.
// Intervals are half-open; t equal to the last knot is assigned to the last
// nonempty interval. Returns knots.size() - degree - 1 values.
std::vector<double> bspline_values(std::span<const double> knots, int degree, double t);

// All p cubic basis values (including the dropped B_1) at t.
std::vector<double> full_basis(const BasisSpec& spec, double t);

// Design row (1, B_2(t), ..., B_p(t)). Throws if t is outside the knot span.
std::vector<double> basis_eval(const BasisSpec& spec, double t);

struct RidgeDiagnostics {
    std::size_t used_observations = 0;
    double condition_estimate = 1.0;
    bool ill_conditioned = false;
};

constexpr double kConditionWarning = 1e12;

// Ridge fit with the intercept unpenalized. Observations outside the knot
// span are ignored; at least one must remain.
std::vector<double> ridge_fit(const Trajectory& traj, const BasisSpec& spec, double lambda,
                              RidgeDiagnostics* diag = nullptr);

// Candidate shifts, strictly increasing and containing 0.
class ShiftGrid {
public:
    explicit ShiftGrid(std::vector<double> shifts);

    std::span<const double> shifts() const { return shifts_; }
    std::size_t size() const { return shifts_.size(); }
    double operator[](std::size_t i) const { return shifts_[i]; }
    std::size_t zero_index() const { return zero_; }

private:
    std::vector<double> shifts_;
    std::size_t zero_ = 0;
};

enum class BoundaryPolicy { global, adaptive };

struct EmbeddingSettings {
    std::vector<double> interior_knots;
    BoundaryPolicy policy = BoundaryPolicy::adaptive;
    double lambda = 0.03;
    std::size_t min_obs_per_fit = 2;
    int workers = 1;
};

// N x |grid| x p coefficient tensor with a usability flag per (subject, shift).
class EmbeddingTensor {
public:
    EmbeddingTensor(std::size_t n, ShiftGrid grid, std::size_t p);

    std::size_t subjects() const { return n_; }
    std::size_t shift_count() const { return grid_.size(); }
    std::size_t dim() const { return p_; }
    const ShiftGrid& grid() const { return grid_; }

    std::span<const double> cell(std::size_t i, std::size_t l) const {
        return {coef_.data() + (i * grid_.size() + l) * p_, p_};
    }
    std::span<double> cell(std::size_t i, std::size_t l) {
        return {coef_.data() + (i * grid_.size() + l) * p_, p_};
    }
    bool usable(std::size_t i, std::size_t l) const { return usable_[i * grid_.size() + l] != 0; }
    void set_usable(std::size_t i, std::size_t l, bool ok) { usable_[i * grid_.size() + l] = ok ? 1 : 0; }

    std::size_t flagged_count() const;
    std::size_t ill_conditioned = 0;

    friend bool operator==(const EmbeddingTensor&, const EmbeddingTensor&);

private:
    std::size_t n_;
    ShiftGrid grid_;
    std::size_t p_;
    std::vector<double> coef_;
    std::vector<std::uint8_t> usable_;
};

inline bool operator==(const ShiftGrid& a, const ShiftGrid& b) {
    return std::equal(a.shifts().begin(), a.shifts().end(), b.shifts().begin(), b.shifts().end());
}

// Knots for one (subject, shift) cell under the given policy.
BasisSpec cell_basis(const Trajectory& shifted, Window window, const EmbeddingSettings& settings);

EmbeddingTensor build_embedding(const CohortDataset& data, const ShiftGrid& grid,
                                const EmbeddingSettings& settings);

// Text dump: header line "N L p", a line of shifts, then one row per cell
// "i,l,usable,c_0,...,c_{p-1}".
void write_tensor(std::ostream& out, const EmbeddingTensor& tensor);
EmbeddingTensor read_tensor(std::istream& in);

}  // namespace shiftreg
