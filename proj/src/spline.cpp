#include "shiftreg/spline.hpp"

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "shiftreg/error.hpp"
#include "shiftreg/parallel.hpp"

namespace shiftreg {

KnotVector::KnotVector(double lo, double hi, std::vector<double> interior) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo >= hi)
        throw Error(ErrorKind::validation, "knot boundaries must be finite with lo < hi");
    for (std::size_t i = 0; i < interior.size(); ++i) {
        const double k = interior[i];
        if (!(k > lo && k < hi)) {
            std::ostringstream msg;
            msg << "interior knot " << k << " is not strictly inside [" << lo << ", " << hi << "]";
            throw Error(ErrorKind::validation, msg.str());
        }
        if (i > 0 && k < interior[i - 1]) throw Error(ErrorKind::validation, "interior knots must be nondecreasing");
    }
    knots_.reserve(interior.size() + 8);
    knots_.insert(knots_.end(), 4, lo);
    knots_.insert(knots_.end(), interior.begin(), interior.end());
    knots_.insert(knots_.end(), 4, hi);
}

BasisSpec make_basis(Window window, const std::vector<double>& interior_knots) {
    return BasisSpec{KnotVector(window.lo, window.hi, interior_knots)};
}

std::vector<double> bspline_values(std::span<const double> knots, int degree, double t) {
    const std::size_t m = knots.size();
    if (degree < 0 || m < static_cast<std::size_t>(degree) + 2)
        throw Error(ErrorKind::validation, "knot vector too short for requested degree");
    if (t < knots.front() || t > knots.back()) {
        std::ostringstream msg;
        msg << "t=" << t << " outside knot span [" << knots.front() << ", " << knots.back() << "]";
        throw Error(ErrorKind::validation, msg.str());
    }

    std::vector<double> b(m - 1, 0.0);
    if (t == knots.back()) {
        for (std::size_t j = m - 1; j-- > 0;) {
            if (knots[j] < knots[j + 1]) {
                b[j] = 1.0;
                break;
            }
        }
    } else {
        for (std::size_t j = 0; j + 1 < m; ++j) {
            if (knots[j] <= t && t < knots[j + 1]) {
                b[j] = 1.0;
                break;
            }
        }
    }

    for (int d = 1; d <= degree; ++d) {
        const std::size_t count = m - 1 - static_cast<std::size_t>(d);
        for (std::size_t j = 0; j < count; ++j) {
            double v = 0.0;
            const double left_den = knots[j + d] - knots[j];
            if (left_den > 0.0) v += (t - knots[j]) / left_den * b[j];
            const double right_den = knots[j + d + 1] - knots[j + 1];
            if (right_den > 0.0) v += (knots[j + d + 1] - t) / right_den * b[j + 1];
            b[j] = v;
        }
        b.resize(count);
    }
    return b;
}

std::vector<double> full_basis(const BasisSpec& spec, double t) {
    return bspline_values(spec.knots.knots(), kCubicDegree, t);
}

std::vector<double> basis_eval(const BasisSpec& spec, double t) {
    auto row = full_basis(spec, t);
    row[0] = 1.0;  // B_1 is replaced by the intercept
    return row;
}

std::vector<double> ridge_fit(const Trajectory& traj, const BasisSpec& spec, double lambda, RidgeDiagnostics* diag) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::validation, "lambda must be finite and >= 0");
    const auto p = static_cast<Eigen::Index>(spec.p());
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
    std::size_t used = 0;
    for (const auto& o : traj.observations) {
        if (o.time < spec.knots.lo() || o.time > spec.knots.hi()) continue;
        const auto row_values = basis_eval(spec, o.time);
        const Eigen::Map<const Eigen::VectorXd> row(row_values.data(), p);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(row);
        rhs += o.value * row;
        ++used;
    }
    if (used == 0) throw Error(ErrorKind::numeric, "ridge_fit: no observations inside the knot span");
    gram = gram.selfadjointView<Eigen::Lower>();
    for (Eigen::Index j = 1; j < p; ++j) gram(j, j) += lambda;

    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorKind::numeric, "ridge_fit: penalized normal equations are singular (lambda=" +
                                            std::to_string(lambda) + ", observations=" + std::to_string(used) + ")");
    }
    const double rcond = llt.rcond();
    const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (diag) {
        diag->used_observations = used;
        diag->condition_estimate = cond;
        diag->ill_conditioned = cond > kConditionWarning;
    }
    const Eigen::VectorXd beta = llt.solve(rhs);
    if (!beta.allFinite()) throw Error(ErrorKind::numeric, "ridge_fit: non-finite solution");
    return {beta.data(), beta.data() + p};
}

ShiftGrid::ShiftGrid(std::vector<double> shifts) : shifts_(std::move(shifts)) {
    if (shifts_.empty()) throw Error(ErrorKind::validation, "shift grid is empty");
    bool has_zero = false;
    for (std::size_t i = 0; i < shifts_.size(); ++i) {
        if (!std::isfinite(shifts_[i])) throw Error(ErrorKind::validation, "shift grid values must be finite");
        if (i > 0 && !(shifts_[i] > shifts_[i - 1]))
            throw Error(ErrorKind::validation, "shift grid must be strictly increasing");
        if (shifts_[i] == 0.0) {
            has_zero = true;
            zero_ = i;
        }
    }
    if (!has_zero) throw Error(ErrorKind::validation, "shift grid must contain 0");
}

EmbeddingTensor::EmbeddingTensor(std::size_t n, ShiftGrid grid, std::size_t p)
    : n_(n), grid_(std::move(grid)), p_(p), coef_(n * grid_.size() * p, 0.0), usable_(n * grid_.size(), 0) {}

std::size_t EmbeddingTensor::flagged_count() const {
    std::size_t c = 0;
    for (auto u : usable_) c += (u == 0);
    return c;
}

bool operator==(const EmbeddingTensor& a, const EmbeddingTensor& b) {
    return a.n_ == b.n_ && a.p_ == b.p_ && a.grid_ == b.grid_ && a.coef_ == b.coef_ && a.usable_ == b.usable_;
}

BasisSpec cell_basis(const Trajectory& shifted, Window window, const EmbeddingSettings& settings) {
    if (settings.policy == BoundaryPolicy::global || shifted.empty()) return make_basis(window, settings.interior_knots);
    double lo = shifted.observations.front().time;
    double hi = shifted.observations.back().time;
    // Fall back to the window bound on any side where the observed range
    // does not strictly enclose the interior knots.
    const auto& interior = settings.interior_knots;
    if (!interior.empty()) {
        if (!(lo < interior.front())) lo = window.lo;
        if (!(hi > interior.back())) hi = window.hi;
    }
    if (!(lo < hi)) {
        lo = window.lo;
        hi = window.hi;
    }
    return BasisSpec{KnotVector(lo, hi, interior)};
}

EmbeddingTensor build_embedding(const CohortDataset& data, const ShiftGrid& grid, const EmbeddingSettings& settings) {
    if (data.size() == 0) throw Error(ErrorKind::validation, "build_embedding: empty cohort");
    const BasisSpec global = make_basis(data.window, settings.interior_knots);
    const std::size_t p = global.p();
    const std::size_t n_shift = grid.size();
    EmbeddingTensor tensor(data.size(), grid, p);
    std::vector<std::uint8_t> ill(data.size() * n_shift, 0);

    parallel_for(data.size() * n_shift, settings.workers, [&](std::size_t cell) {
        const std::size_t i = cell / n_shift;
        const std::size_t l = cell % n_shift;
        const Trajectory shifted = shift_trajectory(data.trajectories[i], grid[l], data.window);
        if (shifted.size() < std::max<std::size_t>(settings.min_obs_per_fit, 1)) return;
        try {
            const BasisSpec spec = cell_basis(shifted, data.window, settings);
            RidgeDiagnostics diag;
            const auto beta = ridge_fit(shifted, spec, settings.lambda, &diag);
            std::copy(beta.begin(), beta.end(), tensor.cell(i, l).begin());
            tensor.set_usable(i, l, true);
            ill[cell] = diag.ill_conditioned ? 1 : 0;
        } catch (const Error& e) {
            std::ostringstream msg;
            msg << "embedding cell (subject " << data.trajectories[i].subject_id << ", shift " << grid[l]
                << "): " << e.what();
            throw Error(e.kind(), msg.str());
        }
    });

    for (auto f : ill) tensor.ill_conditioned += f;
    for (std::size_t i = 0; i < data.size(); ++i) {
        bool any = false;
        for (std::size_t l = 0; l < n_shift && !any; ++l) any = tensor.usable(i, l);
        if (!any) {
            throw Error(ErrorKind::validation, "subject " + data.trajectories[i].subject_id +
                                                   " has no usable embedding cell for any candidate shift");
        }
    }
    return tensor;
}

namespace {

void put_double(std::ostream& out, double x) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    out.write(buf, ptr - buf);
}

}  // namespace

void write_tensor(std::ostream& out, const EmbeddingTensor& tensor) {
    out << tensor.subjects() << ' ' << tensor.shift_count() << ' ' << tensor.dim() << '\n';
    for (std::size_t l = 0; l < tensor.shift_count(); ++l) {
        if (l) out << ' ';
        put_double(out, tensor.grid()[l]);
    }
    out << '\n';
    for (std::size_t i = 0; i < tensor.subjects(); ++i) {
        for (std::size_t l = 0; l < tensor.shift_count(); ++l) {
            out << i << ',' << l << ',' << (tensor.usable(i, l) ? 1 : 0);
            for (double c : tensor.cell(i, l)) {
                out << ',';
                put_double(out, c);
            }
            out << '\n';
        }
    }
}

EmbeddingTensor read_tensor(std::istream& in) {
    std::size_t n = 0, L = 0, p = 0;
    if (!(in >> n >> L >> p)) throw Error(ErrorKind::parse, "tensor: bad header");
    std::vector<double> shifts(L);
    for (auto& s : shifts) {
        std::string tok;
        if (!(in >> tok) || !parse_double(tok, s)) throw Error(ErrorKind::parse, "tensor: bad shift grid");
    }
    EmbeddingTensor t(n, ShiftGrid(std::move(shifts)), p);
    std::string line;
    std::getline(in, line);
    for (std::size_t row = 0; row < n * L; ++row) {
        if (!std::getline(in, line)) throw Error(ErrorKind::parse, "tensor: truncated body");
        std::istringstream ls(line);
        std::string tok;
        std::vector<std::string> fields;
        while (std::getline(ls, tok, ',')) fields.push_back(tok);
        if (fields.size() != 3 + p) throw Error(ErrorKind::parse, "tensor: bad row " + std::to_string(row));
        const std::size_t i = std::stoul(fields[0]);
        const std::size_t l = std::stoul(fields[1]);
        if (i >= n || l >= L) throw Error(ErrorKind::parse, "tensor: index out of range");
        t.set_usable(i, l, fields[2] == "1");
        auto cell = t.cell(i, l);
        for (std::size_t j = 0; j < p; ++j) {
            if (!parse_double(fields[3 + j], cell[j])) throw Error(ErrorKind::parse, "tensor: bad value");
        }
    }
    return t;
}

}  // namespace shiftreg
