#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "actsel/error.hpp"
#include "actsel/features.hpp"

namespace actsel {

struct KernelParams {
    double gamma = 0.5;

    friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

struct TrainConfig {
    double lambda = 0.1;        // box bound on the dual coefficients
    double tolerance = 1e-3;    // maximal KKT violation at termination
    std::size_t max_passes = 0; // sweeps over the data; 0 means 10 * n
    std::uint64_t seed = 0;
    std::optional<double> gamma; // overrides the data-derived RBF width

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

inline void validate(const KernelParams& k) {
    if (!(k.gamma > 0.0) || !std::isfinite(k.gamma))
        throw Error("invalid_argument", "RBF gamma must be positive and finite");
}

inline void validate(const TrainConfig& c) {
    if (!(c.lambda > 0.0) || !std::isfinite(c.lambda))
        throw Error("invalid_argument", "lambda must be positive and finite");
    if (!(c.tolerance > 0.0) || !std::isfinite(c.tolerance))
        throw Error("invalid_argument", "tolerance must be positive and finite");
    if (c.gamma) validate(KernelParams{*c.gamma});
}

inline double rbf_kernel(const KernelParams& k, const Vec2& a, const Vec2& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    return std::exp(-k.gamma * (dx * dx + dy * dy));
}

// One trained binary classifier. Labels are +1 for positive_class and -1 for
// negative_class; only points with non-zero dual weight are kept.
struct BinarySvmModel {
    std::vector<Vec2> support_points;
    std::vector<int> support_labels;
    std::vector<double> support_weights;
    double bias = 0.0;
    KernelParams kernel;
    ClassId negative_class;
    ClassId positive_class;

    std::size_t size() const { return support_points.size(); }

    friend bool operator==(const BinarySvmModel&, const BinarySvmModel&) = default;
};

// Signed distance to the separating surface: sum_i w_i y_i k(x_i, q) - b.
inline double decision_distance(const BinarySvmModel& m, const Vec2& q) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m.support_points.size(); ++i)
        sum += m.support_weights[i] * m.support_labels[i] * rbf_kernel(m.kernel, m.support_points[i], q);
    return sum - m.bias;
}

// Dual objective sum(w) - 1/2 sum_ij w_i w_j y_i y_j k(x_i, x_j) of a model.
inline double dual_objective(const BinarySvmModel& m) {
    double lin = 0.0;
    double quad = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        lin += m.support_weights[i];
        for (std::size_t j = 0; j < m.size(); ++j)
            quad += m.support_weights[i] * m.support_weights[j] * m.support_labels[i] * m.support_labels[j] *
                    rbf_kernel(m.kernel, m.support_points[i], m.support_points[j]);
    }
    return lin - 0.5 * quad;
}

// Thrown when the solver hits its iteration cap. Carries the best iterate so
// callers can inspect it; it is never returned as a regular model.
class SolverError : public Error {
public:
    SolverError(BinarySvmModel best, double gap, std::size_t iterations)
        : Error("no_convergence", "SMO did not converge: KKT gap " + std::to_string(gap) + " after " +
                                      std::to_string(iterations) + " iterations"),
          best_(std::move(best)), gap_(gap) {}

    const BinarySvmModel& best_iterate() const { return best_; }
    double gap() const { return gap_; }

private:
    BinarySvmModel best_;
    double gap_;
};

namespace detail {

// SMO on  min 1/2 a'Qa - e'a  s.t.  y'a = 0, 0 <= a <= C  with Q_ij = y_i y_j K_ij.
// Working pairs come from the maximal-violating-pair rule with second-order
// selection of the partner; the scan order is a seeded permutation so that
// ties resolve deterministically.
class SmoSolver {
public:
    SmoSolver(std::span<const Vec2> x, std::span<const int> y, const TrainConfig& cfg, const KernelParams& k)
        : n_(x.size()), y_(y.begin(), y.end()), c_(cfg.lambda), eps_(cfg.tolerance),
          alpha_(n_, 0.0), grad_(n_, -1.0), kmat_(n_ * n_), order_(n_) {
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i; j < n_; ++j) kmat_[i * n_ + j] = kmat_[j * n_ + i] = rbf_kernel(k, x[i], x[j]);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::mt19937_64 rng(cfg.seed);
        std::shuffle(order_.begin(), order_.end(), rng);
        const std::size_t passes = cfg.max_passes ? cfg.max_passes : 10 * n_;
        max_iter_ = passes * n_;
    }

    // Returns true on convergence.
    bool solve() {
        for (iter_ = 0; iter_ < max_iter_; ++iter_) {
            std::size_t i = 0;
            std::size_t j = 0;
            if (!select(i, j)) return true;
            step(i, j);
        }
        std::size_t i = 0;
        std::size_t j = 0;
        return !select(i, j);
    }

    const std::vector<double>& alpha() const { return alpha_; }
    std::size_t iterations() const { return iter_; }
    double gap() const { return gap_; }

    // Offset b in f(x) = sum a_i y_i K(x_i, x) - b.
    double bias() const {
        double ub = std::numeric_limits<double>::infinity();
        double lb = -std::numeric_limits<double>::infinity();
        double sum_free = 0.0;
        std::size_t n_free = 0;
        for (std::size_t t = 0; t < n_; ++t) {
            const double yg = y_[t] * grad_[t];
            if (at_upper(t)) {
                if (y_[t] == -1) ub = std::min(ub, yg);
                else lb = std::max(lb, yg);
            } else if (at_lower(t)) {
                if (y_[t] == +1) ub = std::min(ub, yg);
                else lb = std::max(lb, yg);
            } else {
                sum_free += yg;
                ++n_free;
            }
        }
        return n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
    }

private:
    double kernel(std::size_t i, std::size_t j) const { return kmat_[i * n_ + j]; }
    bool at_upper(std::size_t t) const { return alpha_[t] >= c_; }
    bool at_lower(std::size_t t) const { return alpha_[t] <= 0.0; }
    bool in_up(std::size_t t) const { return y_[t] == +1 ? !at_upper(t) : !at_lower(t); }
    bool in_low(std::size_t t) const { return y_[t] == +1 ? !at_lower(t) : !at_upper(t); }

    bool select(std::size_t& out_i, std::size_t& out_j) {
        double gmax = -std::numeric_limits<double>::infinity();
        std::size_t i = n_;
        for (std::size_t t : order_) {
            if (in_up(t) && -y_[t] * grad_[t] > gmax) {
                gmax = -y_[t] * grad_[t];
                i = t;
            }
        }
        double gmin = std::numeric_limits<double>::infinity();
        double best = std::numeric_limits<double>::infinity();
        std::size_t j = n_;
        for (std::size_t t : order_) {
            if (!in_low(t)) continue;
            const double v = -y_[t] * grad_[t];
            gmin = std::min(gmin, v);
            if (i == n_) continue;
            const double b = gmax - v;
            if (b > 0.0) {
                double a = kernel(i, i) + kernel(t, t) - 2.0 * kernel(i, t);
                if (a <= 0.0) a = kTau;
                const double obj = -(b * b) / a;
                if (obj < best) {
                    best = obj;
                    j = t;
                }
            }
        }
        gap_ = (i == n_ || gmin == std::numeric_limits<double>::infinity()) ? 0.0 : gmax - gmin;
        if (i == n_ || j == n_ || gap_ < eps_) return false;
        out_i = i;
        out_j = j;
        return true;
    }

    void step(std::size_t i, std::size_t j) {
        const double old_ai = alpha_[i];
        const double old_aj = alpha_[j];
        double quad = kernel(i, i) + kernel(j, j) - 2.0 * kernel(i, j);
        if (quad <= 0.0) quad = kTau;
        double& ai = alpha_[i];
        double& aj = alpha_[j];
        if (y_[i] != y_[j]) {
            const double delta = (-grad_[i] - grad_[j]) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0.0) {
                if (aj < 0.0) { aj = 0.0; ai = diff; }
            } else {
                if (ai < 0.0) { ai = 0.0; aj = -diff; }
            }
            if (diff > 0.0) {
                if (ai > c_) { ai = c_; aj = c_ - diff; }
            } else {
                if (aj > c_) { aj = c_; ai = c_ + diff; }
            }
        } else {
            const double delta = (grad_[i] - grad_[j]) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > c_) {
                if (ai > c_) { ai = c_; aj = sum - c_; }
            } else {
                if (aj < 0.0) { aj = 0.0; ai = sum; }
            }
            if (sum > c_) {
                if (aj > c_) { aj = c_; ai = sum - c_; }
            } else {
                if (ai < 0.0) { ai = 0.0; aj = sum; }
            }
        }
        const double dai = ai - old_ai;
        const double daj = aj - old_aj;
        for (std::size_t t = 0; t < n_; ++t)
            grad_[t] += y_[t] * (y_[i] * kernel(i, t) * dai + y_[j] * kernel(j, t) * daj);
    }

    static constexpr double kTau = 1e-12;

    std::size_t n_;
    std::vector<int> y_;
    double c_;
    double eps_;
    std::vector<double> alpha_;
    std::vector<double> grad_;
    std::vector<double> kmat_;
    std::vector<std::size_t> order_;
    std::size_t max_iter_ = 0;
    std::size_t iter_ = 0;
    double gap_ = 0.0;
};

} // namespace detail

// Trains a soft-margin RBF classifier on labels in {+1, -1}.
inline BinarySvmModel train_binary(std::span<const Vec2> points, std::span<const int> labels,
                                   const TrainConfig& config, const KernelParams& kernel) {
    validate(config);
    validate(kernel);
    if (points.size() != labels.size())
        throw Error("invalid_argument", "points and labels differ in length");
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (labels[i] == +1) ++n_pos;
        else if (labels[i] == -1) ++n_neg;
        else throw Error("invalid_argument", "labels must be +1 or -1");
        if (!std::isfinite(points[i][0]) || !std::isfinite(points[i][1]))
            throw Error("invalid_argument", "training points must be finite");
    }
    if (n_pos == 0 || n_neg == 0) throw Error("single_class", "binary training needs both labels present");

    detail::SmoSolver solver(points, labels, config, kernel);
    const bool converged = solver.solve();

    BinarySvmModel m;
    m.kernel = kernel;
    const auto& alpha = solver.alpha();
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (alpha[i] > 0.0) {
            m.support_points.push_back(points[i]);
            m.support_labels.push_back(labels[i]);
            m.support_weights.push_back(alpha[i]);
        }
    }
    m.bias = solver.bias();
    if (!converged) throw SolverError(std::move(m), solver.gap(), solver.iterations());
    return m;
}

inline BinarySvmModel train_binary(const std::vector<Vec2>& points, const std::vector<int>& labels,
                                   const TrainConfig& config, const KernelParams& kernel) {
    return train_binary(std::span<const Vec2>(points), std::span<const int>(labels), config, kernel);
}

} // namespace actsel
