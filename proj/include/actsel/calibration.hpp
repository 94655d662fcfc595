#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "actsel/error.hpp"

namespace actsel {

// P(positive | d) = 1 / (1 + exp(A d + B)).
struct PlattParams {
    double a = 0.0;
    double b = 0.0;

    friend bool operator==(const PlattParams&, const PlattParams&) = default;
};

inline double platt_probability(const PlattParams& p, double distance) {
    const double f = p.a * distance + p.b;
    // Evaluated on the side that cannot overflow.
    return f >= 0.0 ? std::exp(-f) / (1.0 + std::exp(-f)) : 1.0 / (1.0 + std::exp(f));
}

struct PlattTargets {
    double positive = 0.0;
    double negative = 0.0;
};

inline PlattTargets platt_targets(std::size_t n_pos, std::size_t n_neg) {
    return {(static_cast<double>(n_pos) + 1.0) / (static_cast<double>(n_pos) + 2.0),
            1.0 / (static_cast<double>(n_neg) + 2.0)};
}

// Cross-entropy of the sigmoid against the smoothed targets. This is the
// quantity fit_platt minimises.
inline double platt_objective(const PlattParams& p, std::span<const double> distances, std::span<const int> labels) {
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += y > 0 ? 1 : 0;
    const auto tg = platt_targets(n_pos, labels.size() - n_pos);
    double f = 0.0;
    for (std::size_t i = 0; i < distances.size(); ++i) {
        const double t = labels[i] > 0 ? tg.positive : tg.negative;
        const double z = distances[i] * p.a + p.b;
        f += z >= 0.0 ? t * z + std::log1p(std::exp(-z)) : (t - 1.0) * z + std::log1p(std::exp(z));
    }
    return f;
}

// Damped Newton fit of the Platt sigmoid with prior-smoothed targets.
inline PlattParams fit_platt(std::span<const double> distances, std::span<const int> labels) {
    if (distances.size() != labels.size()) throw Error("invalid_argument", "distances and labels differ in length");
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    for (int y : labels) (y > 0 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0) throw Error("single_class", "Platt scaling needs both labels present");

    constexpr int kMaxIter = 100;
    constexpr double kMinStep = 1e-10;
    constexpr double kSigma = 1e-12;
    constexpr double kGradTol = 1e-10;

    const auto tg = platt_targets(n_pos, n_neg);
    PlattParams p{0.0, std::log((static_cast<double>(n_neg) + 1.0) / (static_cast<double>(n_pos) + 1.0))};
    double fval = platt_objective(p, distances, labels);

    for (int iter = 0; iter <= kMaxIter; ++iter) {
        double h11 = kSigma;
        double h22 = kSigma;
        double h21 = 0.0;
        double g1 = 0.0;
        double g2 = 0.0;
        for (std::size_t i = 0; i < distances.size(); ++i) {
            const double d = distances[i];
            const double t = labels[i] > 0 ? tg.positive : tg.negative;
            const double pr = platt_probability(p, d);
            const double q = 1.0 - pr;
            const double w = pr * q;
            h11 += d * d * w;
            h22 += w;
            h21 += d * w;
            g1 += d * (t - pr);
            g2 += t - pr;
        }
        const double gnorm = std::hypot(g1, g2);
        if (gnorm < kGradTol) return p;
        if (iter == kMaxIter) break;

        const double det = h11 * h22 - h21 * h21;
        const double da = -(h22 * g1 - h21 * g2) / det;
        const double db = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * da + g2 * db;

        double step = 1.0;
        bool moved = false;
        while (step >= kMinStep) {
            const PlattParams cand{p.a + step * da, p.b + step * db};
            const double f = platt_objective(cand, distances, labels);
            if (f < fval + 1e-4 * step * gd) {
                p = cand;
                fval = f;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) {
            // No representable decrease left: accept if the gradient is at
            // rounding level for this many terms.
            if (gnorm < 1e-8 * static_cast<double>(distances.size())) return p;
            throw Error("no_convergence", "Platt line search failed with gradient norm " + std::to_string(gnorm));
        }
    }
    throw Error("no_convergence", "Platt fit did not converge in 100 iterations");
}

inline PlattParams fit_platt(const std::vector<double>& distances, const std::vector<int>& labels) {
    return fit_platt(std::span<const double>(distances), std::span<const int>(labels));
}

// Combines pairwise probabilities r(a, b) = P(a | a or b) into one class
// distribution by minimising sum_{a != b} (r_ba p_a - r_ab p_b)^2 with
// sum(p) = 1, solved through the bordered linear system.
inline std::vector<double> pairwise_coupling(const Eigen::MatrixXd& r) {
    const auto k = r.rows();
    if (k == 0 || r.cols() != k) throw Error("invalid_argument", "pairwise matrix must be square and non-empty");
    if (k == 1) return {1.0};
    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) {
            if (a == b) continue;
            const double v = r(a, b);
            if (!(v > 0.0 && v < 1.0)) throw Error("invalid_argument", "pairwise probabilities must lie in (0, 1)");
            if (std::abs(v + r(b, a) - 1.0) > 1e-9)
                throw Error("invalid_argument", "pairwise probabilities must satisfy r_ab + r_ba = 1");
        }
    }

    Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(k + 1, k + 1);
    for (Eigen::Index t = 0; t < k; ++t) {
        for (Eigen::Index s = 0; s < k; ++s) {
            if (s == t) continue;
            sys(t, t) += r(s, t) * r(s, t);
            sys(t, s) = -r(s, t) * r(t, s);
        }
        sys(t, k) = 1.0;
        sys(k, t) = 1.0;
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
    rhs(k) = 1.0;

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
    if (!lu.isInvertible()) throw Error("singular_system", "pairwise coupling system is singular");
    const Eigen::VectorXd sol = lu.solve(rhs);

    std::vector<double> p(static_cast<std::size_t>(k));
    double sum = 0.0;
    for (Eigen::Index t = 0; t < k; ++t) {
        const double v = sol(t);
        if (!std::isfinite(v)) throw Error("singular_system", "pairwise coupling produced a non-finite solution");
        p[static_cast<std::size_t>(t)] = std::max(v, 0.0);
        sum += p[static_cast<std::size_t>(t)];
    }
    for (auto& v : p) v /= sum;
    return p;
}

} // namespace actsel
