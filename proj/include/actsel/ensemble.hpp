#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <future>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "actsel/calibration.hpp"
#include "actsel/dataset.hpp"
#include "actsel/error.hpp"
#include "actsel/features.hpp"
#include "actsel/svm.hpp"

namespace actsel {

inline constexpr int kModelVersion = 1;
inline constexpr std::size_t kNumPairs = kNumFeatures * (kNumFeatures - 1) / 2;

struct FeaturePair {
    FeatureId low = FeatureId::Bandwidth;
    FeatureId high = FeatureId::Strain;

    friend constexpr bool operator==(const FeaturePair&, const FeaturePair&) = default;
};

inline constexpr std::array<FeaturePair, kNumPairs> all_pairs() {
    std::array<FeaturePair, kNumPairs> out{};
    std::size_t n = 0;
    for (std::size_t a = 0; a < kNumFeatures; ++a)
        for (std::size_t b = a + 1; b < kNumFeatures; ++b)
            out[n++] = FeaturePair{kAllFeatures[a], kAllFeatures[b]};
    return out;
}

inline constexpr std::size_t pair_index(FeaturePair p) {
    const auto pairs = all_pairs();
    for (std::size_t i = 0; i < pairs.size(); ++i)
        if (pairs[i] == p) return i;
    return kNumPairs;
}

// Accepts the two features in either order.
inline FeaturePair make_pair(FeatureId a, FeatureId b) {
    if (a == b) throw Error("invalid_pair", "a feature pair needs two distinct features");
    return code(a) < code(b) ? FeaturePair{a, b} : FeaturePair{b, a};
}

inline std::string pair_label(FeaturePair p) {
    return std::string(info(p.low).abbrev) + "/" + std::string(info(p.high).abbrev);
}

struct SubSvm {
    BinarySvmModel svm;
    std::optional<PlattParams> platt;

    friend bool operator==(const SubSvm&, const SubSvm&) = default;
};

// Multiclass one-vs-one model over one feature pair.
struct PairModel {
    FeaturePair pair;
    bool trained = false;
    std::size_t n_samples = 0;      // samples with both features present
    std::vector<ClassId> classes;   // eligible classes, ascending code
    double gamma = 0.0;
    std::vector<SubSvm> svms;       // ordered by (negative, positive) class code

    friend bool operator==(const PairModel&, const PairModel&) = default;
};

struct EnsembleModel {
    int version = kModelVersion;
    ClassCatalog catalog = ClassCatalog::standard();
    NormalizationParams normalization;
    TrainConfig config;
    std::array<PairModel, kNumPairs> pairs{};

    const PairModel& pair(FeaturePair p) const { return pairs[pair_index(p)]; }

    std::size_t sub_svm_count() const {
        std::size_t n = 0;
        for (const auto& pm : pairs) n += pm.svms.size();
        return n;
    }

    std::size_t trained_pair_count() const {
        return static_cast<std::size_t>(std::count_if(pairs.begin(), pairs.end(), [](const auto& pm) { return pm.trained; }));
    }

    friend bool operator==(const EnsembleModel&, const EnsembleModel&) = default;
};

namespace detail {

inline double auto_gamma(const std::vector<Vec2>& pts) {
    if (pts.size() < 2) return 0.5;
    double var_sum = 0.0;
    for (int d = 0; d < 2; ++d) {
        double mean = 0.0;
        for (const auto& p : pts) mean += p[d];
        mean /= static_cast<double>(pts.size());
        double ss = 0.0;
        for (const auto& p : pts) ss += (p[d] - mean) * (p[d] - mean);
        var_sum += ss / static_cast<double>(pts.size());
    }
    const double mean_var = var_sum / 2.0;
    return mean_var > 1e-12 ? 1.0 / (2.0 * mean_var) : 0.5;
}

} // namespace detail

// Trains the one-vs-one classifiers of one feature pair on every sample that
// has both features. Pair-level state comes out untrained when either feature
// is unusable or no sample covers the pair.
template <typename SampleRange>
PairModel train_pair(const SampleRange& samples, FeaturePair pair, const NormalizationParams& norm,
                     const TrainConfig& config, std::optional<KernelParams> kernel = std::nullopt,
                     bool calibrate = true) {
    PairModel pm;
    pm.pair = pair;
    if (!norm.usable(pair.low) || !norm.usable(pair.high)) return pm;

    std::vector<Vec2> pts;
    std::vector<ClassId> cls;
    for (const ActuatorSample& s : samples) {
        if (!s.has(pair.low) || !s.has(pair.high)) continue;
        pts.push_back({transform(norm, pair.low, s.value(pair.low)), transform(norm, pair.high, s.value(pair.high))});
        cls.push_back(s.cls);
    }
    pm.n_samples = pts.size();
    if (pts.empty()) return pm;
    pm.trained = true;

    pm.classes = cls;
    std::sort(pm.classes.begin(), pm.classes.end());
    pm.classes.erase(std::unique(pm.classes.begin(), pm.classes.end()), pm.classes.end());

    if (kernel) pm.gamma = kernel->gamma;
    else if (config.gamma) pm.gamma = *config.gamma;
    else pm.gamma = detail::auto_gamma(pts);
    const KernelParams kp{pm.gamma};

    for (std::size_t a = 0; a < pm.classes.size(); ++a) {
        for (std::size_t b = a + 1; b < pm.classes.size(); ++b) {
            std::vector<Vec2> x;
            std::vector<int> y;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                if (cls[i] == pm.classes[a]) { x.push_back(pts[i]); y.push_back(-1); }
                else if (cls[i] == pm.classes[b]) { x.push_back(pts[i]); y.push_back(+1); }
            }
            SubSvm sub;
            sub.svm = train_binary(x, y, config, kp);
            sub.svm.negative_class = pm.classes[a];
            sub.svm.positive_class = pm.classes[b];
            if (calibrate) {
                std::vector<double> d(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) d[i] = decision_distance(sub.svm, x[i]);
                sub.platt = fit_platt(d, y);
            }
            pm.svms.push_back(std::move(sub));
        }
    }
    return pm;
}

// Fits normalization on the whole dataset and trains all ten pair models.
// Pairs train concurrently; results are placed by pair index.
inline EnsembleModel train_ensemble(const Dataset& ds, const TrainConfig& config,
                                    std::optional<KernelParams> kernel = std::nullopt, bool calibrate = true) {
    if (ds.empty()) throw Error("empty_dataset", "cannot train on an empty dataset");
    validate(config);
    if (kernel) validate(*kernel);

    EnsembleModel m;
    m.catalog = ds.catalog();
    m.config = config;
    m.normalization = fit_normalization(ds);

    const auto pairs = all_pairs();
    bool any_usable = false;
    for (auto p : pairs) any_usable |= m.normalization.usable(p.low) && m.normalization.usable(p.high);
    if (!any_usable) throw Error("no_usable_pair", "no feature pair has two usable features");

    std::vector<std::future<PairModel>> jobs;
    for (auto p : pairs) {
        jobs.push_back(std::async(std::launch::async, [&ds, &m, &config, kernel, calibrate, p] {
            return train_pair(ds.samples(), p, m.normalization, config, kernel, calibrate);
        }));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) m.pairs[i] = jobs[i].get();
    return m;
}

// ---------------------------------------------------------------------------
// Queries. Per-class vectors below are aligned with PairModel::classes.

namespace detail {

inline const PairModel& trained_pair(const EnsembleModel& m, FeaturePair p) {
    const auto& pm = m.pair(p);
    if (!pm.trained) throw Error("untrained_pair", "feature pair " + pair_label(p) + " has no trained model");
    return pm;
}

inline std::size_t class_slot(const PairModel& pm, ClassId c) {
    return static_cast<std::size_t>(std::lower_bound(pm.classes.begin(), pm.classes.end(), c) - pm.classes.begin());
}

inline std::vector<double> duel_distances(const PairModel& pm, const Vec2& q) {
    std::vector<double> d(pm.svms.size());
    for (std::size_t k = 0; k < pm.svms.size(); ++k) d[k] = decision_distance(pm.svms[k].svm, q);
    return d;
}

inline std::vector<int> votes_from(const PairModel& pm, const std::vector<double>& d) {
    std::vector<int> v(pm.classes.size(), 0);
    for (std::size_t k = 0; k < pm.svms.size(); ++k) {
        const auto& s = pm.svms[k].svm;
        // A zero distance counts for the negative class.
        ++v[class_slot(pm, d[k] > 0.0 ? s.positive_class : s.negative_class)];
    }
    return v;
}

inline std::vector<double> margins_from(const PairModel& pm, const std::vector<double>& d) {
    std::vector<double> m(pm.classes.size(), 0.0);
    for (std::size_t k = 0; k < pm.svms.size(); ++k) {
        const auto& s = pm.svms[k].svm;
        if (d[k] <= 0.0) m[class_slot(pm, s.negative_class)] += -d[k];
        else m[class_slot(pm, s.positive_class)] += d[k];
    }
    return m;
}

} // namespace detail

inline std::vector<int> vote(const EnsembleModel& m, FeaturePair p, const Vec2& q) {
    const auto& pm = detail::trained_pair(m, p);
    return detail::votes_from(pm, detail::duel_distances(pm, q));
}

inline std::vector<double> margin_sum(const EnsembleModel& m, FeaturePair p, const Vec2& q) {
    const auto& pm = detail::trained_pair(m, p);
    return detail::margins_from(pm, detail::duel_distances(pm, q));
}

// S_j = Vote_j + D_j / (3 |D_j| + 1)
inline double confidence_score(int votes, double margin) {
    return static_cast<double>(votes) + margin / (3.0 * std::abs(margin) + 1.0);
}

inline std::vector<double> confidence_score(const std::vector<int>& votes, const std::vector<double>& margins) {
    if (votes.size() != margins.size()) throw Error("invalid_argument", "votes and margins differ in length");
    std::vector<double> s(votes.size());
    for (std::size_t j = 0; j < votes.size(); ++j) s[j] = confidence_score(votes[j], margins[j]);
    return s;
}

enum class DecisionMethod { Score, Probability };

inline std::string_view method_name(DecisionMethod m) {
    return m == DecisionMethod::Score ? "score" : "probability";
}

inline std::optional<DecisionMethod> parse_method(std::string_view s) {
    if (s == "score") return DecisionMethod::Score;
    if (s == "probability" || s == "prob") return DecisionMethod::Probability;
    return std::nullopt;
}

struct ClassScore {
    ClassId cls;
    int votes = 0;
    double margin_sum = 0.0;
    double score = 0.0;
    std::optional<double> probability;

    friend bool operator==(const ClassScore&, const ClassScore&) = default;
};

struct Prediction {
    FeaturePair pair;
    std::vector<ClassId> eligible;
    std::vector<ClassScore> ranking;  // best first

    friend bool operator==(const Prediction&, const Prediction&) = default;
};

// Probability of each eligible class from Platt-calibrated duels coupled
// into one distribution.
inline std::vector<double> coupled_probabilities(const PairModel& pm, const std::vector<double>& d) {
    const auto k = static_cast<Eigen::Index>(pm.classes.size());
    if (k == 1) return {1.0};
    Eigen::MatrixXd r = Eigen::MatrixXd::Constant(k, k, 0.5);
    for (std::size_t n = 0; n < pm.svms.size(); ++n) {
        const auto& sub = pm.svms[n];
        if (!sub.platt)
            throw Error("no_calibration", "model for " + pair_label(pm.pair) + " was trained without probability calibration");
        const double p_pos = std::clamp(platt_probability(*sub.platt, d[n]), 1e-7, 1.0 - 1e-7);
        const auto neg = static_cast<Eigen::Index>(detail::class_slot(pm, sub.svm.negative_class));
        const auto pos = static_cast<Eigen::Index>(detail::class_slot(pm, sub.svm.positive_class));
        r(pos, neg) = p_pos;
        r(neg, pos) = 1.0 - p_pos;
    }
    return pairwise_coupling(r);
}

// Full ranking of every eligible class for a normalized query point.
inline std::vector<ClassScore> rank_classes(const PairModel& pm, const Vec2& q, DecisionMethod method) {
    const auto d = detail::duel_distances(pm, q);
    const auto votes = detail::votes_from(pm, d);
    const auto margins = detail::margins_from(pm, d);
    std::vector<ClassScore> out(pm.classes.size());
    for (std::size_t j = 0; j < out.size(); ++j)
        out[j] = ClassScore{pm.classes[j], votes[j], margins[j], confidence_score(votes[j], margins[j]), std::nullopt};

    if (method == DecisionMethod::Probability) {
        const auto p = coupled_probabilities(pm, d);
        for (std::size_t j = 0; j < out.size(); ++j) out[j].probability = p[j];
        std::stable_sort(out.begin(), out.end(), [](const ClassScore& a, const ClassScore& b) {
            if (*a.probability != *b.probability) return *a.probability > *b.probability;
            if (a.score != b.score) return a.score > b.score;
            return a.cls < b.cls;
        });
    } else {
        std::stable_sort(out.begin(), out.end(), [](const ClassScore& a, const ClassScore& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.cls < b.cls;
        });
    }
    return out;
}

inline Vec2 normalize_point(const NormalizationParams& norm, FeaturePair p, double raw_low, double raw_high) {
    return {transform(norm, p.low, raw_low), transform(norm, p.high, raw_high)};
}

inline void validate_query(const FeatureValues& query) {
    for (auto f : kAllFeatures) {
        const auto& v = query[index(f)];
        if (v && !valid_feature_value(*v))
            throw Error("non_positive_feature", std::string(info(f).token) + " must be positive and finite, got " +
                                                    detail::shortest(*v));
    }
    if (present_count(query) < 2)
        throw Error("too_few_features", "a query needs at least 2 features, got " + std::to_string(present_count(query)));
}

// One prediction per trained feature pair covered by the query; no fusion
// across pairs.
inline std::vector<Prediction> predict(const EnsembleModel& m, const FeatureValues& query, std::size_t top_n,
                                       DecisionMethod method = DecisionMethod::Score) {
    if (top_n == 0) throw Error("invalid_top_n", "top_n must be positive");
    validate_query(query);
    std::vector<Prediction> out;
    for (const auto& pm : m.pairs) {
        const auto lo = query[index(pm.pair.low)];
        const auto hi = query[index(pm.pair.high)];
        if (!lo || !hi || !pm.trained) continue;
        Prediction pred;
        pred.pair = pm.pair;
        pred.eligible = pm.classes;
        pred.ranking = rank_classes(pm, normalize_point(m.normalization, pm.pair, *lo, *hi), method);
        if (pred.ranking.size() > top_n) pred.ranking.resize(top_n);
        out.push_back(std::move(pred));
    }
    if (out.empty()) throw Error("no_trained_pair", "no trained feature pair is covered by the query");
    return out;
}

// ---------------------------------------------------------------------------
// Top-1 class over a log-spaced lattice.

struct AxisRange {
    double min = 0.0;
    double max = 0.0;
};

struct DecisionGrid {
    FeaturePair pair;
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::vector<double> x_ticks;   // raw units
    std::vector<double> y_ticks;   // raw units
    std::vector<int> classes;      // row-major: index = iy * nx + ix
    std::vector<double> scores;    // winner's score (or probability)
};

inline std::vector<double> log_ticks(AxisRange r, std::size_t n) {
    std::vector<double> t(n);
    const double a = std::log(r.min);
    const double b = std::log(r.max);
    for (std::size_t i = 0; i < n; ++i)
        t[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    t.front() = r.min;
    t.back() = r.max;
    return t;
}

inline DecisionGrid decision_grid(const EnsembleModel& m, FeaturePair p, AxisRange x, AxisRange y, std::size_t nx,
                                  std::size_t ny, DecisionMethod method = DecisionMethod::Score) {
    const auto& pm = detail::trained_pair(m, p);
    if (nx < 2 || ny < 2) throw Error("invalid_range", "grid needs at least 2 ticks per axis");
    for (auto r : {x, y}) {
        if (!valid_feature_value(r.min) || !valid_feature_value(r.max) || !(r.min < r.max))
            throw Error("invalid_range", "grid ranges must satisfy 0 < min < max");
    }
    DecisionGrid g;
    g.pair = p;
    g.nx = nx;
    g.ny = ny;
    g.x_ticks = log_ticks(x, nx);
    g.y_ticks = log_ticks(y, ny);
    g.classes.resize(nx * ny);
    g.scores.resize(nx * ny);
    std::vector<double> xn(nx);
    for (std::size_t ix = 0; ix < nx; ++ix) xn[ix] = transform(m.normalization, p.low, g.x_ticks[ix]);
    for (std::size_t iy = 0; iy < ny; ++iy) {
        const double yn = transform(m.normalization, p.high, g.y_ticks[iy]);
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const auto ranking = rank_classes(pm, {xn[ix], yn}, method);
            const auto& top = ranking.front();
            g.classes[iy * nx + ix] = top.cls.code;
            g.scores[iy * nx + ix] = method == DecisionMethod::Probability ? *top.probability : top.score;
        }
    }
    return g;
}

} // namespace actsel
