#pragma once

#include <algorithm>
#include <fstream>
#include <functional>
#include <future>
#include <numeric>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "actsel/dataset.hpp"
#include "actsel/ensemble.hpp"

namespace actsel {

inline constexpr int kReportVersion = 1;

struct CvConfig {
    std::size_t folds = 5;
    std::uint64_t seed = 0;
    bool stratified = true;
    std::vector<std::size_t> top_ns{1, 3};
};

struct ClassResult {
    ClassId cls;
    std::size_t test_count = 0;
    std::vector<std::size_t> correct;  // per entry of CvConfig::top_ns

    bool evaluated() const { return test_count > 0; }
    double accuracy(std::size_t n_idx) const {
        return test_count ? 100.0 * static_cast<double>(correct[n_idx]) / static_cast<double>(test_count) : 0.0;
    }
};

struct ConfigResult {
    double lambda = 0.0;
    DecisionMethod method = DecisionMethod::Score;
    std::vector<ClassResult> classes;  // every class of the pair subset, ascending code
    std::vector<double> macro;         // percent, per top-n
    std::vector<double> micro;         // percent, per top-n
};

struct FoldScaling {
    FeatureScaling low;
    FeatureScaling high;
};

struct PairResult {
    FeaturePair pair;
    bool evaluated = false;
    std::string skip_reason;
    std::size_t n_samples = 0;
    std::vector<ClassId> flagged_classes;  // fewer samples than folds
    std::vector<FoldScaling> fold_scaling;  // normalization used for each fold
    std::vector<ConfigResult> configs;      // lambdas x methods, lambda-major
};

struct SweepChoice {
    FeaturePair pair;  // unused for the overall choice
    double lambda = 0.0;
    DecisionMethod method = DecisionMethod::Score;
    std::vector<double> macro;  // per top-n (mean over pairs for the overall choice)
};

struct SweepResult {
    SweepChoice overall;
    std::vector<SweepChoice> per_pair;
};

struct CvReport {
    CvConfig cv;
    std::vector<double> lambdas;
    std::vector<DecisionMethod> methods;
    ClassCatalog catalog;
    std::vector<PairResult> pairs;

    const ConfigResult* find(const PairResult& p, double lambda, DecisionMethod m) const {
        for (const auto& c : p.configs)
            if (c.lambda == lambda && c.method == m) return &c;
        return nullptr;
    }
};

// Fold index for each item. Stratified assignment shuffles each class and
// deals its members round-robin, continuing the dealer position across
// classes, so fold sizes and per-class fold counts both differ by at most 1.
inline std::vector<std::size_t> assign_folds(const std::vector<ClassId>& labels, std::size_t folds, std::uint64_t seed,
                                             bool stratified) {
    if (folds < 2) throw Error("invalid_folds", "cross-validation needs at least 2 folds");
    if (labels.size() < folds)
        throw Error("too_few_samples", std::to_string(labels.size()) + " samples cannot fill " + std::to_string(folds) + " folds");
    std::mt19937_64 rng(seed);
    std::vector<std::vector<std::size_t>> groups;
    if (stratified) {
        std::map<ClassId, std::vector<std::size_t>> by_class;
        for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
        for (auto& [c, idx] : by_class) groups.push_back(std::move(idx));
    } else {
        groups.emplace_back(labels.size());
        std::iota(groups[0].begin(), groups[0].end(), std::size_t{0});
    }
    std::vector<std::size_t> fold(labels.size());
    std::size_t dealer = 0;
    for (auto& g : groups) {
        std::shuffle(g.begin(), g.end(), rng);
        for (auto i : g) fold[i] = dealer++ % folds;
    }
    return fold;
}

namespace detail {

inline std::size_t class_slot_of(const std::vector<ClassId>& sorted, ClassId c) {
    return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), c) - sorted.begin());
}

inline void finish_metrics(ConfigResult& r, std::size_t n_top) {
    r.macro.assign(n_top, 0.0);
    r.micro.assign(n_top, 0.0);
    for (std::size_t t = 0; t < n_top; ++t) {
        double sum = 0.0;
        std::size_t n_classes = 0;
        std::size_t correct = 0;
        std::size_t total = 0;
        for (const auto& c : r.classes) {
            if (!c.evaluated()) continue;
            sum += c.accuracy(t);
            ++n_classes;
            correct += c.correct[t];
            total += c.test_count;
        }
        r.macro[t] = n_classes ? sum / static_cast<double>(n_classes) : 0.0;
        r.micro[t] = total ? 100.0 * static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    }
}

inline PairResult cross_validate_pair(const Dataset& ds, FeaturePair pair, const CvConfig& cv,
                                      const std::vector<double>& lambdas, const TrainConfig& base,
                                      std::optional<KernelParams> kernel, const std::vector<DecisionMethod>& methods) {
    PairResult res;
    res.pair = pair;
    std::vector<const ActuatorSample*> subset;
    for (const auto& s : ds.samples())
        if (s.has(pair.low) && s.has(pair.high)) subset.push_back(&s);
    res.n_samples = subset.size();
    if (subset.empty()) throw Error("empty_pair_subset", "no sample has both features of " + pair_label(pair));

    std::vector<ClassId> labels;
    for (auto* s : subset) labels.push_back(s->cls);
    const auto fold = assign_folds(labels, cv.folds, cv.seed + pair_index(pair), cv.stratified);

    std::vector<ClassId> classes = labels;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    for (auto c : classes)
        if (static_cast<std::size_t>(std::count(labels.begin(), labels.end(), c)) < cv.folds) res.flagged_classes.push_back(c);

    const bool need_prob = std::find(methods.begin(), methods.end(), DecisionMethod::Probability) != methods.end();
    for (double lambda : lambdas) {
        for (auto m : methods) {
            ConfigResult r;
            r.lambda = lambda;
            r.method = m;
            for (auto c : classes) r.classes.push_back(ClassResult{c, 0, std::vector<std::size_t>(cv.top_ns.size(), 0)});
            res.configs.push_back(std::move(r));
        }
    }

    for (std::size_t f = 0; f < cv.folds; ++f) {
        std::vector<std::reference_wrapper<const ActuatorSample>> train;
        std::vector<const ActuatorSample*> test;
        for (std::size_t i = 0; i < subset.size(); ++i) {
            if (fold[i] == f) test.push_back(subset[i]);
            else train.push_back(*subset[i]);
        }
        // Scaling is refit on the training folds only.
        const auto norm = fit_normalization(train);
        res.fold_scaling.push_back({norm[pair.low], norm[pair.high]});

        for (std::size_t li = 0; li < lambdas.size(); ++li) {
            TrainConfig cfg = base;
            cfg.lambda = lambdas[li];
            const auto pm = train_pair(train, pair, norm, cfg, kernel, need_prob);
            for (std::size_t mi = 0; mi < methods.size(); ++mi) {
                auto& r = res.configs[li * methods.size() + mi];
                for (auto* s : test) {
                    auto& cr = r.classes[detail::class_slot_of(classes, s->cls)];
                    ++cr.test_count;
                    if (!pm.trained) continue;
                    const auto ranking = rank_classes(
                        pm, normalize_point(norm, pair, s->value(pair.low), s->value(pair.high)), methods[mi]);
                    const auto it = std::find_if(ranking.begin(), ranking.end(),
                                                 [&](const ClassScore& c) { return c.cls == s->cls; });
                    if (it == ranking.end()) continue;
                    const auto pos = static_cast<std::size_t>(it - ranking.begin());
                    for (std::size_t t = 0; t < cv.top_ns.size(); ++t)
                        if (pos < cv.top_ns[t]) ++cr.correct[t];
                }
            }
        }
    }
    for (auto& r : res.configs) finish_metrics(r, cv.top_ns.size());
    res.evaluated = true;
    return res;
}

} // namespace detail

// k-fold cross-validation of every trainable feature pair over the grid of
// lambdas x decision methods. Folds are drawn per pair from the samples that
// carry both features.
inline CvReport cross_validate(const Dataset& ds, const CvConfig& cv, const std::vector<double>& lambdas,
                               std::optional<KernelParams> kernel, const std::vector<DecisionMethod>& methods,
                               const TrainConfig& base = {}) {
    if (ds.empty()) throw Error("empty_dataset", "cannot cross-validate an empty dataset");
    if (cv.folds < 2) throw Error("invalid_folds", "cross-validation needs at least 2 folds");
    if (lambdas.empty() || methods.empty()) throw Error("invalid_argument", "need at least one lambda and one method");
    if (cv.top_ns.empty()) throw Error("invalid_argument", "need at least one top-n");
    for (auto n : cv.top_ns)
        if (n == 0) throw Error("invalid_top_n", "top-n values must be positive");
    for (double l : lambdas) {
        TrainConfig probe = base;
        probe.lambda = l;
        validate(probe);
    }

    CvReport rep;
    rep.cv = cv;
    rep.lambdas = lambdas;
    rep.methods = methods;
    rep.catalog = ds.catalog();

    const auto full_norm = fit_normalization(ds);
    std::vector<std::future<PairResult>> jobs;
    for (auto p : all_pairs()) {
        if (!full_norm.usable(p.low) || !full_norm.usable(p.high)) {
            jobs.push_back(std::async(std::launch::deferred, [p] {
                PairResult r;
                r.pair = p;
                r.skip_reason = "feature not usable";
                return r;
            }));
            continue;
        }
        jobs.push_back(std::async(std::launch::async, [&, p] {
            return detail::cross_validate_pair(ds, p, cv, lambdas, base, kernel, methods);
        }));
    }
    for (auto& j : jobs) rep.pairs.push_back(j.get());
    bool any = false;
    for (const auto& p : rep.pairs) any |= p.evaluated;
    if (!any) throw Error("no_usable_pair", "no feature pair could be cross-validated");
    return rep;
}

namespace detail {

// Lexicographic preference: macro top-1, then macro of the next top-n, then
// larger lambda, then score over probability.
inline bool better(const std::vector<double>& macro_a, double lambda_a, DecisionMethod m_a,
                   const std::vector<double>& macro_b, double lambda_b, DecisionMethod m_b) {
    const std::size_t keys = std::min<std::size_t>(2, macro_a.size());
    for (std::size_t t = 0; t < keys; ++t)
        if (macro_a[t] != macro_b[t]) return macro_a[t] > macro_b[t];
    if (lambda_a != lambda_b) return lambda_a > lambda_b;
    return m_a == DecisionMethod::Score && m_b == DecisionMethod::Probability;
}

} // namespace detail

inline SweepResult sweep_report(const CvReport& rep) {
    SweepResult out;
    std::size_t n_pairs = 0;
    for (const auto& p : rep.pairs) n_pairs += p.evaluated ? 1 : 0;
    if (n_pairs == 0) throw Error("empty_report", "report has no evaluated pairs");

    bool have = false;
    for (double lambda : rep.lambdas) {
        for (auto m : rep.methods) {
            std::vector<double> mean(rep.cv.top_ns.size(), 0.0);
            for (const auto& p : rep.pairs) {
                if (!p.evaluated) continue;
                const auto* c = rep.find(p, lambda, m);
                for (std::size_t t = 0; t < mean.size(); ++t) mean[t] += c->macro[t] / static_cast<double>(n_pairs);
            }
            if (!have || detail::better(mean, lambda, m, out.overall.macro, out.overall.lambda, out.overall.method)) {
                out.overall = SweepChoice{FeaturePair{}, lambda, m, mean};
                have = true;
            }
        }
    }
    for (const auto& p : rep.pairs) {
        if (!p.evaluated) continue;
        const ConfigResult* best = nullptr;
        for (const auto& c : p.configs)
            if (!best || detail::better(c.macro, c.lambda, c.method, best->macro, best->lambda, best->method)) best = &c;
        out.per_pair.push_back(SweepChoice{p.pair, best->lambda, best->method, best->macro});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Export.

inline std::string pair_row_label(FeaturePair p) {
    return std::string(info(p.low).abbrev) + " & " + std::string(info(p.high).abbrev);
}

// Pairs as rows; per-class, macro and micro accuracy for each top-n. Classes
// without test samples in a pair print as "-".
inline std::string render_report_table(const CvReport& rep, double lambda, DecisionMethod method) {
    const auto& cat = rep.catalog.entries();
    constexpr std::size_t kLabelW = 16;
    constexpr std::size_t kColW = 8;
    std::string out;
    out += "lambda = " + detail::shortest(lambda) + ", method = " + std::string(method_name(method)) + "\n";
    std::string group = detail::pad_right("", kLabelW);
    std::string head = detail::pad_right("Features", kLabelW);
    for (auto n : rep.cv.top_ns) {
        group += detail::pad_right(" Top-" + std::to_string(n), (cat.size() + 2) * kColW);
        for (const auto& [c, name] : cat) head += detail::pad_left(name, kColW);
        head += detail::pad_left("Macro", kColW) + detail::pad_left("Micro", kColW);
    }
    while (!group.empty() && group.back() == ' ') group.pop_back();
    out += group + "\n" + head + "\n";
    for (const auto& p : rep.pairs) {
        std::string line = detail::pad_right(pair_row_label(p.pair), kLabelW);
        const auto* c = p.evaluated ? rep.find(p, lambda, method) : nullptr;
        for (std::size_t t = 0; t < rep.cv.top_ns.size(); ++t) {
            for (const auto& [code_, name] : cat) {
                std::string cell = "-";
                if (c) {
                    for (const auto& cr : c->classes)
                        if (cr.cls.code == code_ && cr.evaluated()) cell = detail::printf_double("%.2f", cr.accuracy(t));
                }
                line += detail::pad_left(cell, kColW);
            }
            line += detail::pad_left(c ? detail::printf_double("%.2f", c->macro[t]) : "-", kColW);
            line += detail::pad_left(c ? detail::printf_double("%.2f", c->micro[t]) : "-", kColW);
        }
        out += line + "\n";
    }
    return out;
}

inline nlohmann::json report_to_json(const CvReport& rep) {
    using nlohmann::json;
    json classes = json::array();
    for (const auto& [c, name] : rep.catalog.entries()) classes.push_back({{"code", c}, {"name", name}});
    json methods = json::array();
    for (auto m : rep.methods) methods.push_back(std::string(method_name(m)));

    json pairs = json::array();
    for (const auto& p : rep.pairs) {
        json pj{{"features", {code(p.pair.low), code(p.pair.high)}},
                {"label", pair_row_label(p.pair)},
                {"evaluated", p.evaluated},
                {"n_samples", p.n_samples}};
        if (!p.evaluated) pj["skip_reason"] = p.skip_reason;
        json flagged = json::array();
        for (auto c : p.flagged_classes) flagged.push_back(c.code);
        pj["flagged_classes"] = flagged;
        json scaling = json::array();
        for (const auto& s : p.fold_scaling)
            scaling.push_back({{"low_mean", s.low.mean}, {"low_std", s.low.std}, {"high_mean", s.high.mean}, {"high_std", s.high.std}});
        pj["fold_scaling"] = scaling;
        json results = json::array();
        for (const auto& c : p.configs) {
            json per_class = json::array();
            for (const auto& cr : c.classes) {
                json acc = json::array();
                for (std::size_t t = 0; t < rep.cv.top_ns.size(); ++t)
                    acc.push_back(cr.evaluated() ? json(cr.accuracy(t)) : json(nullptr));
                per_class.push_back({{"class", cr.cls.code}, {"test_count", cr.test_count}, {"correct", cr.correct}, {"accuracy", acc}});
            }
            results.push_back({{"lambda", c.lambda},
                               {"method", std::string(method_name(c.method))},
                               {"per_class", per_class},
                               {"macro", c.macro},
                               {"micro", c.micro}});
        }
        pj["results"] = results;
        pairs.push_back(pj);
    }

    const auto sweep = sweep_report(rep);
    json per_pair = json::array();
    for (const auto& s : sweep.per_pair)
        per_pair.push_back({{"features", {code(s.pair.low), code(s.pair.high)}},
                            {"lambda", s.lambda},
                            {"method", std::string(method_name(s.method))},
                            {"macro", s.macro}});

    return json{{"version", kReportVersion},
                {"folds", rep.cv.folds},
                {"seed", rep.cv.seed},
                {"stratified", rep.cv.stratified},
                {"top_ns", rep.cv.top_ns},
                {"lambdas", rep.lambdas},
                {"methods", methods},
                {"classes", classes},
                {"pairs", pairs},
                {"best", {{"lambda", sweep.overall.lambda},
                          {"method", std::string(method_name(sweep.overall.method))},
                          {"mean_macro", sweep.overall.macro}}},
                {"best_per_pair", per_pair}};
}

enum class ReportFormat { Table, Json };

inline std::string render_report(const CvReport& rep, ReportFormat format) {
    if (format == ReportFormat::Json) return report_to_json(rep).dump(1) + "\n";
    const auto best = sweep_report(rep).overall;
    return render_report_table(rep, best.lambda, best.method);
}

inline void export_report(const CvReport& rep, ReportFormat format, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("io_error", "cannot open '" + path + "' for writing");
    out << render_report(rep, format);
    out.flush();
    if (!out) throw Error("io_error", "write to '" + path + "' failed");
}

} // namespace actsel
