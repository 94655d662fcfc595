#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "actsel/evaluation.hpp"
#include "synthetic.hpp"

using namespace actsel;

namespace {

const FeaturePair kStrainStress{FeatureId::Strain, FeatureId::Stress};

const std::vector<DecisionMethod> kBoth{DecisionMethod::Score, DecisionMethod::Probability};

std::vector<ClassId> labels_of(std::initializer_list<std::pair<int, int>> counts) {
    std::vector<ClassId> out;
    for (auto [c, n] : counts)
        for (int i = 0; i < n; ++i) out.push_back(ClassId{c});
    return out;
}

ConfigResult config(double lambda, DecisionMethod m, std::vector<double> macro) {
    ConfigResult c;
    c.lambda = lambda;
    c.method = m;
    c.macro = macro;
    c.micro = macro;
    return c;
}

CvReport synthetic_report(std::vector<double> lambdas, std::vector<DecisionMethod> methods,
                          std::vector<std::vector<ConfigResult>> per_pair) {
    CvReport rep;
    rep.lambdas = std::move(lambdas);
    rep.methods = std::move(methods);
    rep.catalog = ClassCatalog::standard();
    for (std::size_t i = 0; i < per_pair.size(); ++i) {
        PairResult p;
        p.pair = all_pairs()[i];
        p.evaluated = true;
        p.configs = std::move(per_pair[i]);
        rep.pairs.push_back(std::move(p));
    }
    return rep;
}

std::string error_code(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

} // namespace

TEST(AssignFolds, PartitionProperties) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto labels = labels_of({{1, 13}, {2, 7}, {5, 22}, {7, 5}});
        const std::size_t k = 5;
        const auto fold = assign_folds(labels, k, seed, true);
        ASSERT_EQ(fold.size(), labels.size());
        std::vector<std::size_t> size(k, 0);
        std::map<ClassId, std::vector<std::size_t>> per_class;
        for (std::size_t i = 0; i < fold.size(); ++i) {
            ASSERT_LT(fold[i], k);
            ++size[fold[i]];
            per_class[labels[i]].resize(k, 0);
            ++per_class[labels[i]][fold[i]];
        }
        EXPECT_LE(*std::max_element(size.begin(), size.end()) - *std::min_element(size.begin(), size.end()), 1u);
        for (const auto& [c, counts] : per_class)
            EXPECT_LE(*std::max_element(counts.begin(), counts.end()) - *std::min_element(counts.begin(), counts.end()), 1u);
    }
}

TEST(AssignFolds, UnstratifiedAndDeterministic) {
    const auto labels = labels_of({{1, 10}, {2, 3}});
    const auto a = assign_folds(labels, 4, 9, false);
    EXPECT_EQ(a, assign_folds(labels, 4, 9, false));
    std::vector<std::size_t> size(4, 0);
    for (auto f : a) ++size[f];
    EXPECT_LE(*std::max_element(size.begin(), size.end()) - *std::min_element(size.begin(), size.end()), 1u);
    EXPECT_NE(assign_folds(labels, 4, 9, true), assign_folds(labels, 4, 10, true));
}

TEST(AssignFolds, Errors) {
    EXPECT_EQ(error_code([] { assign_folds(labels_of({{1, 4}}), 1, 0, true); }), "invalid_folds");
    EXPECT_EQ(error_code([] { assign_folds(labels_of({{1, 4}}), 5, 0, true); }), "too_few_samples");
}

TEST(CrossValidate, TwoSeparatedGaussians) {
    const auto ds = synth::two_gaussians(100, 4);
    CvConfig cv;
    cv.folds = 5;
    const auto rep = cross_validate(ds, cv, {0.1}, std::nullopt, kBoth);
    ASSERT_EQ(rep.pairs.size(), 10u);
    for (const auto& p : rep.pairs) {
        if (p.pair == kStrainStress) continue;
        EXPECT_FALSE(p.evaluated);
        EXPECT_FALSE(p.skip_reason.empty());
    }
    const auto& p = rep.pairs[pair_index(kStrainStress)];
    ASSERT_TRUE(p.evaluated);
    EXPECT_EQ(p.n_samples, 200u);
    EXPECT_TRUE(p.flagged_classes.empty());
    for (const auto& c : p.configs) {
        EXPECT_GE(c.macro[0], 99.0);
        EXPECT_GE(c.micro[0], 99.0);
        // 20 test samples per class per fold: macro and micro coincide
        EXPECT_NEAR(c.macro[0], c.micro[0], 1e-12);
        std::size_t total = 0;
        for (const auto& cr : c.classes) total += cr.test_count;
        EXPECT_EQ(total, 200u);
    }
}

TEST(CrossValidate, TopNMonotoneAndMetricsConsistent) {
    auto specs = synth::seven_class_specs(9, 1.0, 0.6);
    specs[3].count = 14;
    const auto ds = synth::make_clusters(specs, 5);
    CvConfig cv;
    cv.top_ns = {1, 2, 3};
    const auto rep = cross_validate(ds, cv, {1.0, 0.01}, std::nullopt, kBoth);
    for (const auto& p : rep.pairs) {
        ASSERT_TRUE(p.evaluated);
        EXPECT_EQ(p.configs.size(), 4u);
        for (const auto& c : p.configs) {
            std::size_t correct = 0;
            std::size_t total = 0;
            double macro = 0.0;
            for (const auto& cr : c.classes) {
                for (std::size_t t = 1; t < 3; ++t) EXPECT_GE(cr.correct[t], cr.correct[t - 1]);
                correct += cr.correct[0];
                total += cr.test_count;
                macro += cr.accuracy(0) / static_cast<double>(c.classes.size());
            }
            EXPECT_NEAR(c.micro[0], 100.0 * static_cast<double>(correct) / static_cast<double>(total), 1e-12);
            EXPECT_NEAR(c.macro[0], macro, 1e-9);
            EXPECT_LE(c.macro[0], c.macro[1]);
            EXPECT_LE(c.micro[1], c.micro[2]);
        }
    }
}

TEST(CrossValidate, DeterministicForSeed) {
    const auto ds = synth::seven_class_dataset(6, 2);
    CvConfig cv;
    cv.seed = 17;
    const auto a = report_to_json(cross_validate(ds, cv, {1.0, 0.1}, std::nullopt, kBoth)).dump();
    const auto b = report_to_json(cross_validate(ds, cv, {1.0, 0.1}, std::nullopt, kBoth)).dump();
    EXPECT_EQ(a, b);
    cv.seed = 18;
    EXPECT_NE(a, report_to_json(cross_validate(ds, cv, {1.0, 0.1}, std::nullopt, kBoth)).dump());
}

TEST(CrossValidate, NormalizationRefitWithoutTestFold) {
    // One extreme sample: the fold holding it must see different scaling
    // than the folds that trained on it.
    auto ds = synth::two_gaussians(20, 6);
    ds.add({"outlier", ClassId{2}, {std::nullopt, 1e6, 1e6}, ""});
    CvConfig cv;
    cv.folds = 3;
    const auto rep = cross_validate(ds, cv, {1.0}, std::nullopt, {DecisionMethod::Score});
    const auto& p = rep.pairs[pair_index(kStrainStress)];
    ASSERT_EQ(p.fold_scaling.size(), 3u);
    const auto full = fit_normalization(ds);
    std::vector<double> means;
    std::size_t counted = 0;
    for (const auto& s : p.fold_scaling) {
        means.push_back(s.low.mean);
        counted += s.low.count;
    }
    // every sample sits in the training folds of all but one fold
    EXPECT_EQ(counted, 2u * full[FeatureId::Strain].count);
    std::sort(means.begin(), means.end());
    // Two folds trained with the outlier, one without; the one without has a
    // clearly smaller mean than the others.
    EXPECT_LT(means[0] + 0.1, means[1]);
    EXPECT_NE(means[0], full[FeatureId::Strain].mean);
}

TEST(CrossValidate, FlagsSmallClasses) {
    auto ds = synth::two_gaussians(20, 6);
    ds.add({"lonely1", ClassId{7}, {std::nullopt, 3.0, 3.0}, ""});
    ds.add({"lonely2", ClassId{7}, {std::nullopt, 3.3, 2.0}, ""});
    const auto rep = cross_validate(ds, CvConfig{}, {1.0}, std::nullopt, {DecisionMethod::Score});
    EXPECT_EQ(rep.pairs[pair_index(kStrainStress)].flagged_classes, (std::vector<ClassId>{ClassId{7}}));
}

TEST(CrossValidate, Errors) {
    const auto ds = synth::two_gaussians(10, 1);
    CvConfig one;
    one.folds = 1;
    EXPECT_EQ(error_code([&] { cross_validate(ds, one, {1.0}, std::nullopt, kBoth); }), "invalid_folds");
    CvConfig many;
    many.folds = 50;
    EXPECT_EQ(error_code([&] { cross_validate(ds, many, {1.0}, std::nullopt, kBoth); }), "too_few_samples");
    EXPECT_EQ(error_code([&] { cross_validate(Dataset{}, CvConfig{}, {1.0}, std::nullopt, kBoth); }), "empty_dataset");
    EXPECT_EQ(error_code([&] { cross_validate(ds, CvConfig{}, {-1.0}, std::nullopt, kBoth); }), "invalid_argument");
    EXPECT_EQ(error_code([&] {
                  detail::cross_validate_pair(ds, FeaturePair{FeatureId::Bandwidth, FeatureId::Efficiency}, CvConfig{},
                                              {1.0}, TrainConfig{}, std::nullopt, kBoth);
              }),
              "empty_pair_subset");
}

TEST(Sweep, SingleConfiguration) {
    const auto rep = synthetic_report({0.1}, {DecisionMethod::Probability},
                                      {{config(0.1, DecisionMethod::Probability, {40.0, 80.0})}});
    const auto best = sweep_report(rep);
    EXPECT_EQ(best.overall.lambda, 0.1);
    EXPECT_EQ(best.overall.method, DecisionMethod::Probability);
    ASSERT_EQ(best.per_pair.size(), 1u);
}

TEST(Sweep, ScoreDominatesProbability) {
    std::vector<std::vector<ConfigResult>> pairs;
    for (int p = 0; p < 3; ++p)
        pairs.push_back({config(1.0, DecisionMethod::Score, {60.0 + p, 90.0}),
                         config(1.0, DecisionMethod::Probability, {55.0 + p, 95.0})});
    const auto best = sweep_report(synthetic_report({1.0}, kBoth, pairs));
    EXPECT_EQ(best.overall.method, DecisionMethod::Score);
    for (const auto& s : best.per_pair) EXPECT_EQ(s.method, DecisionMethod::Score);
}

TEST(Sweep, TieBreaks) {
    // equal top-1: top-3 decides
    auto rep = synthetic_report({1.0, 0.1}, {DecisionMethod::Score},
                                {{config(1.0, DecisionMethod::Score, {50.0, 80.0}), config(0.1, DecisionMethod::Score, {50.0, 85.0})}});
    EXPECT_EQ(sweep_report(rep).overall.lambda, 0.1);
    // full tie: larger lambda
    rep = synthetic_report({0.01, 1.0}, {DecisionMethod::Score},
                           {{config(0.01, DecisionMethod::Score, {50.0, 80.0}), config(1.0, DecisionMethod::Score, {50.0, 80.0})}});
    EXPECT_EQ(sweep_report(rep).overall.lambda, 1.0);
    // overall uses the mean across pairs
    rep = synthetic_report({1.0, 0.1}, {DecisionMethod::Score},
                           {{config(1.0, DecisionMethod::Score, {90.0, 90.0}), config(0.1, DecisionMethod::Score, {70.0, 90.0})},
                            {config(1.0, DecisionMethod::Score, {10.0, 90.0}), config(0.1, DecisionMethod::Score, {40.0, 90.0})}});
    const auto best = sweep_report(rep);
    EXPECT_EQ(best.overall.lambda, 0.1);
    EXPECT_DOUBLE_EQ(best.overall.macro[0], 55.0);
    EXPECT_EQ(best.per_pair[0].lambda, 1.0);
    EXPECT_EQ(best.per_pair[1].lambda, 0.1);
}

TEST(Sweep, LambdaPointOneDominatesOnOverlappingClusters) {
    auto specs = synth::seven_class_specs(40, 1.2, 0.4);
    specs.resize(3);
    const auto ds = synth::make_clusters(specs, 1);
    const std::vector<double> lambdas{1.0, 0.1, 0.01, 0.001};
    const auto rep = cross_validate(ds, CvConfig{}, lambdas, std::nullopt, kBoth);
    const auto best = sweep_report(rep);

    // exhaustive comparison of all eight configurations
    double winner = -1.0;
    double runner_up = -1.0;
    double winner_lambda = 0.0;
    for (double l : lambdas)
        for (auto m : kBoth) {
            double mean = 0.0;
            for (const auto& p : rep.pairs) mean += rep.find(p, l, m)->macro[0] / 10.0;
            if (mean > winner) {
                runner_up = winner;
                winner = mean;
                winner_lambda = l;
            } else {
                runner_up = std::max(runner_up, mean);
            }
        }
    EXPECT_EQ(winner_lambda, 0.1);
    EXPECT_GT(winner, runner_up);
    EXPECT_EQ(best.overall.lambda, 0.1);
    EXPECT_EQ(best.overall.method, DecisionMethod::Score);
    EXPECT_NEAR(best.overall.macro[0], winner, 1e-9);
}

TEST(Export, TableLayout) {
    CvReport rep = synthetic_report({0.1}, {DecisionMethod::Score}, {{config(0.1, DecisionMethod::Score, {75.0, 100.0})}});
    auto& c = rep.pairs[0].configs[0];
    c.classes.push_back(ClassResult{ClassId{2}, 4, {3, 4}});
    c.classes.push_back(ClassResult{ClassId{6}, 2, {1, 2}});
    c.micro = {66.66666666666667, 100.0};
    rep.cv.top_ns = {1, 3};
    const auto table = render_report_table(rep, 0.1, DecisionMethod::Score);
    std::istringstream in(table);
    std::string l0, l1, l2, l3;
    std::getline(in, l0);
    std::getline(in, l1);
    std::getline(in, l2);
    std::getline(in, l3);
    EXPECT_EQ(l0, "lambda = 0.1, method = score");
    EXPECT_EQ(l1.find(" Top-1"), 16u);
    EXPECT_EQ(l1.find(" Top-3"), 16u + 9u * 8u);
    EXPECT_EQ(l2.substr(0, 16 + 24), "Features             PZT     DEA    IPMC");
    EXPECT_EQ(l3.substr(0, 16), "Band. & Stra.   ");
    EXPECT_EQ(l3.substr(16, 8 * 9), "       -   75.00       -       -       -   50.00       -   75.00   66.67");
    EXPECT_EQ(l3.size(), 16u + 2u * 9u * 8u);
}

TEST(Export, JsonAndFile) {
    const auto ds = synth::two_gaussians(10, 3);
    const auto rep = cross_validate(ds, CvConfig{}, {1.0, 0.1}, std::nullopt, kBoth);
    const auto j = report_to_json(rep);
    EXPECT_EQ(j["version"], kReportVersion);
    EXPECT_EQ(j["pairs"].size(), 10u);
    EXPECT_EQ(j["best"]["method"].get<std::string>().empty(), false);
    const auto& p = j["pairs"][pair_index(kStrainStress)];
    EXPECT_EQ(p["results"].size(), 4u);
    EXPECT_EQ(p["fold_scaling"].size(), 5u);

    const auto path = (std::filesystem::temp_directory_path() / "actsel_report.json").string();
    export_report(rep, ReportFormat::Json, path);
    std::ifstream in(path);
    EXPECT_EQ(nlohmann::json::parse(in), j);
    std::filesystem::remove(path);
    EXPECT_EQ(error_code([&] { export_report(rep, ReportFormat::Table, "/nonexistent-dir/x.txt"); }), "io_error");
}
