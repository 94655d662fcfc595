#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "actsel/dataset.hpp"
#include "synthetic.hpp"

using namespace actsel;

namespace {

const std::string kFixtures = ACTSEL_FIXTURE_DIR;

Dataset parse(const std::string& body) {
    std::istringstream in(std::string(kCsvHeader) + "\n" + body);
    return read_csv(in);
}

std::string error_code(const std::string& body) {
    try {
        parse(body);
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

} // namespace

TEST(Csv, ParsesMissingCells) {
    const auto ds = parse("a1,SMA,,25,200,,,\n");
    ASSERT_EQ(ds.size(), 1u);
    const auto& s = ds.samples()[0];
    EXPECT_EQ(s.cls, (ClassId{4}));
    EXPECT_FALSE(s.has(FeatureId::Bandwidth));
    EXPECT_DOUBLE_EQ(s.value(FeatureId::Strain), 25.0);
    EXPECT_DOUBLE_EQ(s.value(FeatureId::Stress), 200.0);
    EXPECT_FALSE(s.has(FeatureId::Efficiency));
    EXPECT_FALSE(s.has(FeatureId::PowerDensity));
    EXPECT_EQ(s.source, "");
}

TEST(Csv, RejectsBadRows) {
    EXPECT_EQ(error_code("a2,DEA,0,5,,,,\n"), "non_positive_feature");
    EXPECT_EQ(error_code("a2,DEA,-3,5,,,,\n"), "non_positive_feature");
    EXPECT_EQ(error_code("a2,DEA,abc,5,,,,\n"), "non_numeric");
    EXPECT_EQ(error_code("a2,DEA,NaN,5,,,,\n"), "non_numeric");
    EXPECT_EQ(error_code("a2,DEA,inf,5,,,,\n"), "non_numeric");
    EXPECT_EQ(error_code("a2,XYZ,1,5,,,,\n"), "unknown_class");
    EXPECT_EQ(error_code("a2,DEA,,,,,,\n"), "no_features");
    EXPECT_EQ(error_code("a2,DEA,1,5,,,\n"), "malformed_row");
    EXPECT_EQ(error_code("a1,DEA,1,5,,,,\na1,SMA,2,3,,,,\n"), "duplicate_id");
}

TEST(Csv, ReportsEveryBadRowNumber) {
    try {
        parse("ok,SMA,1,1,,,,\nb1,DEA,0,5,,,,\nb2,SMA,,,,,,\n");
        FAIL() << "expected an error";
    } catch (const Error& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("row 4"), std::string::npos) << msg;
        EXPECT_EQ(e.code(), "non_positive_feature");
    }
}

TEST(Csv, RejectsMalformedHeader) {
    std::istringstream wrong_order("id,class,strain_pct,bandwidth_hz,stress_mpa,efficiency_pct,power_density_w_per_g,source\n");
    EXPECT_THROW(read_csv(wrong_order), Error);
    std::istringstream missing("id,class,bandwidth_hz\n");
    EXPECT_THROW(read_csv(missing), Error);
    std::istringstream empty("");
    try {
        read_csv(empty);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "malformed_header");
    }
}

TEST(Csv, QuotedSourceWithCommas) {
    const auto ds = load_csv(kFixtures + "/three_rows.csv");
    ASSERT_EQ(ds.size(), 3u);
    EXPECT_EQ(ds.samples()[0].source, "Smith et al., 2019");
    EXPECT_EQ(ds.samples()[2].cls, (ClassId{3}));
}

TEST(Csv, FixtureRoundTrip) {
    const auto ds = load_csv(kFixtures + "/three_rows.csv");
    const auto path = std::filesystem::temp_directory_path() / "actsel_roundtrip.csv";
    save_csv(ds, path.string());
    EXPECT_EQ(load_csv(path.string()), ds);
    std::filesystem::remove(path);
}

TEST(Csv, RoundTripProperty) {
    // Random datasets with random missing patterns and awkward values survive
    // write -> read unchanged.
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> logv(-15.0, 15.0);
    std::bernoulli_distribution present(0.6);
    std::uniform_int_distribution<int> cls(1, 7);
    const std::vector<std::string> sources{"", "plain", "with, comma", "quote \"q\"", "both, \"x\""};
    for (int trial = 0; trial < 50; ++trial) {
        Dataset ds;
        for (int i = 0; i < 12; ++i) {
            ActuatorSample s;
            s.id = "id" + std::to_string(i) + (i % 3 == 0 ? ",x" : "");
            s.cls = ClassId{cls(rng)};
            for (auto f : kAllFeatures)
                if (present(rng)) s.features[index(f)] = std::exp(logv(rng));
            if (present_count(s.features) == 0) s.features[0] = 1.0 / 3.0;
            s.source = sources[static_cast<std::size_t>(i) % sources.size()];
            ds.add(s);
        }
        std::stringstream buf;
        write_csv(ds, buf);
        EXPECT_EQ(read_csv(buf), ds);
    }
}

TEST(Csv, MissingFileIsIoError) {
    try {
        load_csv("/nonexistent/file.csv");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "io_error");
    }
}

TEST(Stats, HandComputableLogVariance) {
    const auto ds = load_csv(kFixtures + "/stats_fixture.csv");
    const auto st = compute_stats(ds);
    const auto& strain = st[FeatureId::Strain];
    EXPECT_EQ(strain.count, 3u);
    EXPECT_NEAR(strain.log_variance, 1.0, 1e-12);  // ln-values {0,1,2}
    const double e = std::numbers::e;
    EXPECT_NEAR(strain.mean, (1 + e + e * e) / 3.0, 1e-12);
    EXPECT_DOUBLE_EQ(strain.min, 1.0);
    EXPECT_NEAR(strain.max, e * e, 1e-12);
    EXPECT_EQ(st[FeatureId::Bandwidth].count, 0u);
    EXPECT_FALSE(st[FeatureId::Bandwidth].defined());
}

TEST(Stats, SingleValueFeature) {
    const auto st = compute_stats(parse("x,SMA,,5,,,,\n"));
    const auto& s = st[FeatureId::Strain];
    EXPECT_EQ(s.count, 1u);
    EXPECT_DOUBLE_EQ(s.mean, 5.0);
    EXPECT_DOUBLE_EQ(s.variance, 0.0);
    EXPECT_DOUBLE_EQ(s.log_variance, 0.0);
}

TEST(Stats, CountsMatchPresenceAndMeanWithinRange) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto specs = synth::seven_class_specs(6);
        for (std::size_t c = 0; c < specs.size(); ++c) specs[c].present[(c + seed) % kNumFeatures] = false;
        const auto ds = synth::make_clusters(specs, seed);
        const auto st = compute_stats(ds);
        for (auto f : kAllFeatures) {
            std::size_t n = 0;
            for (const auto& s : ds.samples()) n += s.has(f);
            EXPECT_EQ(st[f].count, n);
            if (n) {
                EXPECT_LE(st[f].min, st[f].mean);
                EXPECT_LE(st[f].mean, st[f].max);
            }
        }
    }
}

TEST(Stats, TableLayout) {
    const auto table = render_stats_table(compute_stats(load_csv(kFixtures + "/stats_fixture.csv")));
    // Expected text produced independently with Python's statistics module,
    // %g / %.4f formatting and float repr.
    const std::string expected =
        "                     Count  Range                    Mean     Var.     Log Var.\n"
        "Bandwidth (Hz)       0      -                        -        -        -\n"
        "Strain (%)           3      (1.0, 7.38905609893065)  3.70245  10.9314  1.0000\n"
        "Stress (MPa)         1      (5.0, 5.0)               5        0        0.0000\n"
        "Efficiency (%)       0      -                        -        -        -\n"
        "Power Density (W/g)  0      -                        -        -        -\n";
    EXPECT_EQ(table, expected);
}

TEST(Format, PythonStyleRepr) {
    EXPECT_EQ(detail::float_repr(0.0333), "0.0333");
    EXPECT_EQ(detail::float_repr(100000.0), "100000.0");
    EXPECT_EQ(detail::float_repr(8.23e-07), "8.23e-07");
    EXPECT_EQ(detail::float_repr(0.001), "0.001");
    EXPECT_EQ(detail::float_repr(1000.0), "1000.0");
    EXPECT_EQ(detail::float_repr(0.15), "0.15");
    EXPECT_EQ(detail::float_repr(20000.0), "20000.0");
    EXPECT_EQ(detail::float_repr(1e16), "1e+16");
    EXPECT_EQ(detail::printf_double("%g", 4658.63), "4658.63");
    EXPECT_EQ(detail::printf_double("%g", 3.2903e+08), "3.2903e+08");
}

TEST(Normalization, ConstantColumnUnusable) {
    const double e = std::numbers::e;
    Dataset ds;
    for (int i = 0; i < 3; ++i) ds.add({"c" + std::to_string(i), ClassId{1}, {std::nullopt, e}, ""});
    const auto p = fit_normalization(ds);
    EXPECT_NEAR(p[FeatureId::Strain].mean, 1.0, 1e-15);
    EXPECT_FALSE(p.usable(FeatureId::Strain));
    EXPECT_FALSE(p.usable(FeatureId::Bandwidth));
    EXPECT_THROW(transform(p, FeatureId::Strain, 2.0), Error);
}

TEST(Normalization, TwoPoints) {
    const double e = std::numbers::e;
    Dataset ds;
    ds.add({"a", ClassId{1}, {std::nullopt, 1.0}, ""});
    ds.add({"b", ClassId{1}, {std::nullopt, e * e}, ""});
    const auto p = fit_normalization(ds);
    ASSERT_TRUE(p.usable(FeatureId::Strain));
    EXPECT_NEAR(p[FeatureId::Strain].mean, 1.0, 1e-15);
    EXPECT_NEAR(p[FeatureId::Strain].std, 1.0, 1e-15);
}

TEST(Normalization, SingleSampleUnusable) {
    Dataset ds;
    ds.add({"a", ClassId{1}, {std::nullopt, 3.0}, ""});
    EXPECT_FALSE(fit_normalization(ds).usable(FeatureId::Strain));
}

TEST(Normalization, TransformExamples) {
    NormalizationParams p;
    p.features[index(FeatureId::Strain)] = {0.0, 1.0, 2, true};
    p.features[index(FeatureId::Stress)] = {1.0, 2.0, 2, true};
    EXPECT_DOUBLE_EQ(transform(p, FeatureId::Strain, 1.0), 0.0);
    EXPECT_NEAR(transform(p, FeatureId::Stress, std::exp(3.0)), 1.0, 1e-15);
    EXPECT_THROW(transform(p, FeatureId::Strain, 0.0), Error);
    EXPECT_THROW(transform(p, FeatureId::Strain, -1.0), Error);
    EXPECT_THROW(inverse_transform(p, FeatureId::Bandwidth, 0.0), Error);
}

TEST(Normalization, ZScoreAndRoundTripProperties) {
    std::mt19937_64 rng(11);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto ds = synth::seven_class_dataset(3 + seed % 5, seed);
        const auto p = fit_normalization(ds);
        for (auto f : kAllFeatures) {
            ASSERT_TRUE(p.usable(f));
            std::vector<double> z;
            for (const auto& s : ds.samples()) z.push_back(transform(p, f, s.value(f)));
            const auto mv = detail::mean_var(z);
            EXPECT_LT(std::abs(mv.mean), 1e-9);
            EXPECT_LT(std::abs(mv.variance - 1.0), 1e-9);
            for (const auto& s : ds.samples()) {
                const double x = s.value(f);
                EXPECT_LT(std::abs(inverse_transform(p, f, transform(p, f, x)) - x) / x, 1e-12);
            }
            // strictly increasing
            std::uniform_real_distribution<double> u(-10.0, 10.0);
            for (int k = 0; k < 20; ++k) {
                const double a = std::exp(u(rng));
                const double b = a * (1.0 + 1e-6);
                EXPECT_LT(transform(p, f, a), transform(p, f, b));
            }
        }
    }
}
