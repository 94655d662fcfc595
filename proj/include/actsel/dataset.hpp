#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "actsel/detail/text.hpp"
#include "actsel/error.hpp"
#include "actsel/features.hpp"

namespace actsel {

struct ActuatorSample {
    std::string id;
    ClassId cls;
    FeatureValues features{};
    std::string source;

    bool has(FeatureId f) const { return features[index(f)].has_value(); }
    double value(FeatureId f) const { return *features[index(f)]; }

    friend bool operator==(const ActuatorSample&, const ActuatorSample&) = default;
};

// Returns an empty string when the sample is valid, otherwise the violated rule.
inline std::string sample_violation(const ActuatorSample& s) {
    if (present_count(s.features) == 0) return "all features missing";
    for (auto f : kAllFeatures) {
        if (s.has(f) && !valid_feature_value(s.value(f)))
            return "non-positive feature '" + std::string(info(f).token) + "'";
    }
    return {};
}

// Ordered, id-unique collection of samples. Insertion order is preserved so
// that everything trained from it is deterministic.
class Dataset {
public:
    Dataset() : catalog_(ClassCatalog::standard()) {}
    explicit Dataset(ClassCatalog catalog) : catalog_(std::move(catalog)) {}

    void add(ActuatorSample sample) {
        if (auto why = sample_violation(sample); !why.empty())
            throw Error(present_count(sample.features) == 0 ? "no_features" : "non_positive_feature",
                        "sample '" + sample.id + "': " + why);
        if (!catalog_.contains(sample.cls))
            throw Error("unknown_class", "sample '" + sample.id + "': unknown class code " +
                                             std::to_string(sample.cls.code));
        if (!ids_.insert(sample.id).second)
            throw Error("duplicate_id", "duplicate sample id '" + sample.id + "'");
        samples_.push_back(std::move(sample));
    }

    const std::vector<ActuatorSample>& samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    const ClassCatalog& catalog() const { return catalog_; }

    friend bool operator==(const Dataset& a, const Dataset& b) {
        return a.catalog_ == b.catalog_ && a.samples_ == b.samples_;
    }

private:
    ClassCatalog catalog_;
    std::vector<ActuatorSample> samples_;
    std::unordered_set<std::string> ids_;
};

inline constexpr std::string_view kCsvHeader =
    "id,class,bandwidth_hz,strain_pct,stress_mpa,efficiency_pct,power_density_w_per_g,source";

inline Dataset read_csv(std::istream& in, const ClassCatalog& catalog = ClassCatalog::standard()) {
    std::string line;
    if (!std::getline(in, line)) throw Error("malformed_header", "missing header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    {
        auto header = detail::parse_csv_record(detail::trim(line));
        const auto expected = detail::split(kCsvHeader, ',');
        if (!header || *header != expected) {
            std::string got = header ? "" : "unterminated quote";
            if (header) {
                for (std::size_t i = 0; i < header->size(); ++i) got += (i ? "," : "") + (*header)[i];
            }
            throw Error("malformed_header", "expected header '" + std::string(kCsvHeader) + "', got '" + got + "'");
        }
    }

    Dataset ds(catalog);
    std::vector<std::string> problems;
    std::string first_code;
    auto reject = [&](std::size_t row, const std::string& code, const std::string& msg) {
        if (first_code.empty()) first_code = code;
        problems.push_back("row " + std::to_string(row) + ": " + msg);
    };

    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty()) continue;
        auto fields = detail::parse_csv_record(line);
        if (!fields) {
            reject(row, "malformed_row", "unterminated quoted field");
            continue;
        }
        if (fields->size() != 8) {
            reject(row, "malformed_row", "expected 8 columns, got " + std::to_string(fields->size()));
            continue;
        }
        const auto& f = *fields;
        ActuatorSample s;
        s.id = std::string(detail::trim(f[0]));
        s.source = f[7];
        if (s.id.empty()) {
            reject(row, "malformed_row", "empty id");
            continue;
        }
        const auto cls = catalog.find(detail::trim(f[1]));
        if (!cls) {
            reject(row, "unknown_class", "unknown class token '" + f[1] + "'");
            continue;
        }
        s.cls = *cls;
        bool ok = true;
        for (auto feat : kAllFeatures) {
            const auto cell = detail::trim(f[2 + index(feat)]);
            if (cell.empty()) continue;
            const auto v = detail::parse_double(cell);
            if (!v || !std::isfinite(*v)) {
                reject(row, "non_numeric", "non-numeric " + std::string(info(feat).column) + " '" + std::string(cell) + "'");
                ok = false;
                break;
            }
            if (*v <= 0.0) {
                reject(row, "non_positive_feature", "non-positive feature " + std::string(info(feat).column) + " = " + std::string(cell));
                ok = false;
                break;
            }
            s.features[index(feat)] = *v;
        }
        if (!ok) continue;
        if (present_count(s.features) == 0) {
            reject(row, "no_features", "all features missing");
            continue;
        }
        try {
            ds.add(std::move(s));
        } catch (const Error& e) {
            reject(row, e.code(), e.what());
        }
    }
    if (!problems.empty()) {
        std::string msg = std::to_string(problems.size()) + " invalid row(s): ";
        for (std::size_t i = 0; i < problems.size(); ++i) msg += (i ? "; " : "") + problems[i];
        throw Error(first_code, msg);
    }
    return ds;
}

inline Dataset load_csv(const std::string& path, const ClassCatalog& catalog = ClassCatalog::standard()) {
    std::ifstream in(path);
    if (!in) throw Error("io_error", "cannot open '" + path + "' for reading");
    return read_csv(in, catalog);
}

inline void write_csv(const Dataset& ds, std::ostream& out) {
    out << kCsvHeader << '\n';
    for (const auto& s : ds.samples()) {
        out << detail::csv_escape(s.id) << ',' << detail::csv_escape(ds.catalog().name(s.cls));
        for (auto f : kAllFeatures) {
            out << ',';
            if (s.has(f)) out << detail::shortest(s.value(f));
        }
        out << ',' << detail::csv_escape(s.source) << '\n';
    }
}

inline void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("io_error", "cannot open '" + path + "' for writing");
    write_csv(ds, out);
    out.flush();
    if (!out) throw Error("io_error", "write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Summary statistics. The variance columns use the sample (n - 1) estimator;
// a single observation reports 0.

struct FeatureSummary {
    std::size_t count = 0;
    double min = std::numeric_limits<double>::quiet_NaN();
    double max = std::numeric_limits<double>::quiet_NaN();
    double mean = std::numeric_limits<double>::quiet_NaN();
    double variance = std::numeric_limits<double>::quiet_NaN();
    double log_variance = std::numeric_limits<double>::quiet_NaN();

    bool defined() const { return count > 0; }
};

struct FeatureStats {
    std::array<FeatureSummary, kNumFeatures> features{};
    const FeatureSummary& operator[](FeatureId f) const { return features[index(f)]; }
};

namespace detail {

struct MeanVar {
    double mean = 0.0;
    double variance = 0.0;
};

// Two-pass mean and population variance.
inline MeanVar mean_var(const std::vector<double>& xs) {
    MeanVar mv;
    if (xs.empty()) return mv;
    double sum = 0.0;
    for (double x : xs) sum += x;
    mv.mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mv.mean) * (x - mv.mean);
    mv.variance = ss / static_cast<double>(xs.size());
    return mv;
}

inline std::vector<double> column(const std::vector<ActuatorSample>& samples, FeatureId f, bool log) {
    std::vector<double> xs;
    for (const auto& s : samples)
        if (s.has(f)) xs.push_back(log ? std::log(s.value(f)) : s.value(f));
    return xs;
}

} // namespace detail

inline FeatureStats compute_stats(const Dataset& ds) {
    FeatureStats st;
    for (auto f : kAllFeatures) {
        const auto raw = detail::column(ds.samples(), f, false);
        auto& out = st.features[index(f)];
        out.count = raw.size();
        if (raw.empty()) continue;
        const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
        out.min = *lo;
        out.max = *hi;
        const auto mv = detail::mean_var(raw);
        // The mean can drift one ulp outside [min, max] for near-constant columns.
        out.mean = std::clamp(mv.mean, out.min, out.max);
        const auto n = static_cast<double>(raw.size());
        const double bessel = raw.size() > 1 ? n / (n - 1.0) : 0.0;
        out.variance = mv.variance * bessel;
        out.log_variance = detail::mean_var(detail::column(ds.samples(), f, true)).variance * bessel;
    }
    return st;
}

// Table layout: Count | Range | Mean | Var. | Log Var., one row per feature.
inline std::string render_stats_table(const FeatureStats& st) {
    std::vector<std::array<std::string, 6>> rows;
    rows.push_back({"", "Count", "Range", "Mean", "Var.", "Log Var."});
    for (auto f : kAllFeatures) {
        const auto& s = st[f];
        if (!s.defined()) {
            rows.push_back({std::string(info(f).label), "0", "-", "-", "-", "-"});
            continue;
        }
        rows.push_back({std::string(info(f).label), std::to_string(s.count),
                        "(" + detail::float_repr(s.min) + ", " + detail::float_repr(s.max) + ")",
                        detail::printf_double("%g", s.mean), detail::printf_double("%g", s.variance),
                        detail::printf_double("%.4f", s.log_variance)});
    }
    std::array<std::size_t, 6> width{};
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    std::string out;
    for (const auto& r : rows) {
        std::string line;
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (c) line += "  ";
            line += detail::pad_right(r[c], width[c]);
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Log + z-score normalization.

struct FeatureScaling {
    double mean = 0.0;  // mean of ln-values
    double std = 0.0;   // population std of ln-values
    std::size_t count = 0;
    bool usable = false;

    friend bool operator==(const FeatureScaling&, const FeatureScaling&) = default;
};

struct NormalizationParams {
    std::array<FeatureScaling, kNumFeatures> features{};

    const FeatureScaling& operator[](FeatureId f) const { return features[index(f)]; }
    bool usable(FeatureId f) const { return features[index(f)].usable; }

    friend bool operator==(const NormalizationParams&, const NormalizationParams&) = default;
};

template <typename SampleRange>
NormalizationParams fit_normalization(const SampleRange& samples) {
    NormalizationParams p;
    for (auto f : kAllFeatures) {
        std::vector<double> logs;
        for (const ActuatorSample& s : samples)
            if (s.has(f)) logs.push_back(std::log(s.value(f)));
        auto& out = p.features[index(f)];
        out.count = logs.size();
        if (logs.empty()) continue;
        const auto mv = detail::mean_var(logs);
        out.mean = mv.mean;
        out.std = std::sqrt(mv.variance);
        // Fewer than two points or a (numerically) constant column cannot be scaled.
        const double scale = std::max(1.0, std::abs(mv.mean));
        out.usable = logs.size() >= 2 && out.std > 1e-12 * scale;
        if (!out.usable) out.std = 0.0;
    }
    return p;
}

inline NormalizationParams fit_normalization(const Dataset& ds) { return fit_normalization(ds.samples()); }

inline double transform(const NormalizationParams& p, FeatureId f, double raw) {
    if (!valid_feature_value(raw))
        throw Error("non_positive_feature", std::string(info(f).token) + " must be positive and finite, got " +
                                                detail::shortest(raw));
    const auto& s = p[f];
    if (!s.usable) throw Error("unusable_feature", "feature '" + std::string(info(f).token) + "' is not usable");
    return (std::log(raw) - s.mean) / s.std;
}

inline double inverse_transform(const NormalizationParams& p, FeatureId f, double normalized) {
    const auto& s = p[f];
    if (!s.usable) throw Error("unusable_feature", "feature '" + std::string(info(f).token) + "' is not usable");
    return std::exp(normalized * s.std + s.mean);
}

} // namespace actsel
