#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "actsel/error.hpp"

namespace actsel {

inline constexpr std::size_t kNumFeatures = 5;

// Stable integer codes 0..4 are used in files and API payloads.
enum class FeatureId : int {
    Bandwidth = 0,
    Strain = 1,
    Stress = 2,
    Efficiency = 3,
    PowerDensity = 4,
};

inline constexpr std::array<FeatureId, kNumFeatures> kAllFeatures = {
    FeatureId::Bandwidth, FeatureId::Strain, FeatureId::Stress,
    FeatureId::Efficiency, FeatureId::PowerDensity};

struct FeatureInfo {
    std::string_view token;   // CLI / JSON key
    std::string_view column;  // CSV header column
    std::string_view label;   // table row label
    std::string_view unit;
    std::string_view abbrev;  // compact pair label, e.g. "Stra."
};

inline constexpr std::array<FeatureInfo, kNumFeatures> kFeatureInfo = {{
    {"bandwidth", "bandwidth_hz", "Bandwidth (Hz)", "Hz", "Band."},
    {"strain", "strain_pct", "Strain (%)", "%", "Stra."},
    {"stress", "stress_mpa", "Stress (MPa)", "MPa", "Stres."},
    {"efficiency", "efficiency_pct", "Efficiency (%)", "%", "Effi."},
    {"power_density", "power_density_w_per_g", "Power Density (W/g)", "W/g", "Pow."},
}};

constexpr int code(FeatureId f) noexcept { return static_cast<int>(f); }
constexpr std::size_t index(FeatureId f) noexcept { return static_cast<std::size_t>(f); }
constexpr const FeatureInfo& info(FeatureId f) noexcept { return kFeatureInfo[index(f)]; }

inline std::optional<FeatureId> feature_from_code(int c) {
    if (c < 0 || c >= static_cast<int>(kNumFeatures)) return std::nullopt;
    return static_cast<FeatureId>(c);
}

inline std::optional<FeatureId> feature_from_token(std::string_view token) {
    for (auto f : kAllFeatures)
        if (info(f).token == token) return f;
    return std::nullopt;
}

// Raw feature values of one sample or query; nullopt = missing.
using FeatureValues = std::array<std::optional<double>, kNumFeatures>;

inline std::size_t present_count(const FeatureValues& v) {
    std::size_t n = 0;
    for (const auto& x : v) n += x.has_value() ? 1 : 0;
    return n;
}

inline bool valid_feature_value(double x) { return std::isfinite(x) && x > 0.0; }

// Actuator class label. Codes are positive integers.
struct ClassId {
    int code = 0;
    friend constexpr auto operator<=>(const ClassId&, const ClassId&) = default;
};

// Maps class codes to names. The default catalog holds the seven classes the
// tool ships with; other catalogs can be configured for new datasets.
class ClassCatalog {
public:
    ClassCatalog() = default;
    explicit ClassCatalog(std::vector<std::pair<int, std::string>> entries) {
        for (auto& [c, name] : entries) add(c, std::move(name));
    }

    static const ClassCatalog& standard() {
        static const ClassCatalog catalog({{1, "PZT"}, {2, "DEA"}, {3, "IPMC"}, {4, "SMA"},
                                           {5, "SFA"}, {6, "SCP"}, {7, "EAP"}});
        return catalog;
    }

    void add(int c, std::string name) {
        if (c <= 0) throw Error("invalid_class", "class codes must be positive, got " + std::to_string(c));
        for (const auto& e : entries_)
            if (e.first == c || e.second == name)
                throw Error("invalid_class", "duplicate class entry '" + name + "'");
        entries_.emplace_back(c, std::move(name));
    }

    std::optional<ClassId> find(std::string_view name) const {
        for (const auto& [c, n] : entries_)
            if (n == name) return ClassId{c};
        return std::nullopt;
    }

    bool contains(ClassId id) const {
        for (const auto& e : entries_)
            if (e.first == id.code) return true;
        return false;
    }

    std::string name(ClassId id) const {
        for (const auto& [c, n] : entries_)
            if (c == id.code) return n;
        return "class" + std::to_string(id.code);
    }

    const std::vector<std::pair<int, std::string>>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    friend bool operator==(const ClassCatalog&, const ClassCatalog&) = default;

private:
    std::vector<std::pair<int, std::string>> entries_;
};

// Two normalized feature coordinates.
using Vec2 = std::array<double, 2>;

} // namespace actsel
