#pragma once

// Synthetic actuator datasets for tests. Values are generated in log space
// and exponentiated, so every feature is strictly positive.

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "actsel/dataset.hpp"

namespace actsel::synth {

struct ClusterSpec {
    ClassId cls;
    std::array<double, kNumFeatures> log_center{};
    double log_spread = 0.3;
    std::size_t count = 20;
    std::array<bool, kNumFeatures> present{true, true, true, true, true};
};

inline Dataset make_clusters(const std::vector<ClusterSpec>& specs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    Dataset ds;
    std::size_t next = 0;
    for (const auto& s : specs) {
        for (std::size_t i = 0; i < s.count; ++i) {
            ActuatorSample smp;
            smp.id = "s" + std::to_string(next++);
            smp.cls = s.cls;
            for (auto f : kAllFeatures) {
                const double z = n01(rng);
                if (s.present[index(f)]) smp.features[index(f)] = std::exp(s.log_center[index(f)] + s.log_spread * z);
            }
            smp.source = "synthetic";
            ds.add(std::move(smp));
        }
    }
    return ds;
}

// Seven well-separated classes, every feature present. Class centers sit on
// a closed curve whose projection onto any feature pair keeps them distinct.
inline std::vector<ClusterSpec> seven_class_specs(std::size_t per_class, double radius = 3.0, double spread = 0.25) {
    std::vector<ClusterSpec> specs;
    for (int c = 0; c < 7; ++c) {
        ClusterSpec s;
        s.cls = ClassId{c + 1};
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            const double theta = 2.0 * std::numbers::pi * c / 7.0 + 0.9 * static_cast<double>(f);
            s.log_center[f] = radius * std::cos(theta);
        }
        s.log_spread = spread;
        s.count = per_class;
        specs.push_back(s);
    }
    return specs;
}

inline Dataset seven_class_dataset(std::size_t per_class, std::uint64_t seed) {
    return make_clusters(seven_class_specs(per_class), seed);
}

// Two Gaussian classes far apart in (strain, stress); other features missing.
inline Dataset two_gaussians(std::size_t per_class, std::uint64_t seed, double separation = 4.0) {
    ClusterSpec a;
    a.cls = ClassId{4};
    a.log_center = {0.0, 0.0, 0.0, 0.0, 0.0};
    a.log_spread = 0.5;
    a.count = per_class;
    a.present = {false, true, true, false, false};
    ClusterSpec b = a;
    b.cls = ClassId{2};
    b.log_center = {0.0, separation, separation, 0.0, 0.0};
    return make_clusters({a, b}, seed);
}

} // namespace actsel::synth
