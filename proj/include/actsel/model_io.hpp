#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "actsel/ensemble.hpp"

namespace actsel {

using nlohmann::json;

namespace detail {

inline json optional_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json sub_svm_to_json(const SubSvm& s) {
    json pts = json::array();
    for (const auto& p : s.svm.support_points) pts.push_back({p[0], p[1]});
    json j{{"negative_class", s.svm.negative_class.code},
           {"positive_class", s.svm.positive_class.code},
           {"bias", s.svm.bias},
           {"gamma", s.svm.kernel.gamma},
           {"points", pts},
           {"labels", s.svm.support_labels},
           {"weights", s.svm.support_weights}};
    j["platt"] = s.platt ? json{{"a", s.platt->a}, {"b", s.platt->b}} : json(nullptr);
    return j;
}

inline SubSvm sub_svm_from_json(const json& j) {
    SubSvm s;
    s.svm.negative_class = ClassId{j.at("negative_class").get<int>()};
    s.svm.positive_class = ClassId{j.at("positive_class").get<int>()};
    s.svm.bias = j.at("bias").get<double>();
    s.svm.kernel.gamma = j.at("gamma").get<double>();
    for (const auto& p : j.at("points")) {
        if (!p.is_array() || p.size() != 2) throw Error("schema_violation", "support point must have 2 coordinates");
        s.svm.support_points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    s.svm.support_labels = j.at("labels").get<std::vector<int>>();
    s.svm.support_weights = j.at("weights").get<std::vector<double>>();
    if (s.svm.support_labels.size() != s.svm.size() || s.svm.support_weights.size() != s.svm.size())
        throw Error("schema_violation", "support point, label and weight counts differ");
    if (!(s.svm.negative_class < s.svm.positive_class))
        throw Error("schema_violation", "sub-SVM class orientation must have negative_class < positive_class");
    const auto& pl = j.at("platt");
    if (!pl.is_null()) s.platt = PlattParams{pl.at("a").get<double>(), pl.at("b").get<double>()};
    return s;
}

} // namespace detail

inline json model_to_json(const EnsembleModel& m) {
    json classes = json::array();
    for (const auto& [c, name] : m.catalog.entries()) classes.push_back({{"code", c}, {"name", name}});

    json norm = json::array();
    for (auto f : kAllFeatures) {
        const auto& s = m.normalization[f];
        norm.push_back({{"feature", std::string(info(f).token)},
                        {"code", code(f)},
                        {"mean", s.mean},
                        {"std", s.std},
                        {"count", s.count},
                        {"usable", s.usable}});
    }

    json pairs = json::array();
    for (const auto& pm : m.pairs) {
        json codes = json::array();
        for (auto c : pm.classes) codes.push_back(c.code);
        json svms = json::array();
        for (const auto& s : pm.svms) svms.push_back(detail::sub_svm_to_json(s));
        pairs.push_back({{"features", {code(pm.pair.low), code(pm.pair.high)}},
                         {"trained", pm.trained},
                         {"n_samples", pm.n_samples},
                         {"classes", codes},
                         {"gamma", pm.gamma},
                         {"svms", svms}});
    }

    return json{{"version", m.version},
                {"classes", classes},
                {"normalization", norm},
                {"config",
                 {{"lambda", m.config.lambda},
                  {"tolerance", m.config.tolerance},
                  {"max_passes", m.config.max_passes},
                  {"seed", m.config.seed},
                  {"gamma", detail::optional_to_json(m.config.gamma)}}},
                {"pairs", pairs}};
}

inline EnsembleModel model_from_json(const json& j) {
    try {
        if (!j.is_object()) throw Error("schema_violation", "model document must be a JSON object");
        const int version = j.at("version").get<int>();
        if (version != kModelVersion)
            throw Error("version_mismatch", "model version " + std::to_string(version) + " is not supported (expected " +
                                                std::to_string(kModelVersion) + ")");
        EnsembleModel m;
        m.version = version;
        ClassCatalog catalog;
        for (const auto& c : j.at("classes")) catalog.add(c.at("code").get<int>(), c.at("name").get<std::string>());
        m.catalog = std::move(catalog);

        const auto& norm = j.at("normalization");
        if (!norm.is_array() || norm.size() != kNumFeatures)
            throw Error("schema_violation", "normalization must list 5 features");
        for (const auto& n : norm) {
            const auto f = feature_from_code(n.at("code").get<int>());
            if (!f) throw Error("schema_violation", "unknown feature code in normalization");
            auto& s = m.normalization.features[index(*f)];
            s.mean = n.at("mean").get<double>();
            s.std = n.at("std").get<double>();
            s.count = n.at("count").get<std::size_t>();
            s.usable = n.at("usable").get<bool>();
            if (s.usable && !(s.std > 0.0)) throw Error("schema_violation", "usable feature with non-positive std");
        }

        const auto& cfg = j.at("config");
        m.config.lambda = cfg.at("lambda").get<double>();
        m.config.tolerance = cfg.at("tolerance").get<double>();
        m.config.max_passes = cfg.at("max_passes").get<std::size_t>();
        m.config.seed = cfg.at("seed").get<std::uint64_t>();
        if (!cfg.at("gamma").is_null()) m.config.gamma = cfg.at("gamma").get<double>();

        const auto& pairs = j.at("pairs");
        if (!pairs.is_array() || pairs.size() != kNumPairs) throw Error("schema_violation", "model must hold 10 pair records");
        std::array<bool, kNumPairs> seen{};
        for (const auto& pj : pairs) {
            const auto& fs = pj.at("features");
            const auto a = feature_from_code(fs.at(0).get<int>());
            const auto b = feature_from_code(fs.at(1).get<int>());
            if (!a || !b || code(*a) >= code(*b)) throw Error("schema_violation", "invalid feature pair");
            const FeaturePair fp{*a, *b};
            if (seen[pair_index(fp)]) throw Error("schema_violation", "duplicate pair record");
            seen[pair_index(fp)] = true;
            auto& pm = m.pairs[pair_index(fp)];
            pm.pair = fp;
            pm.trained = pj.at("trained").get<bool>();
            pm.n_samples = pj.at("n_samples").get<std::size_t>();
            for (const auto& c : pj.at("classes")) pm.classes.push_back(ClassId{c.get<int>()});
            if (!std::is_sorted(pm.classes.begin(), pm.classes.end()))
                throw Error("schema_violation", "pair classes must be sorted by code");
            pm.gamma = pj.at("gamma").get<double>();
            for (const auto& s : pj.at("svms")) pm.svms.push_back(detail::sub_svm_from_json(s));
            for (const auto& s : pm.svms) {
                if (!std::binary_search(pm.classes.begin(), pm.classes.end(), s.svm.negative_class) ||
                    !std::binary_search(pm.classes.begin(), pm.classes.end(), s.svm.positive_class))
                    throw Error("schema_violation", "sub-SVM refers to a class not eligible in its pair");
            }
        }
        return m;
    } catch (const json::exception& e) {
        throw Error("schema_violation", std::string("model JSON: ") + e.what());
    }
}

inline void save_model(const EnsembleModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("io_error", "cannot open '" + path + "' for writing");
    out << model_to_json(m).dump(1) << '\n';
    out.flush();
    if (!out) throw Error("io_error", "write to '" + path + "' failed");
}

inline EnsembleModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("io_error", "cannot open '" + path + "' for reading");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("schema_violation", std::string("model file is not valid JSON: ") + e.what());
    }
    return model_from_json(j);
}

} // namespace actsel
