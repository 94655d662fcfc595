#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "actsel/dataset.hpp"
#include "actsel/ensemble.hpp"
#include "actsel/model_io.hpp"
#include "actsel/render.hpp"

namespace actsel::service {

using nlohmann::json;

inline constexpr std::size_t kMaxGridTicks = 512;
inline constexpr std::size_t kDefaultGridTicks = 200;

// Everything the API serves. Loaded once, then only read.
struct State {
    EnsembleModel model;
    Dataset dataset;
    std::optional<json> metrics;
    std::string cors_origin;
};

struct Response {
    int status = 200;
    json body;
};

using Params = std::map<std::string, std::string>;

inline Response error_response(int status, const std::string& code, const std::string& message) {
    return {status, json{{"error", {{"status", status}, {"code", code}, {"message", message}}}}};
}

inline int status_for(const std::string& code) {
    if (code == "no_metrics" || code == "not_found") return 404;
    if (code == "no_convergence" || code == "singular_system" || code == "internal") return 500;
    return 400;
}

template <typename F>
Response guarded(F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        return error_response(status_for(e.code()), e.code(), e.what());
    } catch (const std::exception& e) {
        return error_response(500, "internal", e.what());
    }
}

inline Response handle_meta(const State& s) {
    json classes = json::array();
    for (const auto& [c, name] : s.model.catalog.entries()) classes.push_back({{"code", c}, {"name", name}});
    json features = json::array();
    for (auto f : kAllFeatures)
        features.push_back({{"code", code(f)},
                            {"name", std::string(info(f).token)},
                            {"label", std::string(info(f).label)},
                            {"unit", std::string(info(f).unit)}});
    json pairs = json::array();
    for (const auto& pm : s.model.pairs) {
        json present = json::array();
        for (auto c : pm.classes) present.push_back(c.code);
        pairs.push_back({{"pair", {code(pm.pair.low), code(pm.pair.high)}},
                         {"features", {std::string(info(pm.pair.low).token), std::string(info(pm.pair.high).token)}},
                         {"trained", pm.trained},
                         {"n_samples", pm.n_samples},
                         {"n_sub_svms", pm.svms.size()},
                         {"classes_present", present}});
    }
    return {200, json{{"classes", classes},
                      {"features", features},
                      {"model_version", s.model.version},
                      {"pairs", pairs}}};
}

inline FeatureValues parse_feature_object(const json& obj) {
    if (!obj.is_object()) throw Error("invalid_body", "'features' must be an object of name -> value");
    FeatureValues q{};
    for (const auto& [key, val] : obj.items()) {
        const auto f = feature_from_token(key);
        if (!f) throw Error("unknown_feature", "unknown feature '" + key + "'");
        if (val.is_null()) continue;
        if (!val.is_number()) throw Error("non_numeric", "feature '" + key + "' must be a number");
        q[index(*f)] = val.get<double>();
    }
    return q;
}

inline Response handle_predict(const State& s, const std::string& body) {
    return guarded([&] {
        json req;
        try {
            req = json::parse(body);
        } catch (const json::exception& e) {
            throw Error("invalid_json", std::string("request body is not valid JSON: ") + e.what());
        }
        if (!req.is_object()) throw Error("invalid_body", "request body must be a JSON object");
        if (!req.contains("features")) throw Error("too_few_features", "request has no 'features'");
        const auto q = parse_feature_object(req["features"]);

        std::size_t top_n = 4;
        if (req.contains("top_n")) {
            const auto& t = req["top_n"];
            if (!t.is_number_integer() || t.get<long long>() < 1) throw Error("invalid_top_n", "top_n must be a positive integer");
            top_n = t.get<std::size_t>();
        }
        DecisionMethod method = DecisionMethod::Score;
        if (req.contains("method")) {
            if (!req["method"].is_string()) throw Error("invalid_method", "method must be \"score\" or \"probability\"");
            const auto m = parse_method(req["method"].get<std::string>());
            if (!m) throw Error("invalid_method", "method must be \"score\" or \"probability\"");
            method = *m;
        }
        const auto preds = predict(s.model, q, top_n, method);
        return Response{200, predictions_to_json(s.model.catalog, preds, method)};
    });
}

namespace detail {

inline FeatureId feature_param(const Params& p, const std::string& key) {
    const auto it = p.find(key);
    if (it == p.end()) throw Error("missing_parameter", "query parameter '" + key + "' is required");
    if (auto f = feature_from_token(it->second)) return *f;
    if (auto v = actsel::detail::parse_double(it->second); v && *v == std::floor(*v))
        if (auto f = feature_from_code(static_cast<int>(*v))) return *f;
    throw Error("unknown_feature", "unknown feature '" + it->second + "'");
}

inline std::optional<double> number_param(const Params& p, const std::string& key) {
    const auto it = p.find(key);
    if (it == p.end()) return std::nullopt;
    const auto v = actsel::detail::parse_double(it->second);
    if (!v || !std::isfinite(*v)) throw Error("invalid_parameter", "query parameter '" + key + "' must be a number");
    return v;
}

inline std::size_t count_param(const Params& p, const std::string& key, std::size_t fallback) {
    const auto v = number_param(p, key);
    if (!v) return fallback;
    if (*v < 2 || *v != std::floor(*v)) throw Error("invalid_range", "'" + key + "' must be an integer >= 2");
    if (*v > static_cast<double>(kMaxGridTicks))
        throw Error("grid_too_large", "'" + key + "' exceeds the limit of " + std::to_string(kMaxGridTicks));
    return static_cast<std::size_t>(*v);
}

inline AxisRange data_range(const Dataset& ds, FeatureId f, FeatureId other) {
    AxisRange r{0.0, 0.0};
    bool any = false;
    for (const auto& s : ds.samples()) {
        if (!s.has(f) || !s.has(other)) continue;
        const double v = s.value(f);
        r.min = any ? std::min(r.min, v) : v;
        r.max = any ? std::max(r.max, v) : v;
        any = true;
    }
    if (!any) throw Error("invalid_range", "no data to derive a default range; pass explicit bounds");
    // Half a decade of padding on each side in log space.
    return {r.min / std::sqrt(10.0), r.max * std::sqrt(10.0)};
}

} // namespace detail

inline Response handle_scatter(const State& s, const Params& p) {
    return guarded([&] {
        const auto x = detail::feature_param(p, "x");
        const auto y = detail::feature_param(p, "y");
        if (x == y) throw Error("invalid_pair", "x and y must be different features");
        json pts = json::array();
        for (const auto& smp : s.dataset.samples()) {
            if (!smp.has(x) || !smp.has(y)) continue;
            pts.push_back({{"x_raw", smp.value(x)},
                           {"y_raw", smp.value(y)},
                           {"class", smp.cls.code},
                           {"id", smp.id},
                           {"source", smp.source}});
        }
        return Response{200, json{{"x", std::string(info(x).token)}, {"y", std::string(info(y).token)}, {"points", pts}}};
    });
}

inline Response handle_grid(const State& s, const Params& p) {
    return guarded([&] {
        const auto x = detail::feature_param(p, "x");
        const auto y = detail::feature_param(p, "y");
        const auto pair = make_pair(x, y);
        const std::size_t nx = detail::count_param(p, "nx", kDefaultGridTicks);
        const std::size_t ny = detail::count_param(p, "ny", kDefaultGridTicks);
        AxisRange xr{};
        AxisRange yr{};
        const auto xmin = detail::number_param(p, "xmin");
        const auto xmax = detail::number_param(p, "xmax");
        const auto ymin = detail::number_param(p, "ymin");
        const auto ymax = detail::number_param(p, "ymax");
        if (!xmin || !xmax) xr = detail::data_range(s.dataset, x, y);
        if (!ymin || !ymax) yr = detail::data_range(s.dataset, y, x);
        if (xmin) xr.min = *xmin;
        if (xmax) xr.max = *xmax;
        if (ymin) yr.min = *ymin;
        if (ymax) yr.max = *ymax;

        const bool swapped = x != pair.low;
        auto g = swapped ? decision_grid(s.model, pair, yr, xr, ny, nx) : decision_grid(s.model, pair, xr, yr, nx, ny);
        if (swapped) g = transpose(g);
        return Response{200, grid_to_json(s.model.catalog, g, swapped)};
    });
}

inline Response handle_metrics(const State& s) {
    if (!s.metrics) return error_response(404, "no_metrics", "no cross-validation report was loaded");
    return {200, *s.metrics};
}

inline void mount(httplib::Server& svr, const State& state) {
    auto send = [&state](httplib::Response& res, const Response& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
        if (!state.cors_origin.empty()) res.set_header("Access-Control-Allow-Origin", state.cors_origin);
    };
    auto params = [](const httplib::Request& req) {
        Params p;
        for (const auto& [k, v] : req.params) p[k] = v;
        return p;
    };

    svr.Get("/api/meta", [&state, send](const httplib::Request&, httplib::Response& res) { send(res, handle_meta(state)); });
    svr.Post("/api/predict", [&state, send](const httplib::Request& req, httplib::Response& res) {
        send(res, handle_predict(state, req.body));
    });
    svr.Get("/api/scatter", [&state, send, params](const httplib::Request& req, httplib::Response& res) {
        send(res, handle_scatter(state, params(req)));
    });
    svr.Get("/api/grid", [&state, send, params](const httplib::Request& req, httplib::Response& res) {
        send(res, handle_grid(state, params(req)));
    });
    svr.Get("/api/metrics", [&state, send](const httplib::Request&, httplib::Response& res) { send(res, handle_metrics(state)); });
    svr.Options(R"(/api/.*)", [&state](const httplib::Request&, httplib::Response& res) {
        if (!state.cors_origin.empty()) {
            res.set_header("Access-Control-Allow-Origin", state.cors_origin);
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
        }
        res.status = 204;
    });
    svr.set_error_handler([send](const httplib::Request& req, httplib::Response& res) {
        if (!res.body.empty()) return;
        const int status = res.status;
        send(res, error_response(status, status == 404 ? "not_found" : "http_error",
                                 "no handler for " + req.method + " " + req.path));
    });
}

} // namespace actsel::service
