#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "actsel/dataset.hpp"
#include "actsel/ensemble.hpp"

namespace actsel {

// Prediction payload shared by the CLI's --json output and POST /api/predict.
inline nlohmann::json predictions_to_json(const ClassCatalog& catalog, const std::vector<Prediction>& preds,
                                          DecisionMethod method) {
    using nlohmann::json;
    json arr = json::array();
    for (const auto& p : preds) {
        json eligible = json::array();
        for (auto c : p.eligible) eligible.push_back(c.code);
        json ranking = json::array();
        for (const auto& r : p.ranking) {
            json e{{"class", r.cls.code},
                   {"name", catalog.name(r.cls)},
                   {"votes", r.votes},
                   {"margin", r.margin_sum},
                   {"score", r.score}};
            if (r.probability) e["probability"] = *r.probability;
            ranking.push_back(std::move(e));
        }
        arr.push_back({{"pair", {std::string(info(p.pair.low).token), std::string(info(p.pair.high).token)}},
                       {"features", {code(p.pair.low), code(p.pair.high)}},
                       {"label", pair_label(p.pair)},
                       {"eligible", eligible},
                       {"ranking", ranking}});
    }
    return json{{"method", std::string(method_name(method))}, {"predictions", arr}};
}

// Side-by-side text table, one column per feature pair, cells like "SMA (6.3)".
// Scores print with one decimal; probabilities with two.
inline std::string render_predictions_table(const ClassCatalog& catalog, const std::vector<Prediction>& preds,
                                            DecisionMethod method) {
    std::size_t rows = 0;
    for (const auto& p : preds) rows = std::max(rows, p.ranking.size());
    std::vector<std::vector<std::string>> cols;
    for (const auto& p : preds) {
        std::vector<std::string> col{pair_label(p.pair)};
        for (const auto& r : p.ranking) {
            const std::string v = method == DecisionMethod::Probability
                                      ? detail::printf_double("%.2f", *r.probability)
                                      : detail::printf_double("%.1f", r.score);
            col.push_back(catalog.name(r.cls) + " (" + v + ")");
        }
        col.resize(rows + 1);
        cols.push_back(std::move(col));
    }
    std::string out;
    for (std::size_t r = 0; r <= rows; ++r) {
        std::string line = detail::pad_right(r == 0 ? "Rank" : std::to_string(r), 6);
        for (const auto& col : cols) {
            std::size_t w = 0;
            for (const auto& cell : col) w = std::max(w, cell.size());
            line += "  " + detail::pad_right(col[r], w);
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + "\n";
    }
    return out;
}

inline nlohmann::json grid_to_json(const ClassCatalog& catalog, const DecisionGrid& g, bool transposed = false) {
    using nlohmann::json;
    json classes = json::array();
    for (const auto& [c, name] : catalog.entries()) classes.push_back({{"code", c}, {"name", name}});
    const FeatureId x = transposed ? g.pair.high : g.pair.low;
    const FeatureId y = transposed ? g.pair.low : g.pair.high;
    return json{{"x", std::string(info(x).token)},
                {"y", std::string(info(y).token)},
                {"nx", g.nx},
                {"ny", g.ny},
                {"x_ticks", g.x_ticks},
                {"y_ticks", g.y_ticks},
                {"classes", g.classes},
                {"scores", g.scores},
                {"legend", classes}};
}

// Swaps the axes of a grid so that rows follow the former x axis.
inline DecisionGrid transpose(const DecisionGrid& g) {
    DecisionGrid t;
    t.pair = g.pair;
    t.nx = g.ny;
    t.ny = g.nx;
    t.x_ticks = g.y_ticks;
    t.y_ticks = g.x_ticks;
    t.classes.resize(g.classes.size());
    t.scores.resize(g.scores.size());
    for (std::size_t iy = 0; iy < g.ny; ++iy)
        for (std::size_t ix = 0; ix < g.nx; ++ix) {
            t.classes[ix * t.nx + iy] = g.classes[iy * g.nx + ix];
            t.scores[ix * t.nx + iy] = g.scores[iy * g.nx + ix];
        }
    return t;
}

} // namespace actsel
