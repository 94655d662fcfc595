#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "actsel/dataset.hpp"
#include "actsel/ensemble.hpp"
#include "actsel/evaluation.hpp"
#include "actsel/model_io.hpp"
#include "actsel/render.hpp"
#include "actsel/service.hpp"

namespace actsel::cli {

// Parses "strain=25,stress=1.0" into raw feature values.
inline FeatureValues parse_features(const std::string& spec) {
    FeatureValues q{};
    for (const auto& item : detail::split(spec, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw Error("invalid_argument", "expected name=value, got '" + item + "'");
        const auto name = std::string(detail::trim(std::string_view(item).substr(0, eq)));
        const auto f = feature_from_token(name);
        if (!f) throw Error("unknown_feature", "unknown feature '" + name + "' (expected bandwidth, strain, stress, efficiency, power_density)");
        const auto v = detail::parse_double(std::string_view(item).substr(eq + 1));
        if (!v || !std::isfinite(*v)) throw Error("non_numeric", "feature '" + name + "' needs a numeric value");
        if (q[index(*f)]) throw Error("invalid_argument", "feature '" + name + "' given twice");
        q[index(*f)] = *v;
    }
    return q;
}

inline std::vector<double> parse_number_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& item : detail::split(s, ',')) {
        const auto v = detail::parse_double(item);
        if (!v) throw Error("invalid_argument", "not a number: '" + item + "'");
        out.push_back(*v);
    }
    return out;
}

inline DecisionMethod method_arg(const std::string& s) {
    const auto m = parse_method(s);
    if (!m) throw Error("invalid_method", "method must be score or prob, got '" + s + "'");
    return *m;
}

inline std::string train_summary(const EnsembleModel& m) {
    std::ostringstream os;
    const auto n = m.sub_svm_count();
    const auto trained = m.trained_pair_count();
    os << "trained " << n << (n == 1 ? " sub-SVM" : " sub-SVMs") << " across " << trained
       << (trained == 1 ? " feature pair" : " feature pairs") << " (" << (kNumPairs - trained)
       << (kNumPairs - trained == 1 ? " pair" : " pairs") << " untrained)\n";
    for (const auto& pm : m.pairs) {
        os << "  " << detail::pad_right(pair_label(pm.pair), 14);
        if (!pm.trained) {
            os << "untrained\n";
            continue;
        }
        os << "n=" << detail::pad_right(std::to_string(pm.n_samples), 6) << "classes=" << pm.classes.size()
           << "  sub-SVMs=" << detail::pad_right(std::to_string(pm.svms.size()), 4)
           << "gamma=" << detail::printf_double("%.6g", pm.gamma) << '\n';
    }
    return os.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("io_error", "cannot open '" + path + "' for writing");
    out << text;
    if (!out.flush()) throw Error("io_error", "write to '" + path + "' failed");
}

// Runs the command line; returns the process exit code. All normal output
// goes to `out`, diagnostics to `err` as "error[<code>]: <message>".
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Artificial-muscle actuator selection: train, evaluate and query pairwise-feature SVM ensembles"};
    app.set_config("--config", "", "key = value config file mirroring the command-line flags");
    app.require_subcommand(1);
    int verbosity = 0;
    app.add_flag("-v,--verbose", verbosity, "Log progress to stderr");

    // stats
    std::string stats_csv;
    auto* stats = app.add_subcommand("stats", "Summary statistics table of a dataset CSV");
    stats->add_option("dataset", stats_csv, "Dataset CSV")->required();

    // train
    std::string train_csv;
    std::string train_out;
    TrainConfig train_cfg;
    std::optional<double> train_gamma;
    bool no_calibrate = false;
    auto* train = app.add_subcommand("train", "Train all feature-pair ensembles and write a model file");
    train->add_option("dataset", train_csv, "Dataset CSV")->required();
    train->add_option("--lambda", train_cfg.lambda, "Soft-margin penalty")->capture_default_str();
    train->add_option("--gamma", train_gamma, "RBF width (default: derived per pair from the data)");
    train->add_option("--seed", train_cfg.seed, "Solver seed")->capture_default_str();
    train->add_option("--tolerance", train_cfg.tolerance, "KKT tolerance")->capture_default_str();
    train->add_flag("--no-calibrate", no_calibrate, "Skip Platt calibration (disables --method prob)");
    train->add_option("-o,--out", train_out, "Output model JSON")->required();

    // predict
    std::string predict_model;
    std::string predict_features;
    std::size_t predict_top = 4;
    std::string predict_method = "score";
    bool predict_json = false;
    auto* pred = app.add_subcommand("predict", "Rank actuator classes for a partial feature query");
    pred->add_option("model", predict_model, "Model JSON")->envname("ACTSEL_MODEL")->required();
    pred->add_option("-f,--features", predict_features, "Raw values, e.g. strain=25,stress=1.0")->required();
    pred->add_option("-n,--top", predict_top, "Classes listed per pair")->capture_default_str();
    pred->add_option("-m,--method", predict_method, "score | prob")->capture_default_str();
    pred->add_flag("--json", predict_json, "Emit the same JSON document as POST /api/predict");

    // cv
    std::string cv_csv;
    CvConfig cv_cfg;
    std::string cv_lambdas = "1,0.1,0.01,0.001";
    std::string cv_methods = "score,prob";
    std::optional<double> cv_gamma;
    std::string cv_format = "table";
    std::string cv_out;
    bool cv_no_stratify = false;
    auto* cv = app.add_subcommand("cv", "k-fold cross-validation over lambdas and decision methods");
    cv->add_option("dataset", cv_csv, "Dataset CSV")->required();
    cv->add_option("-k,--folds", cv_cfg.folds, "Number of folds")->capture_default_str();
    cv->add_option("--lambdas", cv_lambdas, "Comma-separated lambda grid")->capture_default_str();
    cv->add_option("--methods", cv_methods, "Comma-separated decision methods")->capture_default_str();
    cv->add_option("--seed", cv_cfg.seed, "Fold seed")->capture_default_str();
    cv->add_option("--gamma", cv_gamma, "RBF width (default: derived per pair from the data)");
    cv->add_flag("--no-stratify", cv_no_stratify, "Draw folds without class stratification");
    cv->add_option("--format", cv_format, "table | json")->capture_default_str();
    cv->add_option("-o,--out", cv_out, "Write the report here instead of stdout");

    // grid
    std::string grid_model;
    std::string grid_pair;
    std::string grid_bounds;
    std::size_t grid_nx = 100;
    std::size_t grid_ny = 100;
    std::string grid_method = "score";
    std::string grid_out;
    auto* grid = app.add_subcommand("grid", "Rasterize the top-1 class of one feature pair");
    grid->add_option("model", grid_model, "Model JSON")->envname("ACTSEL_MODEL")->required();
    grid->add_option("--pair", grid_pair, "x,y features, e.g. strain,stress")->required();
    grid->add_option("--bounds", grid_bounds, "xmin,xmax,ymin,ymax in raw units")->required();
    grid->add_option("--nx", grid_nx, "Ticks along x")->capture_default_str();
    grid->add_option("--ny", grid_ny, "Ticks along y")->capture_default_str();
    grid->add_option("-m,--method", grid_method, "score | prob")->capture_default_str();
    grid->add_option("-o,--out", grid_out, "Output grid JSON")->required();

    // serve
    std::string serve_model;
    std::string serve_csv;
    std::string serve_host = "127.0.0.1";
    int serve_port = 8080;
    std::string serve_metrics;
    std::string serve_cors;
    auto* serve = app.add_subcommand("serve", "Run the HTTP JSON API");
    serve->add_option("model", serve_model, "Model JSON")->envname("ACTSEL_MODEL")->required();
    serve->add_option("dataset", serve_csv, "Dataset CSV used for scatter data")->required();
    serve->add_option("--host", serve_host, "Bind address")->capture_default_str();
    serve->add_option("-p,--port", serve_port, "Port")->capture_default_str();
    serve->add_option("--metrics", serve_metrics, "Cross-validation report JSON served at /api/metrics");
    serve->add_option("--cors-origin", serve_cors, "Value for Access-Control-Allow-Origin");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return 0;
        }
        err << "error[usage]: " << e.what() << '\n';
        return 2;
    }

    auto log = [&](const std::string& msg) {
        if (verbosity > 0) err << "[info] " << msg << '\n';
    };

    try {
        if (*stats) {
            const auto ds = load_csv(stats_csv);
            if (ds.empty()) throw Error("empty_dataset", "dataset '" + stats_csv + "' has no rows");
            out << render_stats_table(compute_stats(ds));
        } else if (*train) {
            const auto ds = load_csv(train_csv);
            log("loaded " + std::to_string(ds.size()) + " samples");
            train_cfg.gamma = train_gamma;
            const auto model = train_ensemble(ds, train_cfg, std::nullopt, !no_calibrate);
            save_model(model, train_out);
            out << train_summary(model);
            log("wrote " + train_out);
        } else if (*pred) {
            const auto method = method_arg(predict_method);
            if (predict_top == 0) throw Error("invalid_top_n", "--top must be positive");
            const auto q = parse_features(predict_features);
            if (present_count(q) < 2)
                throw Error("too_few_features", "need at least 2 features (usage: --features strain=25,stress=1.0)");
            const auto model = load_model(predict_model);
            const auto preds = predict(model, q, predict_top, method);
            if (predict_json) out << predictions_to_json(model.catalog, preds, method).dump() << '\n';
            else out << render_predictions_table(model.catalog, preds, method);
        } else if (*cv) {
            if (cv_cfg.folds < 2) throw Error("invalid_folds", "--folds must be at least 2");
            ReportFormat fmt;
            if (cv_format == "table") fmt = ReportFormat::Table;
            else if (cv_format == "json") fmt = ReportFormat::Json;
            else throw Error("invalid_argument", "--format must be table or json");
            std::vector<DecisionMethod> methods;
            for (const auto& m : detail::split(cv_methods, ',')) methods.push_back(method_arg(m));
            cv_cfg.stratified = !cv_no_stratify;
            const auto ds = load_csv(cv_csv);
            std::optional<KernelParams> kernel;
            if (cv_gamma) kernel = KernelParams{*cv_gamma};
            const auto rep = cross_validate(ds, cv_cfg, parse_number_list(cv_lambdas), kernel, methods);
            const auto text = render_report(rep, fmt);
            if (cv_out.empty()) out << text;
            else write_text(cv_out, text);
        } else if (*grid) {
            const auto method = method_arg(grid_method);
            const auto feats = detail::split(grid_pair, ',');
            if (feats.size() != 2) throw Error("invalid_pair", "--pair needs two features, e.g. strain,stress");
            const auto x = feature_from_token(feats[0]);
            const auto y = feature_from_token(feats[1]);
            if (!x || !y) throw Error("unknown_feature", "unknown feature in --pair '" + grid_pair + "'");
            const auto b = parse_number_list(grid_bounds);
            if (b.size() != 4) throw Error("invalid_range", "--bounds needs xmin,xmax,ymin,ymax");
            const auto model = load_model(grid_model);
            const auto pair = make_pair(*x, *y);
            const bool swapped = *x != pair.low;
            auto g = swapped ? decision_grid(model, pair, {b[2], b[3]}, {b[0], b[1]}, grid_ny, grid_nx, method)
                             : decision_grid(model, pair, {b[0], b[1]}, {b[2], b[3]}, grid_nx, grid_ny, method);
            if (swapped) g = transpose(g);
            write_text(grid_out, grid_to_json(model.catalog, g, swapped).dump() + "\n");
            out << "wrote " << g.nx << "x" << g.ny << " grid to " << grid_out << '\n';
        } else if (*serve) {
            service::State state{load_model(serve_model), load_csv(serve_csv), std::nullopt, serve_cors};
            if (!serve_metrics.empty()) {
                std::ifstream in(serve_metrics);
                if (!in) throw Error("io_error", "cannot open '" + serve_metrics + "'");
                try {
                    state.metrics = nlohmann::json::parse(in);
                } catch (const nlohmann::json::exception& e) {
                    throw Error("schema_violation", std::string("metrics file is not valid JSON: ") + e.what());
                }
            }
            httplib::Server svr;
            service::mount(svr, state);
            out << "serving on http://" << serve_host << ':' << serve_port << '\n' << std::flush;
            if (!svr.listen(serve_host, serve_port))
                throw Error("io_error", "cannot listen on " + serve_host + ":" + std::to_string(serve_port));
        }
    } catch (const Error& e) {
        err << "error[" << e.code() << "]: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error[internal]: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace actsel::cli
