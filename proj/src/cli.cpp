#include "shapshift/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "shapshift/benchmark.hpp"
#include "shapshift/dataset.hpp"
#include "shapshift/ensemble_explainer.hpp"
#include "shapshift/errors.hpp"
#include "shapshift/learner.hpp"
#include "shapshift/metrics.hpp"
#include "shapshift/model_io.hpp"
#include "shapshift/report.hpp"
#include "shapshift/surrogate.hpp"
#include "shapshift/threading.hpp"

namespace shapshift {

namespace {

using nlohmann::json;

struct DataArgs {
    std::string data_p;
    std::string data_q;
    std::string schema;
    std::string pred_col;
    std::string label_col;
};

struct FitArgs {
    std::string fit;  // "", "tree", "forest", "boosted"
    int max_leaves = 8;
    int n_estimators = 100;
    double learning_rate = 0.1;
    int min_samples_side = 5;
    double feature_subsample = 1.0;
};

struct OutputArgs {
    std::string out;  // empty = stdout
    std::string svg;
};

struct MethodArgs {
    std::string method = "exact";
    std::size_t budget = 0;
    std::uint64_t seed = 0;
    std::size_t exact_limit = 20;
};

void write_output(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text << "\n";
        return;
    }
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    out << text << "\n";
}

struct LoadedPair {
    Dataset data_p;
    Dataset data_q;
};

LoadedPair load_pair(const DataArgs& args) {
    FeatureSchema schema = FeatureSchema::from_json_file(args.schema);
    std::optional<std::string> pred =
        args.pred_col.empty() ? std::nullopt : std::optional<std::string>(args.pred_col);
    std::optional<std::string> label =
        args.label_col.empty() ? std::nullopt : std::optional<std::string>(args.label_col);
    return {load_csv(args.data_p, schema, pred, label),
            load_csv(args.data_q, schema, pred, label)};
}

// Pools P and Q rows into one dataset for in-process model fitting.
Dataset pool_rows(const Dataset& a, const Dataset& b) {
    std::vector<double> values;
    values.reserve((a.n_rows() + b.n_rows()) * a.n_cols());
    for (std::size_t i = 0; i < a.n_rows(); ++i) {
        auto r = a.row(i);
        values.insert(values.end(), r.begin(), r.end());
    }
    for (std::size_t i = 0; i < b.n_rows(); ++i) {
        auto r = b.row(i);
        values.insert(values.end(), r.begin(), r.end());
    }
    std::optional<std::vector<double>> labels;
    if (a.has_labels() && b.has_labels()) {
        labels.emplace(a.labels());
        labels->insert(labels->end(), b.labels().begin(), b.labels().end());
    }
    return Dataset(a.schema(), std::move(values), a.n_rows() + b.n_rows(), std::nullopt,
                   std::move(labels));
}

Model fit_model(const std::string& kind, const Dataset& pooled, const FitArgs& fit,
                std::uint64_t seed) {
    if (!pooled.has_labels()) {
        throw InvalidArgumentError("fitting a model requires --label-col");
    }
    LearnerConfig config;
    config.max_leaf_nodes = fit.max_leaves;
    config.n_estimators = fit.n_estimators;
    config.learning_rate = fit.learning_rate;
    config.min_samples_per_side = fit.min_samples_side;
    config.feature_subsample = fit.feature_subsample;
    config.seed = seed;
    if (kind == "tree") return fit_tree(pooled, pooled.labels(), config);
    if (kind == "forest") return fit_random_forest(pooled, pooled.labels(), config);
    if (kind == "boosted") return fit_gradient_boosted(pooled, pooled.labels(), config);
    throw InvalidArgumentError("unknown fit kind '" + kind + "' (tree|forest|boosted)");
}

Model obtain_model(const std::string& model_path, const FitArgs& fit, const LoadedPair& pair,
                   std::uint64_t seed) {
    if (!model_path.empty() && !fit.fit.empty()) {
        throw InvalidArgumentError("--model and --fit are mutually exclusive");
    }
    if (!model_path.empty()) return import_model_json(model_path);
    if (!fit.fit.empty()) return fit_model(fit.fit, pool_rows(pair.data_p, pair.data_q), fit, seed);
    throw InvalidArgumentError("either --model or --fit is required");
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

void emit_explanation(const Explanation& expl, const OutputArgs& out, double timing_ms,
                      const std::vector<TreeScanEntry>* scan = nullptr) {
    write_output(explanation_to_json_text(expl, timing_ms, scan), out.out);
    if (!out.svg.empty()) {
        std::ofstream svg(out.svg);
        if (!svg) throw ParseError("cannot open '" + out.svg + "' for writing");
        svg << explanation_to_svg(expl);
    }
}

int cmd_explain_tree(const DataArgs& data_args, const std::string& model_path,
                     const FitArgs& fit, const MethodArgs& method, const OutputArgs& out) {
    const auto start = std::chrono::steady_clock::now();
    LoadedPair pair = load_pair(data_args);
    Model model = obtain_model(model_path, fit, pair, method.seed);
    const auto* tree = std::get_if<DecisionTree>(&model);
    if (tree == nullptr) {
        throw InvalidArgumentError("explain tree requires a single-tree model");
    }

    const ConditionalTable table = extract_conditionals(*tree, pair.data_p, pair.data_q);
    Explanation expl;
    if (method.method == "kernel") {
        KernelShapOptions options;
        options.budget = method.budget;
        options.seed = method.seed;
        expl = kernel_shap_self(table, options);
    } else {
        ShapleyOptions options;
        options.exact_limit = method.exact_limit;
        expl = exact_shapley(table, options);
    }
    emit_explanation(expl, out, elapsed_ms(start));
    return 0;
}

int cmd_explain_ensemble(const DataArgs& data_args, const std::string& model_path,
                         const FitArgs& fit, const MethodArgs& method, const OutputArgs& out,
                         std::optional<std::size_t> max_trees, bool serial) {
    const auto start = std::chrono::steady_clock::now();
    LoadedPair pair = load_pair(data_args);
    FitArgs fit_args = fit;
    if (fit_args.fit == "tree") {
        throw InvalidArgumentError("explain ensemble requires --fit forest or --fit boosted");
    }
    Model model = obtain_model(model_path, fit_args, pair, method.seed);

    TreeEnsemble ensemble;
    if (auto* ens = std::get_if<TreeEnsemble>(&model)) {
        ensemble = std::move(*ens);
    } else {
        // A single tree is the 1-member mean ensemble.
        ensemble.trees.push_back(std::get<DecisionTree>(std::move(model)));
        ensemble.tree_weights = {1.0};
        ensemble.feature_names = ensemble.trees.front().feature_names();
    }

    EnsembleExplainConfig config;
    config.max_trees = max_trees;
    config.parallel = !serial;
    config.exact_limit = method.exact_limit;
    EnsembleExplanation result = explain_ensemble(ensemble, pair.data_p, pair.data_q, config);
    emit_explanation(result.best, out, elapsed_ms(start), &result.scan);
    return 0;
}

struct BlackboxPredictions {
    std::vector<double> predict_p;
    std::vector<double> predict_q;
};

BlackboxPredictions blackbox_predictions(const LoadedPair& pair, const std::string& preds_p_path,
                                         const std::string& preds_q_path) {
    if (!preds_p_path.empty() || !preds_q_path.empty()) {
        if (preds_p_path.empty() || preds_q_path.empty()) {
            throw InvalidArgumentError("--preds-p and --preds-q must be given together");
        }
        FeatureSchema empty_schema{std::vector<Feature>{}};
        auto read_column = [&](const std::string& path, std::size_t expected) {
            std::ifstream in(path);
            if (!in) throw ParseError("cannot open prediction CSV '" + path + "'");
            std::string line;
            if (!std::getline(in, line)) throw ParseError("empty prediction CSV '" + path + "'");
            std::vector<double> values;
            std::size_t row = 0;
            while (std::getline(in, line)) {
                if (line.empty() || line == "\r") continue;
                try {
                    values.push_back(std::stod(line));
                } catch (const std::exception&) {
                    throw ParseError("non-numeric prediction '" + line + "' at row " +
                                     std::to_string(row) + " in '" + path + "'");
                }
                ++row;
            }
            if (values.size() != expected) {
                throw SchemaError("prediction CSV '" + path + "' has " +
                                  std::to_string(values.size()) + " rows, expected " +
                                  std::to_string(expected));
            }
            return values;
        };
        return {read_column(preds_p_path, pair.data_p.n_rows()),
                read_column(preds_q_path, pair.data_q.n_rows())};
    }
    if (!pair.data_p.has_predictions() || !pair.data_q.has_predictions()) {
        throw InvalidArgumentError(
            "explain blackbox requires --pred-col or --preds-p/--preds-q");
    }
    return {pair.data_p.predictions(), pair.data_q.predictions()};
}

ImpurityKind impurity_from_name(const std::string& name) {
    if (name == "shift") return ImpurityKind::Shift;
    if (name == "gini") return ImpurityKind::Gini;
    if (name == "variance") return ImpurityKind::Variance;
    throw InvalidArgumentError("unknown impurity '" + name + "' (shift|gini|variance)");
}

int cmd_explain_blackbox(const DataArgs& data_args, const MethodArgs& method,
                         const OutputArgs& out, int max_leaves, const std::string& impurity,
                         int min_per_distribution, const std::string& preds_p,
                         const std::string& preds_q) {
    const auto start = std::chrono::steady_clock::now();
    LoadedPair pair = load_pair(data_args);
    BlackboxPredictions preds = blackbox_predictions(pair, preds_p, preds_q);

    SurrogateConfig config;
    config.max_leaves = max_leaves;
    config.impurity = impurity_from_name(impurity);
    config.min_samples_per_side_per_distribution = min_per_distribution;
    const DecisionTree surrogate =
        grow_surrogate(pair.data_p, pair.data_q, preds.predict_p, preds.predict_q, config);

    const ConditionalTable table = extract_conditionals(surrogate, pair.data_p, pair.data_q);
    const LeafStats stats = compute_leaf_stats(surrogate, preds.predict_p, preds.predict_q,
                                               pair.data_p, pair.data_q);
    Explanation expl;
    if (method.method == "kernel") {
        KernelShapOptions options;
        options.include_leafmeans = true;
        options.budget = method.budget;
        options.seed = method.seed;
        expl = kernel_shap(table, stats, options);
    } else {
        ShapleyOptions options;
        options.include_leafmeans = true;
        options.exact_limit = method.exact_limit;
        expl = exact_shapley(table, stats, options);
    }
    emit_explanation(expl, out, elapsed_ms(start));
    return 0;
}

// ---- evaluate ---------------------------------------------------------

struct EvaluateRowResult {
    bool ok = false;
    std::string error;
    json metrics;
    std::optional<double> auac_f, auiac_f, auac_b, auiac_b;
};

EvaluateRowResult evaluate_row(const json& row, const std::vector<std::string>& metrics) {
    EvaluateRowResult result;
    auto want = [&](const char* name) {
        return std::find(metrics.begin(), metrics.end(), name) != metrics.end();
    };

    DataArgs data_args;
    data_args.data_p = row.at("data_p").get<std::string>();
    data_args.data_q = row.at("data_q").get<std::string>();
    data_args.schema = row.at("schema").get<std::string>();
    data_args.pred_col = row.value("pred_col", std::string());
    if (row.contains("fit")) data_args.label_col = row["fit"].value("label_col", std::string());
    LoadedPair pair = load_pair(data_args);

    // Resolve the explanation pipeline for this row.
    Explanation expl;
    DecisionTree explained_tree;  // the tree whose conditionals are explained
    std::vector<double> predict_p, predict_q;

    if (row.contains("model") || row.contains("fit")) {
        Model model;
        if (row.contains("model")) {
            model = import_model_json(row["model"].get<std::string>());
        } else {
            const json& f = row["fit"];
            FitArgs fit;
            fit.max_leaves = f.value("max_leaves", 8);
            fit.n_estimators = f.value("n_estimators", 100);
            fit.learning_rate = f.value("learning_rate", 0.1);
            fit.min_samples_side = f.value("min_samples_side", 5);
            model = fit_model(f.value("type", std::string("tree")),
                              pool_rows(pair.data_p, pair.data_q), fit, f.value("seed", 0));
        }
        if (auto* tree = std::get_if<DecisionTree>(&model)) {
            explained_tree = *tree;
            predict_p = predict_rows(*tree, pair.data_p);
            predict_q = predict_rows(*tree, pair.data_q);
            const ConditionalTable table =
                extract_conditionals(explained_tree, pair.data_p, pair.data_q);
            ShapleyOptions options;
            options.include_leafmeans = true;  // phi_LeafMeans is exactly 0 for self-trees
            expl = exact_shapley(table, compute_leaf_stats(explained_tree, predict_p, predict_q,
                                                           pair.data_p, pair.data_q),
                                 options);
        } else {
            TreeEnsemble ensemble = std::get<TreeEnsemble>(std::move(model));
            predict_p = predict_rows(ensemble, pair.data_p);
            predict_q = predict_rows(ensemble, pair.data_q);
            EnsembleExplainConfig config;
            if (row.contains("max_trees")) config.max_trees = row["max_trees"].get<std::size_t>();
            EnsembleExplanation ens_result =
                explain_ensemble(ensemble, pair.data_p, pair.data_q, config);
            expl = std::move(ens_result.best);
            explained_tree = ensemble.trees[ens_result.best_tree_index];
        }
    } else if (!data_args.pred_col.empty()) {
        predict_p = pair.data_p.predictions();
        predict_q = pair.data_q.predictions();
        SurrogateConfig config;
        if (row.contains("surrogate")) {
            const json& s = row["surrogate"];
            config.max_leaves = s.value("max_leaves", 8);
            config.impurity = impurity_from_name(s.value("impurity", std::string("shift")));
            config.min_samples_per_side_per_distribution = s.value("min_per_distribution", 5);
        }
        explained_tree = grow_surrogate(pair.data_p, pair.data_q, predict_p, predict_q, config);
        const ConditionalTable table =
            extract_conditionals(explained_tree, pair.data_p, pair.data_q);
        ShapleyOptions options;
        options.include_leafmeans = true;
        expl = exact_shapley(
            table,
            compute_leaf_stats(explained_tree, predict_p, predict_q, pair.data_p, pair.data_q),
            options);
    } else {
        throw InvalidArgumentError("manifest row needs 'model', 'fit' or 'pred_col'");
    }

    result.metrics["mu_p"] = expl.mu_p;
    result.metrics["mu_q"] = expl.mu_q;
    result.metrics["shift"] = expl.shift();
    if (want("percent-unexplained")) {
        if (expl.percent_unexplained) {
            result.metrics["percent_unexplained"] = *expl.percent_unexplained;
        } else {
            result.metrics["percent_unexplained"] = nullptr;
        }
    }
    if (want("entropy")) {
        bool all_zero = false;
        result.metrics["entropy"] = sv_entropy(expl, &all_zero);
        result.metrics["entropy_all_zero"] = all_zero;
    }
    if (want("r-faith")) {
        const FaithfulnessResult fwd = r_faithfulness(expl, pair.data_p, pair.data_q, predict_p,
                                                      predict_q, ReweightDirection::Forward);
        const FaithfulnessResult bwd = r_faithfulness(expl, pair.data_p, pair.data_q, predict_p,
                                                      predict_q, ReweightDirection::Backward);
        result.metrics["r_faithfulness_forward"] = fwd.value ? json(*fwd.value) : json(nullptr);
        result.metrics["r_faithfulness_backward"] = bwd.value ? json(*bwd.value) : json(nullptr);
    }
    if (want("auc-faith")) {
        const AucFaithfulnessResult fwd = auc_faithfulness(
            expl, pair.data_p, pair.data_q, predict_p, predict_q, ReweightDirection::Forward);
        const AucFaithfulnessResult bwd = auc_faithfulness(
            expl, pair.data_p, pair.data_q, predict_p, predict_q, ReweightDirection::Backward);
        result.metrics["auac_forward"] = fwd.auac ? json(*fwd.auac) : json(nullptr);
        result.metrics["auiac_forward"] = fwd.auiac ? json(*fwd.auiac) : json(nullptr);
        result.metrics["auac_backward"] = bwd.auac ? json(*bwd.auac) : json(nullptr);
        result.metrics["auiac_backward"] = bwd.auiac ? json(*bwd.auiac) : json(nullptr);
        result.auac_f = fwd.auac;
        result.auiac_f = fwd.auiac;
        result.auac_b = bwd.auac;
        result.auiac_b = bwd.auiac;
    }
    result.ok = true;
    return result;
}

std::optional<double> median_of(std::vector<double> values) {
    if (values.empty()) return std::nullopt;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

int cmd_evaluate(const std::string& manifest_path, const std::vector<std::string>& metrics,
                 const std::string& out_path) {
    std::ifstream in(manifest_path);
    if (!in) throw ParseError("cannot open manifest '" + manifest_path + "'");
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid manifest JSON: ") + e.what());
    }
    if (!manifest.contains("rows") || !manifest["rows"].is_array() || manifest["rows"].empty()) {
        throw InvalidArgumentError("manifest contains no rows");
    }

    const auto& rows = manifest["rows"];
    std::vector<EvaluateRowResult> results(rows.size());
    parallel_for(rows.size(), [&](std::size_t i) {
        try {
            results[i] = evaluate_row(rows[static_cast<json::size_type>(i)], metrics);
        } catch (const std::exception& e) {
            results[i].ok = false;
            results[i].error = e.what();
        }
    });

    json report;
    report["version"] = 1;
    json row_reports = json::array();
    std::size_t n_ok = 0;
    std::vector<double> pooled_auac, pooled_auiac;
    std::vector<double> pu_values, entropy_values, r_values;
    for (std::size_t i = 0; i < results.size(); ++i) {
        json row;
        row["index"] = i;
        if (results[i].ok) {
            ++n_ok;
            row["status"] = "ok";
            row["metrics"] = results[i].metrics;
            const json& m = results[i].metrics;
            if (m.contains("percent_unexplained") && m["percent_unexplained"].is_number()) {
                pu_values.push_back(m["percent_unexplained"].get<double>());
            }
            if (m.contains("entropy")) entropy_values.push_back(m["entropy"].get<double>());
            for (const char* key : {"r_faithfulness_forward", "r_faithfulness_backward"}) {
                if (m.contains(key) && m[key].is_number()) {
                    r_values.push_back(m[key].get<double>());
                }
            }
            for (const auto& v : {results[i].auac_f, results[i].auac_b}) {
                if (v) pooled_auac.push_back(*v);
            }
            for (const auto& v : {results[i].auiac_f, results[i].auiac_b}) {
                if (v) pooled_auiac.push_back(*v);
            }
        } else {
            row["status"] = "failed";
            row["error"] = results[i].error;
        }
        row_reports.push_back(std::move(row));
    }
    report["rows"] = std::move(row_reports);

    json aggregates;
    auto put_median = [&](const char* key, const std::vector<double>& values) {
        const std::optional<double> m = median_of(values);
        aggregates[key] = m ? json(*m) : json(nullptr);
    };
    put_median("median_percent_unexplained", pu_values);
    put_median("median_entropy", entropy_values);
    put_median("median_r_faithfulness", r_values);
    put_median("median_auac", pooled_auac);
    put_median("median_auiac", pooled_auiac);
    if (!pooled_auac.empty() && !pooled_auiac.empty()) {
        aggregates["mwu_p_auac_greater"] = mann_whitney_u(pooled_auac, pooled_auiac);
    }
    aggregates["rows_succeeded"] = n_ok;
    aggregates["rows_failed"] = results.size() - n_ok;
    report["aggregates"] = std::move(aggregates);

    write_output(report.dump(2), out_path);
    return n_ok > 0 ? 0 : 2;
}

int cmd_simulate_proxy(int depth, int repeats, std::uint64_t seed, double correlation,
                       const std::string& out_path) {
    ProxySimulationConfig config;
    config.depth = depth;
    config.n_repeats = repeats;
    config.seed = seed;
    config.correlation = correlation;
    const ProxySimulationSummary summary = proxy_simulation(config);

    json j;
    j["depth"] = depth;
    j["repeats"] = repeats;
    j["seed"] = seed;
    j["correlation"] = correlation;
    j["n_samples"] = summary.n_samples;
    j["mean_diff"] = summary.mean_diff;
    j["std_diff"] = summary.std_diff;
    j["frac_within_0.05"] = summary.frac_within_005;
    j["frac_within_0.1"] = summary.frac_within_01;
    write_output(j.dump(2), out_path);
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Shapley-value attribution of prediction shifts to subgroup conditionals"};
    app.require_subcommand(1);

    DataArgs data_args;
    FitArgs fit_args;
    MethodArgs method_args;
    OutputArgs out_args;

    auto add_common = [&](CLI::App* cmd, bool need_method = true) {
        cmd->add_option("--data-p", data_args.data_p, "CSV of samples from P")->required();
        cmd->add_option("--data-q", data_args.data_q, "CSV of samples from Q")->required();
        cmd->add_option("--schema", data_args.schema, "feature schema JSON")->required();
        cmd->add_option("--out", out_args.out, "output path for the explanation JSON");
        cmd->add_option("--svg", out_args.svg, "also write an SVG bar chart");
        if (need_method) {
            cmd->add_option("--method", method_args.method, "exact|kernel")
                ->check(CLI::IsMember({"exact", "kernel"}));
            cmd->add_option("--budget", method_args.budget,
                            "kernel coalition budget (0 = 2n+2048)");
            cmd->add_option("--seed", method_args.seed, "random seed");
            cmd->add_option("--exact-limit", method_args.exact_limit,
                            "max factor count for the exact method");
        }
    };
    auto add_model_source = [&](CLI::App* cmd, std::string& model_path) {
        cmd->add_option("--model", model_path, "model JSON path");
        cmd->add_option("--fit", fit_args.fit, "fit in-process: tree|forest|boosted");
        cmd->add_option("--label-col", data_args.label_col, "target column for --fit");
        cmd->add_option("--max-leaves", fit_args.max_leaves, "leaves per fitted tree");
        cmd->add_option("--n-estimators", fit_args.n_estimators, "trees per fitted ensemble");
        cmd->add_option("--learning-rate", fit_args.learning_rate, "boosting learning rate");
        cmd->add_option("--min-samples-side", fit_args.min_samples_side,
                        "min rows per split side when fitting");
        cmd->add_option("--feature-subsample", fit_args.feature_subsample,
                        "fraction of features per split when fitting");
    };

    // explain
    CLI::App* explain = app.add_subcommand("explain", "explain a prediction shift");
    explain->require_subcommand(1);

    std::string tree_model_path;
    CLI::App* explain_tree_cmd =
        explain->add_subcommand("tree", "single decision tree, explained by its own splits");
    add_common(explain_tree_cmd);
    add_model_source(explain_tree_cmd, tree_model_path);

    std::string ens_model_path;
    std::size_t max_trees = 0;
    bool serial = false;
    CLI::App* explain_ens_cmd =
        explain->add_subcommand("ensemble", "tree ensemble via best-member selection");
    add_common(explain_ens_cmd);
    add_model_source(explain_ens_cmd, ens_model_path);
    explain_ens_cmd->add_option("--max-trees", max_trees, "scan only the first k trees");
    explain_ens_cmd->add_flag("--serial", serial, "disable the parallel tree scan");

    int bb_max_leaves = 8;
    std::string bb_impurity = "shift";
    int bb_min_dist = 5;
    std::string preds_p, preds_q;
    CLI::App* explain_bb_cmd =
        explain->add_subcommand("blackbox", "arbitrary model via a surrogate tree");
    add_common(explain_bb_cmd);
    explain_bb_cmd->add_option("--pred-col", data_args.pred_col,
                               "prediction column inside the data CSVs");
    explain_bb_cmd->add_option("--preds-p", preds_p, "single-column CSV of predictions on P");
    explain_bb_cmd->add_option("--preds-q", preds_q, "single-column CSV of predictions on Q");
    explain_bb_cmd->add_option("--max-leaves", bb_max_leaves, "surrogate leaf budget");
    explain_bb_cmd->add_option("--impurity", bb_impurity, "surrogate impurity")
        ->check(CLI::IsMember({"shift", "gini", "variance"}));
    explain_bb_cmd->add_option("--min-per-distribution", bb_min_dist,
                               "min rows from each distribution per split side");

    // evaluate
    std::string manifest_path, eval_out;
    std::vector<std::string> metrics{"percent-unexplained", "entropy", "r-faith", "auc-faith"};
    CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "metric suite over a shift manifest");
    evaluate_cmd->add_option("--manifest", manifest_path, "manifest JSON path")->required();
    evaluate_cmd->add_option("--metrics", metrics, "metrics to compute")
        ->delimiter(',')
        ->check(CLI::IsMember({"percent-unexplained", "entropy", "r-faith", "auc-faith"}));
    evaluate_cmd->add_option("--out", eval_out, "output path for the report JSON");

    // simulate-proxy
    int sim_depth = 3, sim_repeats = 5000;
    std::uint64_t sim_seed = 0;
    double sim_correlation = 0.0;
    std::string sim_out;
    CLI::App* sim_cmd = app.add_subcommand(
        "simulate-proxy", "Monte-Carlo check of the impurity proxy for the unexplained term");
    sim_cmd->add_option("--depth", sim_depth, "complete tree depth");
    sim_cmd->add_option("--repeats", sim_repeats, "number of sampled (P, Q) pairs");
    sim_cmd->add_option("--seed", sim_seed, "random seed");
    sim_cmd->add_option("--correlation", sim_correlation, "P/Q sampling correlation in [0,1]");
    sim_cmd->add_option("--out", sim_out, "output path for the summary JSON");

    try {
        app.parse(argc, argv);

        if (explain_tree_cmd->parsed()) {
            return cmd_explain_tree(data_args, tree_model_path, fit_args, method_args, out_args);
        }
        if (explain_ens_cmd->parsed()) {
            return cmd_explain_ensemble(data_args, ens_model_path, fit_args, method_args,
                                        out_args,
                                        max_trees > 0 ? std::optional<std::size_t>(max_trees)
                                                      : std::nullopt,
                                        serial);
        }
        if (explain_bb_cmd->parsed()) {
            return cmd_explain_blackbox(data_args, method_args, out_args, bb_max_leaves,
                                        bb_impurity, bb_min_dist, preds_p, preds_q);
        }
        if (evaluate_cmd->parsed()) return cmd_evaluate(manifest_path, metrics, eval_out);
        if (sim_cmd->parsed()) {
            return cmd_simulate_proxy(sim_depth, sim_repeats, sim_seed, sim_correlation, sim_out);
        }
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        if (code == 0) return 0;  // --help and friends
        std::cerr << "error: usage: " << e.what() << "\n";
        return 2;
    } catch (const UndefinedConditionalError& e) {
        std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace shapshift
