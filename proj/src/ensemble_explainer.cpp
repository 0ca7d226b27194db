#include "shapshift/ensemble_explainer.hpp"

#include <algorithm>
#include <cmath>

#include "shapshift/errors.hpp"
#include "shapshift/threading.hpp"

namespace shapshift {

namespace {

Explanation explain_one(const TreeEnsemble& ensemble, std::size_t tree_index,
                        const Dataset& data_p, const Dataset& data_q,
                        const std::vector<double>& predict_p, const std::vector<double>& predict_q,
                        const EnsembleExplainConfig& config) {
    const DecisionTree& tree = ensemble.trees.at(tree_index);
    const ConditionalTable table = extract_conditionals(tree, data_p, data_q);
    const LeafStats stats =
        compute_leaf_stats(tree, predict_p, predict_q, data_p, data_q, config.fill_policy);
    ShapleyOptions options;
    options.include_leafmeans = true;
    options.exact_limit = config.exact_limit;
    Explanation expl = exact_shapley(table, stats, options);
    expl.tree_index = tree_index;
    return expl;
}

}  // namespace

Explanation explain_tree_in_ensemble(const TreeEnsemble& ensemble, std::size_t tree_index,
                                     const Dataset& data_p, const Dataset& data_q,
                                     const EnsembleExplainConfig& config) {
    if (tree_index >= ensemble.trees.size()) {
        throw InvalidArgumentError("tree index " + std::to_string(tree_index) +
                                   " out of range for ensemble of " +
                                   std::to_string(ensemble.trees.size()));
    }
    const std::vector<double> predict_p = predict_rows(ensemble, data_p);
    const std::vector<double> predict_q = predict_rows(ensemble, data_q);
    return explain_one(ensemble, tree_index, data_p, data_q, predict_p, predict_q, config);
}

EnsembleExplanation explain_ensemble(const TreeEnsemble& ensemble, const Dataset& data_p,
                                     const Dataset& data_q,
                                     const EnsembleExplainConfig& config) {
    if (ensemble.trees.empty()) throw InvalidArgumentError("ensemble has no trees");

    const std::vector<double> predict_p = predict_rows(ensemble, data_p);
    const std::vector<double> predict_q = predict_rows(ensemble, data_q);

    const std::size_t n_scan =
        config.max_trees ? std::min(*config.max_trees, ensemble.trees.size())
                         : ensemble.trees.size();
    if (n_scan == 0) throw InvalidArgumentError("max_trees must allow at least one tree");

    std::vector<TreeScanEntry> scan(n_scan);
    std::vector<std::optional<Explanation>> explanations(n_scan);

    auto analyze = [&](std::size_t t) {
        TreeScanEntry entry;
        entry.tree_index = t;
        try {
            Explanation expl =
                explain_one(ensemble, t, data_p, data_q, predict_p, predict_q, config);
            entry.percent_unexplained = expl.percent_unexplained;
            entry.leafmeans_sv = expl.leafmeans_sv;
            explanations[t] = std::move(expl);
        } catch (const UndefinedConditionalError& e) {
            entry.failed = true;
            entry.failure_reason = e.what();
        }
        scan[t] = std::move(entry);
    };

    if (config.parallel) {
        parallel_for(n_scan, analyze);
    } else {
        for (std::size_t t = 0; t < n_scan; ++t) analyze(t);
    }

    // Selection: minimum PercentUnexplained among non-failed trees, lowest
    // index on ties. If the shift is too small for the metric, fall back
    // to the smallest |phi_LeafMeans|.
    std::optional<std::size_t> best_by_pu;
    std::optional<std::size_t> best_by_lm;
    for (std::size_t t = 0; t < n_scan; ++t) {
        if (scan[t].failed) continue;
        if (scan[t].percent_unexplained) {
            if (!best_by_pu ||
                *scan[t].percent_unexplained < *scan[*best_by_pu].percent_unexplained) {
                best_by_pu = t;
            }
        }
        if (scan[t].leafmeans_sv) {
            if (!best_by_lm ||
                std::abs(*scan[t].leafmeans_sv) < std::abs(*scan[*best_by_lm].leafmeans_sv)) {
                best_by_lm = t;
            }
        }
    }

    std::optional<std::size_t> chosen = best_by_pu ? best_by_pu : best_by_lm;
    if (!chosen) {
        throw UndefinedConditionalError(
            -1, "no tree in the ensemble admits an explanation: every scanned tree has an "
                "undefined conditional");
    }

    EnsembleExplanation result;
    result.best = std::move(*explanations[*chosen]);
    result.best_tree_index = *chosen;
    result.scan = std::move(scan);
    return result;
}

}  // namespace shapshift
