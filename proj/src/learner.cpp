#include "shapshift/learner.hpp"

#include <cmath>
#include <memory>
#include <numeric>

#include "growth.hpp"
#include "shapshift/errors.hpp"
#include "shapshift/threading.hpp"

namespace shapshift {

void LearnerConfig::validate() const {
    if (max_leaf_nodes < 2) throw InvalidArgumentError("max_leaf_nodes must be >= 2");
    if (min_samples_per_side < 1) throw InvalidArgumentError("min_samples_per_side must be >= 1");
    if (n_estimators < 1) throw InvalidArgumentError("n_estimators must be >= 1");
    if (!(feature_subsample > 0.0) || feature_subsample > 1.0) {
        throw InvalidArgumentError("feature_subsample must lie in (0, 1]");
    }
}

namespace {

detail::GrowthInputs make_inputs(const Dataset& data, const std::vector<double>& targets) {
    detail::GrowthInputs inputs;
    inputs.value = [&data](std::size_t row, std::size_t feature) { return data.at(row, feature); };
    inputs.n_rows = data.n_rows();
    inputs.n_features = data.n_cols();
    inputs.targets = targets;
    return inputs;
}

DecisionTree fit_tree_impl(const Dataset& data, const std::vector<double>& targets,
                           const LearnerConfig& config, std::uint64_t seed) {
    detail::GrowthInputs inputs = make_inputs(data, targets);
    detail::GrowthConfig growth;
    growth.max_leaves = config.max_leaf_nodes;
    growth.impurity = config.impurity_kind;
    growth.min_samples_per_side = static_cast<std::size_t>(config.min_samples_per_side);
    growth.feature_subsample = config.feature_subsample;
    growth.seed = seed;
    return detail::grow_best_first(inputs, growth, data.column_names());
}

}  // namespace

DecisionTree fit_tree(const Dataset& data, const std::vector<double>& targets,
                      const LearnerConfig& config) {
    config.validate();
    if (config.impurity_kind == ImpurityKind::Shift) {
        throw InvalidArgumentError(
            "shift impurity needs paired P/Q samples; use grow_surrogate");
    }
    if (targets.size() != data.n_rows()) {
        throw InvalidArgumentError("targets length does not match dataset rows");
    }
    return fit_tree_impl(data, targets, config, config.seed);
}

TreeEnsemble fit_random_forest(const Dataset& data, const std::vector<double>& targets,
                               const LearnerConfig& config) {
    config.validate();
    if (config.impurity_kind == ImpurityKind::Shift) {
        throw InvalidArgumentError("shift impurity is not a forest training objective");
    }
    if (targets.size() != data.n_rows()) {
        throw InvalidArgumentError("targets length does not match dataset rows");
    }

    const std::size_t n = data.n_rows();
    const auto n_trees = static_cast<std::size_t>(config.n_estimators);

    TreeEnsemble ensemble;
    ensemble.trees.resize(n_trees);
    ensemble.tree_weights.assign(n_trees, 1.0);
    ensemble.base_score = 0.0;
    ensemble.aggregation = Aggregation::Mean;
    ensemble.kind = EnsembleKind::RandomForest;
    ensemble.feature_names = data.column_names();

    parallel_for(n_trees, [&](std::size_t t) {
        const std::uint64_t tree_seed = detail::derive_seed(config.seed, t);

        std::vector<std::size_t> rows(n);
        if (config.bootstrap) {
            std::uint64_t state = tree_seed;
            // modulo bias is irrelevant at these sizes
            for (std::size_t i = 0; i < n; ++i) rows[i] = detail::next_rand(state) % n;
        } else {
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }

        detail::GrowthInputs inputs;
        inputs.n_rows = n;
        inputs.n_features = data.n_cols();
        inputs.targets.resize(n);
        for (std::size_t i = 0; i < n; ++i) inputs.targets[i] = targets[rows[i]];
        auto rows_shared = std::make_shared<std::vector<std::size_t>>(std::move(rows));
        inputs.value = [&data, rows_shared](std::size_t row, std::size_t feature) {
            return data.at((*rows_shared)[row], feature);
        };

        detail::GrowthConfig growth;
        growth.max_leaves = config.max_leaf_nodes;
        growth.impurity = config.impurity_kind;
        growth.min_samples_per_side = static_cast<std::size_t>(config.min_samples_per_side);
        growth.feature_subsample = config.feature_subsample;
        growth.seed = detail::derive_seed(tree_seed, 1);
        ensemble.trees[t] = detail::grow_best_first(inputs, growth, data.column_names());
    });

    ensemble.validate();
    return ensemble;
}

TreeEnsemble fit_gradient_boosted(const Dataset& data, const std::vector<double>& targets,
                                  const LearnerConfig& config) {
    config.validate();
    if (targets.size() != data.n_rows()) {
        throw InvalidArgumentError("targets length does not match dataset rows");
    }

    const std::size_t n = data.n_rows();
    const double base =
        std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(n);

    TreeEnsemble ensemble;
    ensemble.base_score = base;
    ensemble.aggregation = Aggregation::WeightedSum;
    ensemble.kind = EnsembleKind::GradientBoosted;
    ensemble.feature_names = data.column_names();

    LearnerConfig stage = config;
    stage.impurity_kind = ImpurityKind::Variance;  // least-squares boosting

    std::vector<double> running(n, base);
    std::vector<double> residuals(n);
    for (int k = 0; k < config.n_estimators; ++k) {
        for (std::size_t i = 0; i < n; ++i) residuals[i] = targets[i] - running[i];
        DecisionTree tree = fit_tree_impl(data, residuals, stage,
                                          detail::derive_seed(config.seed, static_cast<std::uint64_t>(k)));
        for (std::size_t i = 0; i < n; ++i) {
            running[i] += config.learning_rate * tree.predict(data.row(i));
        }
        ensemble.trees.push_back(std::move(tree));
        ensemble.tree_weights.push_back(config.learning_rate);
    }

    ensemble.validate();
    return ensemble;
}

}  // namespace shapshift
