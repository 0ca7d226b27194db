#pragma once

#include <cstdint>
#include <vector>

#include "shapshift/dataset.hpp"
#include "shapshift/tree.hpp"

namespace shapshift {

enum class ImpurityKind { Variance, Gini, Shift };

struct LearnerConfig {
    int max_leaf_nodes = 8;        // >= 2
    int min_samples_per_side = 5;  // >= 1
    ImpurityKind impurity_kind = ImpurityKind::Variance;
    int n_estimators = 100;
    double feature_subsample = 1.0;  // fraction of features scanned per split, (0, 1]
    double learning_rate = 0.1;      // boosting only
    std::uint64_t seed = 0;
    bool bootstrap = true;  // forests only; off makes n_estimators=1 match fit_tree

    void validate() const;
};

// Best-first CART: repeatedly split the extant leaf whose best split gives
// the largest impurity decrease, until max_leaf_nodes is reached or no
// admissible split strictly decreases impurity. Leaf values are target
// means. Candidate thresholds are midpoints between consecutive distinct
// sorted feature values; ties between equal-gain splits go to the lowest
// feature index, then the smallest threshold.
DecisionTree fit_tree(const Dataset& data, const std::vector<double>& targets,
                      const LearnerConfig& config);

// n_estimators trees, each grown on a seeded bootstrap resample with
// per-split feature subsampling; mean aggregation, base_score 0.
// Same seed gives a bit-identical ensemble regardless of thread count.
TreeEnsemble fit_random_forest(const Dataset& data, const std::vector<double>& targets,
                               const LearnerConfig& config);

// Least-squares boosting: base_score = mean(targets); tree k fits the
// residuals of the running prediction and enters with weight learning_rate.
TreeEnsemble fit_gradient_boosted(const Dataset& data, const std::vector<double>& targets,
                                  const LearnerConfig& config);

}  // namespace shapshift
