#pragma once

#include <cstdint>
#include <vector>

#include "shapshift/dataset.hpp"
#include "shapshift/learner.hpp"
#include "shapshift/tree.hpp"

namespace shapshift {

// Per-leaf ingredients for the shift impurity: counts and prediction sums
// of the target model over the P and Q rows falling in the leaf.
struct ShiftImpurityInputs {
    std::size_t count_p = 0;  // |P_l|
    std::size_t count_q = 0;  // |Q_l|
    std::size_t total_p = 0;  // |P|
    std::size_t total_q = 0;  // |Q|
    double sum_p = 0.0;       // sum of f over P_l
    double sum_q = 0.0;       // sum of f over Q_l
};

// (|P_l|/|P| + |Q_l|/|Q|) * |mean_P f - mean_Q f|. A leaf empty on either
// side returns +infinity so the split is inadmissible, which is what
// guarantees surrogates never produce undefined conditionals.
double shift_impurity(const ShiftImpurityInputs& inputs);

struct SurrogateConfig {
    int max_leaves = 8;
    ImpurityKind impurity = ImpurityKind::Shift;
    int min_samples_per_side_per_distribution = 5;
};

// Grows a surrogate tree on the concatenated P and Q rows, labelled by the
// target model's predictions, splitting to minimise the chosen impurity.
// Every split keeps at least the configured number of rows from each
// distribution on each side; growth stops early once no admissible split
// strictly decreases total impurity. Leaf values are prediction means over
// the pooled rows.
DecisionTree grow_surrogate(const Dataset& data_p, const Dataset& data_q,
                            const std::vector<double>& predict_p,
                            const std::vector<double>& predict_q, const SurrogateConfig& config);

// Rebuilds a small prefix of a large tree: starting from the root split
// with both children collapsed, repeatedly reinstates the original
// children of the current leaf with the highest shift impurity until
// target_leaves is reached. Nodes whose rows come from only one
// distribution are never expanded.
DecisionTree prune_regrow(const DecisionTree& large_tree, const Dataset& data_p,
                          const Dataset& data_q, const std::vector<double>& predict_p,
                          const std::vector<double>& predict_q, int target_leaves);

struct ProxySimulationConfig {
    int depth = 3;          // complete tree depth; 2^depth leaves
    int n_repeats = 5000;
    std::uint64_t seed = 0;
    double correlation = 0.0;  // rho in [0,1]; Q probs = (1-rho)*fresh + rho*P
};

struct ProxySimulationSummary {
    double mean_diff = 0.0;
    double std_diff = 0.0;
    double frac_within_005 = 0.0;
    double frac_within_01 = 0.0;
    std::size_t n_samples = 0;
};

// Monte-Carlo check that the Shapley-weighted average interventional leaf
// probability tracks the midpoint (P(l)+Q(l))/2. Each repeat samples split
// probabilities for P and Q uniformly on [0,1] (optionally correlated),
// evaluates the weighted average exactly for every leaf, and aggregates
// the differences from the midpoint.
ProxySimulationSummary proxy_simulation(const ProxySimulationConfig& config);

}  // namespace shapshift
