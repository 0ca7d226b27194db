#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "shapshift/dataset.hpp"
#include "shapshift/tree.hpp"

namespace shapshift {

struct PathStep {
    int feature_index = -1;
    double threshold = 0.0;
    bool branch_true = true;  // took the "x <= t" side
};

// One subgroup conditional: the probability that a split node's test is
// true given the node is reached. The path identifies the ancestor
// subgroup; the label renders e.g. "P(x2 <= 1 | x1 <= 0 is false)".
struct SplitConditional {
    int node_id = -1;
    std::vector<PathStep> path;  // root to parent, excludes the node's own test
    int feature_index = -1;
    double threshold = 0.0;
    std::string human_label;
};

struct ReachCounts {
    std::size_t n_reached = 0;
    std::size_t n_true = 0;
};

// Which conditionals apply to a leaf, and on which branch.
struct LeafFactorPath {
    int leaf_id = -1;
    double tree_value = 0.0;  // the tree's own prediction at this leaf
    // (conditional index in preorder list, took true branch)
    std::vector<std::pair<std::size_t, bool>> steps;
};

// Per split node, the conditional probability of the test being true
// given the node is reached, estimated under P and Q. Ordering is a fixed
// preorder traversal so factor indexing is stable across runs.
class ConditionalTable {
public:
    ConditionalTable() = default;
    ConditionalTable(std::vector<SplitConditional> conditionals, std::vector<double> p_probs,
                     std::vector<double> q_probs, std::vector<ReachCounts> p_counts,
                     std::vector<ReachCounts> q_counts, std::vector<LeafFactorPath> leaves);

    std::size_t n_conditionals() const { return conditionals_.size(); }
    std::size_t n_leaves() const { return leaves_.size(); }

    const std::vector<SplitConditional>& conditionals() const { return conditionals_; }
    const std::vector<double>& p_probs() const { return p_probs_; }
    const std::vector<double>& q_probs() const { return q_probs_; }
    const std::vector<ReachCounts>& p_counts() const { return p_counts_; }
    const std::vector<ReachCounts>& q_counts() const { return q_counts_; }
    const std::vector<LeafFactorPath>& leaves() const { return leaves_; }

private:
    std::vector<SplitConditional> conditionals_;
    std::vector<double> p_probs_;
    std::vector<double> q_probs_;
    std::vector<ReachCounts> p_counts_;
    std::vector<ReachCounts> q_counts_;
    std::vector<LeafFactorPath> leaves_;
};

// Routes every row of both datasets through the tree and records, per
// split node, how many rows reach it and how many pass its test. Throws
// UndefinedConditionalError if any split node is reached by zero rows
// under either distribution.
ConditionalTable extract_conditionals(const DecisionTree& tree, const Dataset& data_p,
                                      const Dataset& data_q);

enum class LeafFillPolicy {
    OtherDistributionMean,  // default: borrow the other side's mean
    TreeValue,              // always fall back to the tree's own leaf value
};

// Per leaf: empirical probability and mean target-model prediction under
// P and Q. Leaves empty under one distribution get a policy fill and a
// flag; empty under both fall back to the tree's own leaf value.
struct LeafStats {
    std::vector<int> leaf_ids;  // preorder, aligned with ConditionalTable::leaves()
    std::vector<double> p_probs;
    std::vector<double> q_probs;
    std::vector<double> p_means;
    std::vector<double> q_means;
    std::vector<std::size_t> p_counts;
    std::vector<std::size_t> q_counts;
    std::vector<bool> fill_applied;
};

LeafStats compute_leaf_stats(const DecisionTree& tree, const std::vector<double>& predict_p,
                             const std::vector<double>& predict_q, const Dataset& data_p,
                             const Dataset& data_q,
                             LeafFillPolicy fill_policy = LeafFillPolicy::OtherDistributionMean);

// Deterministic rendering of a conditional, e.g.
// "P(x2 <= 1 | x1 <= 0 is false)". Falls back to x<i> when the tree
// carries no feature names.
std::string render_conditional_label(const SplitConditional& conditional,
                                     const std::vector<std::string>& feature_names);

// Shortest round-trip formatting for reals in labels and reports.
std::string format_real(double value);

}  // namespace shapshift
