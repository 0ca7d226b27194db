#include "shapshift/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "growth.hpp"
#include "shapshift/errors.hpp"
#include "shapshift/threading.hpp"

namespace shapshift {

double shift_impurity(const ShiftImpurityInputs& inputs) {
    if (inputs.total_p < 1 || inputs.total_q < 1) {
        throw InvalidArgumentError("shift impurity requires nonempty totals");
    }
    if (inputs.count_p > inputs.total_p || inputs.count_q > inputs.total_q) {
        throw InvalidArgumentError("leaf counts cannot exceed totals");
    }
    if (inputs.count_p == 0 || inputs.count_q == 0) {
        return std::numeric_limits<double>::infinity();
    }
    const double mass = static_cast<double>(inputs.count_p) / static_cast<double>(inputs.total_p) +
                        static_cast<double>(inputs.count_q) / static_cast<double>(inputs.total_q);
    const double mean_p = inputs.sum_p / static_cast<double>(inputs.count_p);
    const double mean_q = inputs.sum_q / static_cast<double>(inputs.count_q);
    return mass * std::abs(mean_p - mean_q);
}

DecisionTree grow_surrogate(const Dataset& data_p, const Dataset& data_q,
                            const std::vector<double>& predict_p,
                            const std::vector<double>& predict_q, const SurrogateConfig& config) {
    if (data_p.n_cols() != data_q.n_cols()) {
        throw InvalidArgumentError("P and Q datasets must share a schema");
    }
    if (predict_p.size() != data_p.n_rows() || predict_q.size() != data_q.n_rows()) {
        throw InvalidArgumentError("prediction vectors must align with their datasets");
    }
    if (config.min_samples_per_side_per_distribution < 1) {
        throw InvalidArgumentError("min_samples_per_side_per_distribution must be >= 1");
    }

    const std::size_t np = data_p.n_rows();
    const std::size_t nq = data_q.n_rows();

    detail::GrowthInputs inputs;
    inputs.n_rows = np + nq;
    inputs.n_features = data_p.n_cols();
    inputs.value = [&data_p, &data_q, np](std::size_t row, std::size_t feature) {
        return row < np ? data_p.at(row, feature) : data_q.at(row - np, feature);
    };
    inputs.targets.reserve(np + nq);
    inputs.targets.insert(inputs.targets.end(), predict_p.begin(), predict_p.end());
    inputs.targets.insert(inputs.targets.end(), predict_q.begin(), predict_q.end());
    inputs.origins.assign(np + nq, 0);
    std::fill(inputs.origins.begin() + static_cast<std::ptrdiff_t>(np), inputs.origins.end(),
              std::uint8_t{1});
    inputs.total_p = np;
    inputs.total_q = nq;

    detail::GrowthConfig growth;
    growth.max_leaves = config.max_leaves;
    growth.impurity = config.impurity;
    growth.min_samples_per_side = 1;
    growth.min_per_distribution =
        static_cast<std::size_t>(config.min_samples_per_side_per_distribution);
    return detail::grow_best_first(inputs, growth, data_p.column_names());
}

namespace {

// Aggregates routed through the original tree, per node id.
struct NodeAggregate {
    std::size_t count_p = 0;
    std::size_t count_q = 0;
    double sum_p = 0.0;
    double sum_q = 0.0;
};

}  // namespace

DecisionTree prune_regrow(const DecisionTree& large_tree, const Dataset& data_p,
                          const Dataset& data_q, const std::vector<double>& predict_p,
                          const std::vector<double>& predict_q, int target_leaves) {
    if (target_leaves < 2) throw InvalidArgumentError("target_leaves must be >= 2");
    if (static_cast<std::size_t>(target_leaves) > large_tree.n_leaves()) {
        throw InvalidArgumentError("target_leaves exceeds the tree's leaf count");
    }
    if (predict_p.size() != data_p.n_rows() || predict_q.size() != data_q.n_rows()) {
        throw InvalidArgumentError("prediction vectors must align with their datasets");
    }

    // Per-node counts and prediction sums along every routing path.
    std::unordered_map<int, NodeAggregate> agg;
    auto tally = [&](const Dataset& data, const std::vector<double>& preds, bool is_p) {
        for (std::size_t i = 0; i < data.n_rows(); ++i) {
            auto row = data.row(i);
            int id = large_tree.root_id();
            for (;;) {
                NodeAggregate& a = agg[id];
                if (is_p) {
                    ++a.count_p;
                    a.sum_p += preds[i];
                } else {
                    ++a.count_q;
                    a.sum_q += preds[i];
                }
                if (!large_tree.is_split(id)) break;
                const SplitNode& s = large_tree.split(id);
                id = row[static_cast<std::size_t>(s.feature_index)] <= s.threshold
                         ? s.left_child_id
                         : s.right_child_id;
            }
        }
    };
    tally(data_p, predict_p, true);
    tally(data_q, predict_q, false);

    const std::size_t np = data_p.n_rows();
    const std::size_t nq = data_q.n_rows();
    auto impurity_of = [&](int id) {
        const NodeAggregate& a = agg[id];
        if (a.count_p == 0 || a.count_q == 0) return std::numeric_limits<double>::infinity();
        return shift_impurity({a.count_p, a.count_q, np, nq, a.sum_p, a.sum_q});
    };
    auto expandable = [&](int id) {
        if (!large_tree.is_split(id)) return false;
        const NodeAggregate& a = agg[id];
        // Expanding a one-sided node would make its conditional undefined.
        return a.count_p > 0 && a.count_q > 0;
    };

    // Leaf value when a node is collapsed: pooled prediction mean of the
    // rows reaching it; original leaves keep their value; unreached
    // internal nodes fall back to the average of their children's values.
    std::unordered_map<int, double> collapsed_value;
    auto value_of = [&](auto&& self, int id) -> double {
        auto it = collapsed_value.find(id);
        if (it != collapsed_value.end()) return it->second;
        double v;
        const NodeAggregate& a = agg[id];
        if (large_tree.is_leaf(id)) {
            v = large_tree.leaf(id).value;
        } else if (a.count_p + a.count_q > 0) {
            v = (a.sum_p + a.sum_q) / static_cast<double>(a.count_p + a.count_q);
        } else {
            const SplitNode& s = large_tree.split(id);
            v = 0.5 * (self(self, s.left_child_id) + self(self, s.right_child_id));
        }
        collapsed_value[id] = v;
        return v;
    };

    // Preorder position for deterministic tie-breaking.
    std::unordered_map<int, std::size_t> preorder_pos;
    {
        std::size_t pos = 0;
        std::vector<int> stack{large_tree.root_id()};
        while (!stack.empty()) {
            int id = stack.back();
            stack.pop_back();
            preorder_pos[id] = pos++;
            if (large_tree.is_split(id)) {
                const SplitNode& s = large_tree.split(id);
                stack.push_back(s.right_child_id);
                stack.push_back(s.left_child_id);
            }
        }
    }

    // Current frontier: ids of original nodes serving as leaves.
    std::vector<int> frontier;
    if (!expandable(large_tree.root_id())) {
        throw InvalidArgumentError("root cannot be expanded: one distribution has no rows");
    }
    {
        const SplitNode& root = large_tree.split(large_tree.root_id());
        frontier.push_back(root.left_child_id);
        frontier.push_back(root.right_child_id);
    }

    while (frontier.size() < static_cast<std::size_t>(target_leaves)) {
        std::ptrdiff_t pick = -1;
        for (std::size_t i = 0; i < frontier.size(); ++i) {
            if (!expandable(frontier[i])) continue;
            if (pick < 0) {
                pick = static_cast<std::ptrdiff_t>(i);
                continue;
            }
            const double a = impurity_of(frontier[i]);
            const double b = impurity_of(frontier[static_cast<std::size_t>(pick)]);
            if (a > b || (a == b && preorder_pos[frontier[i]] <
                                        preorder_pos[frontier[static_cast<std::size_t>(pick)]])) {
                pick = static_cast<std::ptrdiff_t>(i);
            }
        }
        if (pick < 0) break;  // nothing left to expand
        const int id = frontier[static_cast<std::size_t>(pick)];
        const SplitNode& s = large_tree.split(id);
        frontier[static_cast<std::size_t>(pick)] = s.left_child_id;
        frontier.insert(frontier.begin() + pick + 1, s.right_child_id);
    }

    // Emit the prefix tree with fresh preorder ids, keeping original node
    // ids out of it so the result stands alone.
    std::vector<int> frontier_sorted = frontier;
    std::sort(frontier_sorted.begin(), frontier_sorted.end());
    auto is_frontier = [&](int id) {
        return std::binary_search(frontier_sorted.begin(), frontier_sorted.end(), id);
    };

    std::vector<SplitNode> splits;
    std::vector<Leaf> leaves;
    int next_id = 0;
    auto emit = [&](auto&& self, int original_id) -> int {
        const int id = next_id++;
        if (is_frontier(original_id) || large_tree.is_leaf(original_id)) {
            leaves.push_back({id, value_of(value_of, original_id)});
            return id;
        }
        const SplitNode& s = large_tree.split(original_id);
        splits.push_back({id, s.feature_index, s.threshold, -1, -1});
        const std::size_t slot = splits.size() - 1;
        const int left = self(self, s.left_child_id);
        const int right = self(self, s.right_child_id);
        splits[slot].left_child_id = left;
        splits[slot].right_child_id = right;
        return id;
    };
    emit(emit, large_tree.root_id());

    return DecisionTree(std::move(splits), std::move(leaves), 0, large_tree.feature_names());
}

ProxySimulationSummary proxy_simulation(const ProxySimulationConfig& config) {
    if (config.depth < 1 || config.depth > 8) {
        throw InvalidArgumentError("proxy simulation depth must lie in [1, 8]");
    }
    if (config.n_repeats < 1) throw InvalidArgumentError("n_repeats must be >= 1");
    if (config.correlation < 0.0 || config.correlation > 1.0) {
        throw InvalidArgumentError("correlation must lie in [0, 1]");
    }

    const std::size_t depth = static_cast<std::size_t>(config.depth);
    const std::size_t n_splits = (std::size_t{1} << depth) - 1;
    const std::size_t n_leaves = std::size_t{1} << depth;

    // w(s) = s!(n-s)!/(n+1)! = 1/((n+1) C(n,s)); the LeafMeans player is
    // part of the weighting, hence n+1.
    std::vector<double> choose(n_splits + 1, 1.0);
    for (std::size_t s = 1; s <= n_splits; ++s) {
        choose[s] = choose[s - 1] * static_cast<double>(n_splits - s + 1) / static_cast<double>(s);
    }
    std::vector<double> w(n_splits + 1);
    for (std::size_t s = 0; s <= n_splits; ++s) {
        w[s] = 1.0 / (static_cast<double>(n_splits + 1) * choose[s]);
    }

    // Tail weights: W(m) = sum_j C(n-d, j) w(m+j) for a leaf with d
    // ancestors; on a complete tree d == depth for every leaf.
    std::vector<double> rest_choose(n_splits - depth + 1, 1.0);
    for (std::size_t j = 1; j <= n_splits - depth; ++j) {
        rest_choose[j] = rest_choose[j - 1] * static_cast<double>(n_splits - depth - j + 1) /
                         static_cast<double>(j);
    }
    std::vector<double> tail(depth + 1, 0.0);
    for (std::size_t m = 0; m <= depth; ++m) {
        double acc = 0.0;
        for (std::size_t j = 0; j + depth <= n_splits + 0 && j <= n_splits - depth; ++j) {
            acc += rest_choose[j] * w[m + j];
        }
        tail[m] = acc;
    }

    // Ancestors of leaf l on the complete tree, with branch directions.
    std::vector<std::vector<std::pair<std::size_t, bool>>> paths(n_leaves);
    for (std::size_t l = 0; l < n_leaves; ++l) {
        std::size_t node = 0;
        for (std::size_t level = 0; level < depth; ++level) {
            const bool went_true = ((l >> (depth - 1 - level)) & 1) == 0;
            paths[l].push_back({node, went_true});
            node = 2 * node + 1 + (went_true ? 0 : 1);
        }
    }

    const auto n_repeats = static_cast<std::size_t>(config.n_repeats);
    std::vector<double> sums(n_repeats, 0.0);
    std::vector<double> sq_sums(n_repeats, 0.0);
    std::vector<std::size_t> hits05(n_repeats, 0), hits10(n_repeats, 0);

    parallel_for(n_repeats, [&](std::size_t rep) {
        std::uint64_t state = detail::derive_seed(config.seed, rep);
        std::vector<double> p(n_splits), q(n_splits);
        for (std::size_t i = 0; i < n_splits; ++i) {
            p[i] = detail::to_unit_double(detail::next_rand(state));
        }
        for (std::size_t i = 0; i < n_splits; ++i) {
            const double fresh = detail::to_unit_double(detail::next_rand(state));
            q[i] = (1.0 - config.correlation) * fresh + config.correlation * p[i];
        }

        for (std::size_t l = 0; l < n_leaves; ++l) {
            const auto& path = paths[l];
            // Weighted average interventional probability, written as
            // Z_empty + sum over nonempty intervened ancestor subsets of
            // (Z_t - Z_empty) W(|t|), so it is exactly Z_empty when P = Q.
            double z_empty = 1.0;
            for (const auto& [node, went_true] : path) {
                z_empty *= went_true ? p[node] : 1.0 - p[node];
            }
            double avg = z_empty;
            const std::size_t n_subsets = std::size_t{1} << depth;
            for (std::size_t t = 1; t < n_subsets; ++t) {
                double z = 1.0;
                for (std::size_t a = 0; a < depth; ++a) {
                    const auto& [node, went_true] = path[a];
                    const double prob = ((t >> a) & 1) ? q[node] : p[node];
                    z *= went_true ? prob : 1.0 - prob;
                }
                avg += (z - z_empty) * tail[std::popcount(t)];
            }

            double z_full = 1.0;
            for (const auto& [node, went_true] : path) {
                z_full *= went_true ? q[node] : 1.0 - q[node];
            }
            const double diff = avg - (z_empty + z_full) / 2.0;
            sums[rep] += diff;
            sq_sums[rep] += diff * diff;
            if (std::abs(diff) <= 0.05) ++hits05[rep];
            if (std::abs(diff) <= 0.1) ++hits10[rep];
        }
    });

    double total = 0.0, total_sq = 0.0;
    std::size_t h05 = 0, h10 = 0;
    for (std::size_t rep = 0; rep < n_repeats; ++rep) {
        total += sums[rep];
        total_sq += sq_sums[rep];
        h05 += hits05[rep];
        h10 += hits10[rep];
    }
    const auto n_samples = static_cast<double>(n_repeats * n_leaves);

    ProxySimulationSummary summary;
    summary.n_samples = n_repeats * n_leaves;
    summary.mean_diff = total / n_samples;
    summary.std_diff = std::sqrt(std::max(0.0, total_sq / n_samples -
                                                   summary.mean_diff * summary.mean_diff));
    summary.frac_within_005 = static_cast<double>(h05) / n_samples;
    summary.frac_within_01 = static_cast<double>(h10) / n_samples;
    return summary;
}

}  // namespace shapshift
