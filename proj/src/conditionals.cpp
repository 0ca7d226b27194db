#include "shapshift/conditionals.hpp"

#include <charconv>
#include <unordered_map>

#include "shapshift/errors.hpp"

namespace shapshift {

ConditionalTable::ConditionalTable(std::vector<SplitConditional> conditionals,
                                   std::vector<double> p_probs, std::vector<double> q_probs,
                                   std::vector<ReachCounts> p_counts,
                                   std::vector<ReachCounts> q_counts,
                                   std::vector<LeafFactorPath> leaves)
    : conditionals_(std::move(conditionals)),
      p_probs_(std::move(p_probs)),
      q_probs_(std::move(q_probs)),
      p_counts_(std::move(p_counts)),
      q_counts_(std::move(q_counts)),
      leaves_(std::move(leaves)) {
    const std::size_t n = conditionals_.size();
    if (p_probs_.size() != n || q_probs_.size() != n || p_counts_.size() != n ||
        q_counts_.size() != n) {
        throw InvalidArgumentError("conditional table arrays must have equal length");
    }
}

std::string format_real(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) return "?";
    return std::string(buf, ptr);
}

namespace {

std::string feature_label(int index, const std::vector<std::string>& names) {
    if (index >= 0 && static_cast<std::size_t>(index) < names.size()) {
        return names[static_cast<std::size_t>(index)];
    }
    return "x" + std::to_string(index);
}

}  // namespace

std::string render_conditional_label(const SplitConditional& conditional,
                                     const std::vector<std::string>& feature_names) {
    std::string label = "P(" + feature_label(conditional.feature_index, feature_names) +
                        " ≤ " + format_real(conditional.threshold);
    if (!conditional.path.empty()) {
        label += " | ";
        for (std::size_t i = 0; i < conditional.path.size(); ++i) {
            const PathStep& step = conditional.path[i];
            if (i > 0) label += ", ";
            label += feature_label(step.feature_index, feature_names) + " ≤ " +
                     format_real(step.threshold);
            if (!step.branch_true) label += " is false";
        }
    }
    label += ")";
    return label;
}

ConditionalTable extract_conditionals(const DecisionTree& tree, const Dataset& data_p,
                                      const Dataset& data_q) {
    const std::size_t dim = tree.min_dimension();
    if (data_p.n_cols() < dim || data_q.n_cols() < dim) {
        throw InvalidArgumentError("datasets do not match the tree's feature dimension");
    }

    std::unordered_map<int, ReachCounts> p_counts, q_counts;
    auto tally = [&](const Dataset& data, std::unordered_map<int, ReachCounts>& counts) {
        for (std::size_t i = 0; i < data.n_rows(); ++i) {
            auto row = data.row(i);
            int id = tree.root_id();
            while (tree.is_split(id)) {
                const SplitNode& s = tree.split(id);
                ReachCounts& c = counts[id];
                ++c.n_reached;
                const bool went_true =
                    row[static_cast<std::size_t>(s.feature_index)] <= s.threshold;
                if (went_true) ++c.n_true;
                id = went_true ? s.left_child_id : s.right_child_id;
            }
        }
    };
    tally(data_p, p_counts);
    tally(data_q, q_counts);

    // Preorder walk assembling conditionals, paths and leaf factor lists.
    std::vector<SplitConditional> conditionals;
    std::vector<double> p_probs, q_probs;
    std::vector<ReachCounts> p_out, q_out;
    std::vector<LeafFactorPath> leaves;
    std::vector<PathStep> path;
    std::vector<std::pair<std::size_t, bool>> factor_steps;

    auto walk = [&](auto&& self, int id) -> void {
        if (tree.is_leaf(id)) {
            leaves.push_back({id, tree.leaf(id).value, factor_steps});
            return;
        }
        const SplitNode& s = tree.split(id);
        const ReachCounts pc = p_counts[id];
        const ReachCounts qc = q_counts[id];
        if (pc.n_reached == 0 || qc.n_reached == 0) {
            throw UndefinedConditionalError(
                id, "split node " + std::to_string(id) + " is reached by zero rows under " +
                        (pc.n_reached == 0 ? "P" : "Q") +
                        "; its conditional probability is undefined");
        }
        SplitConditional c;
        c.node_id = id;
        c.path = path;
        c.feature_index = s.feature_index;
        c.threshold = s.threshold;
        c.human_label = render_conditional_label(c, tree.feature_names());
        const std::size_t index = conditionals.size();
        conditionals.push_back(std::move(c));
        p_probs.push_back(static_cast<double>(pc.n_true) / static_cast<double>(pc.n_reached));
        q_probs.push_back(static_cast<double>(qc.n_true) / static_cast<double>(qc.n_reached));
        p_out.push_back(pc);
        q_out.push_back(qc);

        path.push_back({s.feature_index, s.threshold, true});
        factor_steps.emplace_back(index, true);
        self(self, s.left_child_id);
        path.back().branch_true = false;
        factor_steps.back().second = false;
        self(self, s.right_child_id);
        path.pop_back();
        factor_steps.pop_back();
    };
    walk(walk, tree.root_id());

    return ConditionalTable(std::move(conditionals), std::move(p_probs), std::move(q_probs),
                            std::move(p_out), std::move(q_out), std::move(leaves));
}

LeafStats compute_leaf_stats(const DecisionTree& tree, const std::vector<double>& predict_p,
                             const std::vector<double>& predict_q, const Dataset& data_p,
                             const Dataset& data_q, LeafFillPolicy fill_policy) {
    if (predict_p.size() != data_p.n_rows() || predict_q.size() != data_q.n_rows()) {
        throw InvalidArgumentError("prediction vectors must align with their datasets");
    }

    const std::vector<int> order = tree.leaf_preorder();
    std::unordered_map<int, std::size_t> slot;
    for (std::size_t i = 0; i < order.size(); ++i) slot.emplace(order[i], i);

    const std::size_t n_leaves = order.size();
    std::vector<std::size_t> p_count(n_leaves, 0), q_count(n_leaves, 0);
    std::vector<double> p_sum(n_leaves, 0.0), q_sum(n_leaves, 0.0);

    for (std::size_t i = 0; i < data_p.n_rows(); ++i) {
        const std::size_t s = slot.at(tree.route(data_p.row(i)));
        ++p_count[s];
        p_sum[s] += predict_p[i];
    }
    for (std::size_t i = 0; i < data_q.n_rows(); ++i) {
        const std::size_t s = slot.at(tree.route(data_q.row(i)));
        ++q_count[s];
        q_sum[s] += predict_q[i];
    }

    LeafStats stats;
    stats.leaf_ids = order;
    stats.p_probs.resize(n_leaves);
    stats.q_probs.resize(n_leaves);
    stats.p_means.resize(n_leaves);
    stats.q_means.resize(n_leaves);
    stats.p_counts = p_count;
    stats.q_counts = q_count;
    stats.fill_applied.assign(n_leaves, false);

    const auto np = static_cast<double>(data_p.n_rows());
    const auto nq = static_cast<double>(data_q.n_rows());
    for (std::size_t i = 0; i < n_leaves; ++i) {
        stats.p_probs[i] = static_cast<double>(p_count[i]) / np;
        stats.q_probs[i] = static_cast<double>(q_count[i]) / nq;
        const bool has_p = p_count[i] > 0;
        const bool has_q = q_count[i] > 0;
        const double tree_value = tree.leaf(order[i]).value;
        if (has_p && has_q) {
            stats.p_means[i] = p_sum[i] / static_cast<double>(p_count[i]);
            stats.q_means[i] = q_sum[i] / static_cast<double>(q_count[i]);
        } else if (!has_p && !has_q) {
            stats.p_means[i] = tree_value;
            stats.q_means[i] = tree_value;
            stats.fill_applied[i] = true;
        } else {
            const double defined = has_p ? p_sum[i] / static_cast<double>(p_count[i])
                                         : q_sum[i] / static_cast<double>(q_count[i]);
            const double fill =
                fill_policy == LeafFillPolicy::OtherDistributionMean ? defined : tree_value;
            stats.p_means[i] = has_p ? defined : fill;
            stats.q_means[i] = has_q ? defined : fill;
            stats.fill_applied[i] = true;
        }
    }
    return stats;
}

}  // namespace shapshift
