#include "shapshift/tree.hpp"

#include <stack>
#include <stdexcept>

#include "shapshift/errors.hpp"

namespace shapshift {

DecisionTree::DecisionTree(std::vector<SplitNode> nodes, std::vector<Leaf> leaves, int root_id,
                           std::vector<std::string> feature_names)
    : nodes_(std::move(nodes)),
      leaves_(std::move(leaves)),
      root_id_(root_id),
      feature_names_(std::move(feature_names)) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!split_index_of_.emplace(nodes_[i].id, i).second) {
            throw ValidationError("duplicate node id " + std::to_string(nodes_[i].id));
        }
    }
    for (std::size_t i = 0; i < leaves_.size(); ++i) {
        if (split_index_of_.count(leaves_[i].id) ||
            !leaf_index_of_.emplace(leaves_[i].id, i).second) {
            throw ValidationError("duplicate node id " + std::to_string(leaves_[i].id));
        }
    }
    validate();
}

void DecisionTree::validate() const {
    if (leaves_.empty()) throw ValidationError("tree has no leaves");
    if (leaves_.size() != nodes_.size() + 1) {
        throw ValidationError("leaf count " + std::to_string(leaves_.size()) +
                              " != split count + 1 (" + std::to_string(nodes_.size() + 1) + ")");
    }
    if (!is_split(root_id_) && !is_leaf(root_id_)) {
        throw ValidationError("root id " + std::to_string(root_id_) + " refers to no node");
    }

    // Every node reachable from the root exactly once (proper binary tree).
    std::unordered_map<int, int> visits;
    std::stack<int> pending;
    pending.push(root_id_);
    while (!pending.empty()) {
        int id = pending.top();
        pending.pop();
        if (++visits[id] > 1) {
            throw ValidationError("cycle detected: node " + std::to_string(id) +
                                  " reached more than once");
        }
        if (is_split(id)) {
            const SplitNode& s = split(id);
            for (int child : {s.left_child_id, s.right_child_id}) {
                if (!is_split(child) && !is_leaf(child)) {
                    throw ValidationError("node " + std::to_string(id) +
                                          " references missing child " + std::to_string(child));
                }
                pending.push(child);
            }
        }
    }
    if (visits.size() != nodes_.size() + leaves_.size()) {
        std::string orphans;
        for (const auto& n : nodes_) {
            if (!visits.count(n.id)) orphans += " " + std::to_string(n.id);
        }
        for (const auto& l : leaves_) {
            if (!visits.count(l.id)) orphans += " " + std::to_string(l.id);
        }
        throw ValidationError("orphan nodes not reachable from root:" + orphans);
    }
    for (const auto& n : nodes_) {
        if (n.feature_index < 0) {
            throw ValidationError("node " + std::to_string(n.id) + " has negative feature index");
        }
        if (!feature_names_.empty() &&
            static_cast<std::size_t>(n.feature_index) >= feature_names_.size()) {
            throw ValidationError("node " + std::to_string(n.id) + " feature index " +
                                  std::to_string(n.feature_index) + " outside schema dimension " +
                                  std::to_string(feature_names_.size()));
        }
    }
}

const SplitNode& DecisionTree::split(int id) const {
    auto it = split_index_of_.find(id);
    if (it == split_index_of_.end()) {
        throw InvalidArgumentError("no split node with id " + std::to_string(id));
    }
    return nodes_[it->second];
}

const Leaf& DecisionTree::leaf(int id) const {
    auto it = leaf_index_of_.find(id);
    if (it == leaf_index_of_.end()) {
        throw InvalidArgumentError("no leaf with id " + std::to_string(id));
    }
    return leaves_[it->second];
}

std::size_t DecisionTree::min_dimension() const {
    std::size_t d = 0;
    for (const auto& n : nodes_) d = std::max(d, static_cast<std::size_t>(n.feature_index) + 1);
    return d;
}

int DecisionTree::route(std::span<const double> row) const {
    if (row.size() < min_dimension()) {
        throw InvalidArgumentError("row dimension " + std::to_string(row.size()) +
                                   " below model dimension " + std::to_string(min_dimension()));
    }
    int id = root_id_;
    while (is_split(id)) {
        const SplitNode& s = split(id);
        id = row[static_cast<std::size_t>(s.feature_index)] <= s.threshold ? s.left_child_id
                                                                           : s.right_child_id;
    }
    return id;
}

double DecisionTree::predict(std::span<const double> row) const { return leaf(route(row)).value; }

std::vector<int> DecisionTree::split_preorder() const {
    std::vector<int> order;
    order.reserve(nodes_.size());
    std::vector<int> stack{root_id_};
    while (!stack.empty()) {
        int id = stack.back();
        stack.pop_back();
        if (!is_split(id)) continue;
        const SplitNode& s = split(id);
        order.push_back(id);
        stack.push_back(s.right_child_id);
        stack.push_back(s.left_child_id);
    }
    return order;
}

std::vector<int> DecisionTree::leaf_preorder() const {
    std::vector<int> order;
    order.reserve(leaves_.size());
    std::vector<int> stack{root_id_};
    while (!stack.empty()) {
        int id = stack.back();
        stack.pop_back();
        if (is_leaf(id)) {
            order.push_back(id);
            continue;
        }
        const SplitNode& s = split(id);
        stack.push_back(s.right_child_id);
        stack.push_back(s.left_child_id);
    }
    return order;
}

double TreeEnsemble::predict(std::span<const double> row) const {
    if (trees.empty()) throw InvalidArgumentError("ensemble has no trees");
    double acc = 0.0;
    if (aggregation == Aggregation::Mean) {
        for (const auto& t : trees) acc += t.predict(row);
        return base_score + acc / static_cast<double>(trees.size());
    }
    for (std::size_t i = 0; i < trees.size(); ++i) acc += tree_weights[i] * trees[i].predict(row);
    return base_score + acc;
}

std::size_t TreeEnsemble::min_dimension() const {
    std::size_t d = 0;
    for (const auto& t : trees) d = std::max(d, t.min_dimension());
    return d;
}

void TreeEnsemble::validate() const {
    if (trees.empty()) throw ValidationError("ensemble has no trees");
    if (tree_weights.size() != trees.size()) {
        throw ValidationError("weights length " + std::to_string(tree_weights.size()) +
                              " != tree count " + std::to_string(trees.size()));
    }
    if (aggregation == Aggregation::Mean) {
        for (double w : tree_weights) {
            if (w != tree_weights.front()) {
                throw ValidationError("mean aggregation requires all weights equal");
            }
        }
    }
}

}  // namespace shapshift
