#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace shapshift {

// Binary threshold-split tree. The test at a split node is
// "x[feature_index] <= threshold"; true routes to the left child.
// Split nodes and leaves share one id space.
struct SplitNode {
    int id = -1;
    int feature_index = -1;
    double threshold = 0.0;
    int left_child_id = -1;
    int right_child_id = -1;
};

struct Leaf {
    int id = -1;
    double value = 0.0;
};

class DecisionTree {
public:
    DecisionTree() = default;
    DecisionTree(std::vector<SplitNode> nodes, std::vector<Leaf> leaves, int root_id,
                 std::vector<std::string> feature_names = {});

    const std::vector<SplitNode>& nodes() const { return nodes_; }
    const std::vector<Leaf>& leaves() const { return leaves_; }
    int root_id() const { return root_id_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }

    bool is_split(int id) const { return split_index_of_.count(id) > 0; }
    bool is_leaf(int id) const { return leaf_index_of_.count(id) > 0; }
    const SplitNode& split(int id) const;
    const Leaf& leaf(int id) const;

    std::size_t n_leaves() const { return leaves_.size(); }
    std::size_t n_splits() const { return nodes_.size(); }

    // Highest feature index referenced by any split, plus one.
    std::size_t min_dimension() const;

    double predict(std::span<const double> row) const;
    // Id of the leaf reached by routing the row from the root.
    int route(std::span<const double> row) const;

    // Split node ids in preorder (root, left subtree, right subtree).
    std::vector<int> split_preorder() const;
    // Leaf ids in preorder.
    std::vector<int> leaf_preorder() const;

private:
    void validate() const;

    std::vector<SplitNode> nodes_;
    std::vector<Leaf> leaves_;
    int root_id_ = -1;
    std::vector<std::string> feature_names_;
    std::unordered_map<int, std::size_t> split_index_of_;
    std::unordered_map<int, std::size_t> leaf_index_of_;
};

enum class Aggregation { Mean, WeightedSum };
enum class EnsembleKind { RandomForest, GradientBoosted, Other };

// Ordered list of trees. Mean aggregation averages member predictions;
// weighted_sum adds base_score + sum(w_i * tree_i(x)). Ordering carries
// the boosting sequence.
struct TreeEnsemble {
    std::vector<DecisionTree> trees;
    std::vector<double> tree_weights;
    double base_score = 0.0;
    Aggregation aggregation = Aggregation::Mean;
    EnsembleKind kind = EnsembleKind::Other;
    std::vector<std::string> feature_names;

    double predict(std::span<const double> row) const;
    std::size_t min_dimension() const;
    void validate() const;
};

// Predictions for every row of a dataset-like value matrix.
template <typename Model, typename Rows>
std::vector<double> predict_rows(const Model& model, const Rows& data) {
    std::vector<double> out;
    out.reserve(data.n_rows());
    for (std::size_t i = 0; i < data.n_rows(); ++i) out.push_back(model.predict(data.row(i)));
    return out;
}

}  // namespace shapshift
