#include "growth.hpp"

#include <algorithm>
#include <cmath>

#include "shapshift/errors.hpp"

namespace shapshift::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct SideStats {
    std::size_t n = 0;
    std::size_t n_p = 0;
    std::size_t n_q = 0;
    std::size_t n_class1 = 0;
    double sum = 0.0;
    double sum_sq = 0.0;
    double sum_p = 0.0;
    double sum_q = 0.0;

    void add(double y, std::uint8_t origin) {
        ++n;
        sum += y;
        sum_sq += y * y;
        if (y >= 0.5) ++n_class1;
        if (origin == 0) {
            ++n_p;
            sum_p += y;
        } else {
            ++n_q;
            sum_q += y;
        }
    }

    SideStats minus(const SideStats& other) const {
        SideStats r;
        r.n = n - other.n;
        r.n_p = n_p - other.n_p;
        r.n_q = n_q - other.n_q;
        r.n_class1 = n_class1 - other.n_class1;
        r.sum = sum - other.sum;
        r.sum_sq = sum_sq - other.sum_sq;
        r.sum_p = sum_p - other.sum_p;
        r.sum_q = sum_q - other.sum_q;
        return r;
    }
};

double impurity_of(const SideStats& s, ImpurityKind kind, std::size_t total_p,
                   std::size_t total_q) {
    switch (kind) {
        case ImpurityKind::Variance: {
            if (s.n == 0) return 0.0;
            const double sse = s.sum_sq - (s.sum * s.sum) / static_cast<double>(s.n);
            return std::max(0.0, sse);
        }
        case ImpurityKind::Gini: {
            // Pairwise disagreement count over labels binarized at 0.5.
            const double n1 = static_cast<double>(s.n_class1);
            const double n0 = static_cast<double>(s.n - s.n_class1);
            return 2.0 * n0 * n1;
        }
        case ImpurityKind::Shift: {
            if (s.n_p == 0 || s.n_q == 0) return kInf;  // inadmissible side
            const double mass = static_cast<double>(s.n_p) / static_cast<double>(total_p) +
                                static_cast<double>(s.n_q) / static_cast<double>(total_q);
            const double mean_p = s.sum_p / static_cast<double>(s.n_p);
            const double mean_q = s.sum_q / static_cast<double>(s.n_q);
            return mass * std::abs(mean_p - mean_q);
        }
    }
    return 0.0;
}

struct SplitChoice {
    bool found = false;
    double gain = -kInf;
    std::size_t feature = 0;
    double threshold = 0.0;
};

struct PendingLeaf {
    std::vector<std::size_t> rows;
    SideStats stats;
    SplitChoice best;
    int build_index = -1;      // index into the build-node arena
    std::size_t created = 0;   // creation order, tie-break
};

struct BuildNode {
    bool is_leaf = true;
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t state = master ^ (0x9E3779B97F4A7C15ULL * (index + 1));
    return splitmix64(state);
}

std::uint64_t next_rand(std::uint64_t& state) { return splitmix64(state); }

DecisionTree grow_best_first(const GrowthInputs& inputs, const GrowthConfig& config,
                             const std::vector<std::string>& feature_names) {
    if (inputs.n_rows == 0) throw InvalidArgumentError("cannot grow a tree from zero rows");
    if (inputs.targets.size() != inputs.n_rows) {
        throw InvalidArgumentError("targets length does not match row count");
    }
    if (config.max_leaves < 2) throw InvalidArgumentError("max_leaves must be >= 2");
    if (config.impurity == ImpurityKind::Shift && (inputs.total_p == 0 || inputs.total_q == 0)) {
        throw InvalidArgumentError("shift impurity requires nonempty P and Q samples");
    }

    const std::size_t d = inputs.n_features;
    std::uint64_t rng_state = config.seed;

    auto origin_of = [&](std::size_t row) -> std::uint8_t {
        return inputs.origins.empty() ? 0 : inputs.origins[row];
    };

    // Feature set scanned for one leaf; subsampled without replacement,
    // then sorted so the lowest-feature-index tie-break applies.
    std::vector<std::size_t> feature_pool(d);
    auto pick_features = [&]() {
        for (std::size_t i = 0; i < d; ++i) feature_pool[i] = i;
        if (config.feature_subsample >= 1.0) return std::size_t(d);
        auto k = static_cast<std::size_t>(
            std::ceil(config.feature_subsample * static_cast<double>(d)));
        k = std::clamp<std::size_t>(k, 1, d);
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + splitmix64(rng_state) % (d - i);
            std::swap(feature_pool[i], feature_pool[j]);
        }
        std::sort(feature_pool.begin(), feature_pool.begin() + static_cast<std::ptrdiff_t>(k));
        return k;
    };

    std::vector<std::pair<double, std::size_t>> sorted;  // (value, row), reused per feature

    auto evaluate_leaf = [&](PendingLeaf& leaf) {
        leaf.best = SplitChoice{};
        const std::size_t n = leaf.rows.size();
        if (n < 2 * config.min_samples_per_side || n < 2) return;

        // Constant targets have zero impurity under every kind; no split
        // can strictly decrease it.
        double y_min = inputs.targets[leaf.rows[0]], y_max = y_min;
        for (std::size_t r : leaf.rows) {
            y_min = std::min(y_min, inputs.targets[r]);
            y_max = std::max(y_max, inputs.targets[r]);
        }
        if (y_min == y_max) return;

        const double parent_impurity =
            impurity_of(leaf.stats, config.impurity, inputs.total_p, inputs.total_q);
        if (std::isinf(parent_impurity)) return;

        const std::size_t k = pick_features();
        for (std::size_t fi = 0; fi < k; ++fi) {
            const std::size_t feature = feature_pool[fi];
            sorted.clear();
            sorted.reserve(n);
            for (std::size_t r : leaf.rows) sorted.emplace_back(inputs.value(r, feature), r);
            std::sort(sorted.begin(), sorted.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            if (sorted.front().first == sorted.back().first) continue;

            SideStats left;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const std::size_t row = sorted[i].second;
                left.add(inputs.targets[row], origin_of(row));
                const double lo = sorted[i].first;
                const double hi = sorted[i + 1].first;
                if (!(hi > lo)) continue;

                const std::size_t n_left = i + 1;
                const std::size_t n_right = n - n_left;
                if (n_left < config.min_samples_per_side ||
                    n_right < config.min_samples_per_side) {
                    continue;
                }
                const SideStats right = leaf.stats.minus(left);
                if (config.min_per_distribution > 0) {
                    if (left.n_p < config.min_per_distribution ||
                        left.n_q < config.min_per_distribution ||
                        right.n_p < config.min_per_distribution ||
                        right.n_q < config.min_per_distribution) {
                        continue;
                    }
                }
                const double child_total =
                    impurity_of(left, config.impurity, inputs.total_p, inputs.total_q) +
                    impurity_of(right, config.impurity, inputs.total_p, inputs.total_q);
                if (std::isinf(child_total)) continue;
                const double gain = parent_impurity - child_total;
                if (gain <= 0.0) continue;
                if (gain > leaf.best.gain) {
                    double mid = lo + (hi - lo) / 2.0;
                    if (!(mid < hi)) mid = lo;  // keep the <= routing exact
                    leaf.best = {true, gain, feature, mid};
                }
            }
        }
    };

    std::vector<BuildNode> arena;
    std::vector<PendingLeaf> pending;
    std::size_t creation_counter = 0;

    auto make_leaf = [&](std::vector<std::size_t> rows) {
        PendingLeaf leaf;
        leaf.rows = std::move(rows);
        for (std::size_t r : leaf.rows) leaf.stats.add(inputs.targets[r], origin_of(r));
        leaf.created = creation_counter++;
        BuildNode node;
        node.is_leaf = true;
        node.value = leaf.stats.n > 0 ? leaf.stats.sum / static_cast<double>(leaf.stats.n) : 0.0;
        leaf.build_index = static_cast<int>(arena.size());
        arena.push_back(node);
        evaluate_leaf(leaf);
        pending.push_back(std::move(leaf));
    };

    std::vector<std::size_t> all_rows(inputs.n_rows);
    for (std::size_t i = 0; i < inputs.n_rows; ++i) all_rows[i] = i;
    make_leaf(std::move(all_rows));

    std::size_t leaf_count = 1;
    while (leaf_count < static_cast<std::size_t>(config.max_leaves)) {
        // Best-first: the splittable leaf with the largest gain, earliest
        // created on ties.
        std::ptrdiff_t pick = -1;
        for (std::size_t i = 0; i < pending.size(); ++i) {
            if (!pending[i].best.found) continue;
            if (pick < 0 || pending[i].best.gain > pending[pick].best.gain ||
                (pending[i].best.gain == pending[pick].best.gain &&
                 pending[i].created < pending[pick].created)) {
                pick = static_cast<std::ptrdiff_t>(i);
            }
        }
        if (pick < 0) break;

        PendingLeaf chosen = std::move(pending[static_cast<std::size_t>(pick)]);
        pending.erase(pending.begin() + pick);

        std::vector<std::size_t> left_rows, right_rows;
        left_rows.reserve(chosen.rows.size());
        for (std::size_t r : chosen.rows) {
            (inputs.value(r, chosen.best.feature) <= chosen.best.threshold ? left_rows
                                                                           : right_rows)
                .push_back(r);
        }

        const auto parent = static_cast<std::size_t>(chosen.build_index);
        arena[parent].is_leaf = false;
        arena[parent].feature = static_cast<int>(chosen.best.feature);
        arena[parent].threshold = chosen.best.threshold;
        make_leaf(std::move(left_rows));  // push_back may reallocate the arena
        const int left_index = pending.back().build_index;
        make_leaf(std::move(right_rows));
        const int right_index = pending.back().build_index;
        arena[parent].left = left_index;
        arena[parent].right = right_index;
        ++leaf_count;
    }

    // Assign preorder ids and emit the immutable tree.
    std::vector<SplitNode> splits;
    std::vector<Leaf> leaves;
    int next_id = 0;
    std::function<int(int)> emit = [&](int build_index) -> int {
        const BuildNode& node = arena[static_cast<std::size_t>(build_index)];
        const int id = next_id++;
        if (node.is_leaf) {
            leaves.push_back({id, node.value});
            return id;
        }
        splits.push_back({id, node.feature, node.threshold, -1, -1});
        const std::size_t slot = splits.size() - 1;
        splits[slot].left_child_id = emit(node.left);
        splits[slot].right_child_id = emit(node.right);
        return id;
    };
    emit(0);

    return DecisionTree(std::move(splits), std::move(leaves), 0, feature_names);
}

}  // namespace shapshift::detail
