#pragma once

// Internal best-first tree growth engine shared by fit_tree and
// grow_surrogate. Not part of the public API.

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "shapshift/learner.hpp"
#include "shapshift/tree.hpp"

namespace shapshift::detail {

// One pooled training row. origin distinguishes the P (0) and Q (1)
// samples when growing surrogates; plain training uses origin 0.
struct GrowthInputs {
    // value(row, feature)
    std::function<double(std::size_t, std::size_t)> value;
    std::size_t n_rows = 0;
    std::size_t n_features = 0;
    std::vector<double> targets;
    std::vector<std::uint8_t> origins;  // empty means all 0
    std::size_t total_p = 0;            // |P| (shift impurity denominators)
    std::size_t total_q = 0;
};

struct GrowthConfig {
    int max_leaves = 8;
    ImpurityKind impurity = ImpurityKind::Variance;
    std::size_t min_samples_per_side = 1;
    // Minimum rows from each distribution on each side; 0 disables the
    // per-distribution constraint.
    std::size_t min_per_distribution = 0;
    double feature_subsample = 1.0;
    std::uint64_t seed = 0;
};

DecisionTree grow_best_first(const GrowthInputs& inputs, const GrowthConfig& config,
                             const std::vector<std::string>& feature_names);

// Deterministic per-task seed derivation (splitmix64 of seed + index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// splitmix64 step: advances state and returns the next 64-bit draw.
std::uint64_t next_rand(std::uint64_t& state);

// Deterministic uniform double in [0, 1) from a raw 64-bit draw.
inline double to_unit_double(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace shapshift::detail
