#pragma once

#include <optional>
#include <string>
#include <vector>

#include "shapshift/shapley.hpp"

namespace shapshift {

struct EnsembleExplainConfig {
    std::optional<std::size_t> max_trees;  // scan only the first k trees
    bool parallel = true;
    LeafFillPolicy fill_policy = LeafFillPolicy::OtherDistributionMean;
    std::size_t exact_limit = 20;
};

struct TreeScanEntry {
    std::size_t tree_index = 0;
    bool failed = false;
    std::string failure_reason;                  // set iff failed
    std::optional<double> percent_unexplained;   // nullopt when failed or shift ~ 0
    std::optional<double> leafmeans_sv;
};

struct EnsembleExplanation {
    Explanation best;
    std::size_t best_tree_index = 0;
    std::vector<TreeScanEntry> scan;
};

// SV analysis of one member tree against the full ensemble's prediction
// shift: the tree's conditionals plus the LeafMeans factor, with leafwise
// means taken over the whole ensemble's predictions.
Explanation explain_tree_in_ensemble(const TreeEnsemble& ensemble, std::size_t tree_index,
                                     const Dataset& data_p, const Dataset& data_q,
                                     const EnsembleExplainConfig& config = {});

// Runs the per-tree analysis across the ensemble (first max_trees only,
// when set) and selects the tree with the smallest PercentUnexplained;
// ties break toward the lower index. When the shift is too small for
// PercentUnexplained to be defined, selection minimises |phi_LeafMeans|.
// Trees with undefined conditionals are marked failed in the scan.
EnsembleExplanation explain_ensemble(const TreeEnsemble& ensemble, const Dataset& data_p,
                                     const Dataset& data_q,
                                     const EnsembleExplainConfig& config = {});

}  // namespace shapshift
