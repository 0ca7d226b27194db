#pragma once

#include <optional>
#include <string>
#include <vector>

#include "shapshift/ensemble_explainer.hpp"
#include "shapshift/shapley.hpp"

namespace shapshift {

// Versioned JSON rendering of an explanation. Every number shown in the
// SVG chart also appears here.
std::string explanation_to_json_text(const Explanation& explanation,
                                     std::optional<double> timing_ms = std::nullopt,
                                     const std::vector<TreeScanEntry>* scan = nullptr);

// Static horizontal bar chart of the SVs: 800 x (40 * n_bars) px, one row
// per factor plus one for LeafMeans when present, diverging colors by SV
// sign, PercentUnexplained annotated. No external plotting dependency.
std::string explanation_to_svg(const Explanation& explanation);

}  // namespace shapshift
