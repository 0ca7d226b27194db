#pragma once

#include <string>
#include <variant>

#include "shapshift/tree.hpp"

namespace shapshift {

using Model = std::variant<DecisionTree, TreeEnsemble>;

// Bit-exact JSON interchange for trees and ensembles; reals are written
// with round-trip precision. Import validates structure (single root,
// no cycles, no orphans, no unknown fields).
Model import_model_json(const std::string& path);
Model model_from_json_text(const std::string& text, const std::string& origin = "<text>");

void export_model_json(const Model& model, const std::string& path);
std::string model_to_json_text(const Model& model);

// Prediction regardless of flavor.
double model_predict(const Model& model, std::span<const double> row);
std::size_t model_min_dimension(const Model& model);

}  // namespace shapshift
