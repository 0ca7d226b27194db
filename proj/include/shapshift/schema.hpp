#pragma once

#include <set>
#include <string>
#include <variant>
#include <vector>

namespace shapshift {

enum class FeatureKind { Numeric, Categorical };

struct Feature {
    std::string name;
    FeatureKind kind = FeatureKind::Numeric;
    std::vector<std::string> categories;  // categorical only, order fixed
};

// Ordered feature declarations; order is the column order of the dataset.
// Categorical features are one-hot expanded at load so everything
// downstream sees only numeric threshold tests.
class FeatureSchema {
public:
    FeatureSchema() = default;
    explicit FeatureSchema(std::vector<Feature> features);

    // Parses a JSON array of {name, kind, categories?}.
    static FeatureSchema from_json_file(const std::string& path);
    static FeatureSchema from_json_text(const std::string& text);

    const std::vector<Feature>& features() const { return features_; }
    std::size_t size() const { return features_.size(); }
    bool has_feature(const std::string& name) const;
    const Feature& feature(const std::string& name) const;

    // Column names after one-hot expansion: numeric features keep their
    // name, categorical features become "name=category" per category.
    std::vector<std::string> expanded_column_names() const;
    std::size_t expanded_dimension() const;

    FeatureSchema without_feature(const std::string& name) const;

private:
    void validate() const;
    std::vector<Feature> features_;
};

// Maps raw model outputs to reals so a mean prediction is defined.
// identity passes reals through; class_indicator maps labels to
// 1.0 when the label is in target_classes and 0.0 otherwise.
struct Scalariser {
    enum class Mode { Identity, ClassIndicator };
    Mode mode = Mode::Identity;
    std::set<std::string> target_classes;  // required for ClassIndicator
};

// Raw model outputs: either reals or class labels.
using RawOutputs = std::variant<std::vector<double>, std::vector<std::string>>;

std::vector<double> scalarise(const RawOutputs& raw, const Scalariser& scalariser);

}  // namespace shapshift
