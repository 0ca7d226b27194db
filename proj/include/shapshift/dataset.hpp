#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shapshift/schema.hpp"

namespace shapshift {

// Immutable columnar table of feature values. Categoricals are one-hot
// expanded at load, so rows are plain numeric vectors and every split
// test downstream is "x_f <= t". One Dataset per distribution (P, Q).
class Dataset {
public:
    Dataset() = default;
    Dataset(FeatureSchema schema, std::vector<double> values, std::size_t n_rows,
            std::optional<std::vector<double>> predictions = std::nullopt,
            std::optional<std::vector<double>> labels = std::nullopt);

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return column_names_.size(); }

    std::span<const double> row(std::size_t i) const {
        return {values_.data() + i * n_cols(), n_cols()};
    }
    double at(std::size_t row, std::size_t col) const { return values_[row * n_cols() + col]; }

    const FeatureSchema& schema() const { return schema_; }
    const std::vector<std::string>& column_names() const { return column_names_; }
    std::size_t column_index(const std::string& expanded_name) const;

    bool has_predictions() const { return predictions_.has_value(); }
    const std::vector<double>& predictions() const;
    bool has_labels() const { return labels_.has_value(); }
    const std::vector<double>& labels() const;

    Dataset with_predictions(std::vector<double> predictions) const;

private:
    FeatureSchema schema_;
    std::vector<std::string> column_names_;
    std::vector<double> values_;  // row-major, n_rows x n_cols
    std::size_t n_rows_ = 0;
    std::optional<std::vector<double>> predictions_;
    std::optional<std::vector<double>> labels_;
};

// Loads a UTF-8, comma-separated CSV with one header row. The header must
// contain every schema feature plus the optional prediction/label columns;
// extra columns are ignored. Categorical cells must be declared categories.
// Numeric cells, predictions and labels must parse as finite reals.
Dataset load_csv(const std::string& path, const FeatureSchema& schema,
                 const std::optional<std::string>& prediction_column_name = std::nullopt,
                 const std::optional<std::string>& label_column_name = std::nullopt);

// Same parser over in-memory text, for tests and generated data.
Dataset load_csv_text(const std::string& text, const FeatureSchema& schema,
                      const std::optional<std::string>& prediction_column_name = std::nullopt,
                      const std::optional<std::string>& label_column_name = std::nullopt,
                      const std::string& origin = "<text>");

// Splits rows on a numeric feature: first result holds rows with
// value <= threshold, second the rest. With drop_feature the partitioning
// column is removed from both outputs. Errors if either side is empty.
std::pair<Dataset, Dataset> partition_by_threshold(const Dataset& data, const std::string& feature,
                                                   double threshold, bool drop_feature);

}  // namespace shapshift
