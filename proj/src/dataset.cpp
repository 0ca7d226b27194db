#include "shapshift/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "shapshift/errors.hpp"

namespace shapshift {

Dataset::Dataset(FeatureSchema schema, std::vector<double> values, std::size_t n_rows,
                 std::optional<std::vector<double>> predictions,
                 std::optional<std::vector<double>> labels)
    : schema_(std::move(schema)),
      column_names_(schema_.expanded_column_names()),
      values_(std::move(values)),
      n_rows_(n_rows),
      predictions_(std::move(predictions)),
      labels_(std::move(labels)) {
    if (n_rows_ == 0) throw SchemaError("dataset must contain at least one row");
    if (values_.size() != n_rows_ * column_names_.size()) {
        throw SchemaError("value buffer does not match schema dimension");
    }
    if (predictions_) {
        if (predictions_->size() != n_rows_) {
            throw SchemaError("prediction column length does not match row count");
        }
        for (std::size_t i = 0; i < predictions_->size(); ++i) {
            if (!std::isfinite((*predictions_)[i])) {
                throw SchemaError("prediction column contains non-finite value at row " +
                                  std::to_string(i));
            }
        }
    }
    if (labels_ && labels_->size() != n_rows_) {
        throw SchemaError("label column length does not match row count");
    }
}

std::size_t Dataset::column_index(const std::string& expanded_name) const {
    for (std::size_t i = 0; i < column_names_.size(); ++i) {
        if (column_names_[i] == expanded_name) return i;
    }
    throw SchemaError("unknown column '" + expanded_name + "'");
}

const std::vector<double>& Dataset::predictions() const {
    if (!predictions_) throw InvalidArgumentError("dataset has no prediction column");
    return *predictions_;
}

const std::vector<double>& Dataset::labels() const {
    if (!labels_) throw InvalidArgumentError("dataset has no label column");
    return *labels_;
}

Dataset Dataset::with_predictions(std::vector<double> predictions) const {
    return Dataset(schema_, values_, n_rows_, std::move(predictions), labels_);
}

namespace {

// Minimal CSV splitter: commas, optional double quotes, CR tolerant.
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (ch != '\r') {
            cell.push_back(ch);
        }
    }
    cells.push_back(cell);
    return cells;
}

double parse_real(const std::string& cell, const std::string& column, std::size_t row) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || static_cast<std::size_t>(end - begin) != cell.size()) {
        throw ParseError("non-numeric value '" + cell + "' in column '" + column + "' at row " +
                         std::to_string(row));
    }
    if (!std::isfinite(v)) {
        throw ParseError("non-finite value '" + cell + "' in column '" + column + "' at row " +
                         std::to_string(row));
    }
    return v;
}

}  // namespace

Dataset load_csv_text(const std::string& text, const FeatureSchema& schema,
                      const std::optional<std::string>& prediction_column_name,
                      const std::optional<std::string>& label_column_name,
                      const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty CSV file '" + origin + "'");
    const std::vector<std::string> header = split_csv_line(line);

    std::unordered_map<std::string, std::size_t> column_of;
    for (std::size_t i = 0; i < header.size(); ++i) column_of.emplace(header[i], i);

    auto require_column = [&](const std::string& name) {
        auto it = column_of.find(name);
        if (it == column_of.end()) {
            throw SchemaError("CSV '" + origin + "' is missing column '" + name + "'");
        }
        return it->second;
    };

    struct SourceColumn {
        std::size_t csv_index;
        const Feature* feature;
    };
    std::vector<SourceColumn> sources;
    for (const auto& f : schema.features()) sources.push_back({require_column(f.name), &f});

    std::optional<std::size_t> pred_idx;
    if (prediction_column_name) pred_idx = require_column(*prediction_column_name);
    std::optional<std::size_t> label_idx;
    if (label_column_name) label_idx = require_column(*label_column_name);

    const std::size_t dim = schema.expanded_dimension();
    std::vector<double> values;
    std::vector<double> predictions;
    std::vector<double> labels;
    std::size_t n_rows = 0;

    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() < header.size()) {
            throw ParseError("row " + std::to_string(n_rows) + " has " +
                             std::to_string(cells.size()) + " cells, header has " +
                             std::to_string(header.size()));
        }
        for (const auto& src : sources) {
            const std::string& cell = cells[src.csv_index];
            if (cell.empty()) {
                throw ParseError("missing value in column '" + src.feature->name + "' at row " +
                                 std::to_string(n_rows));
            }
            if (src.feature->kind == FeatureKind::Numeric) {
                values.push_back(parse_real(cell, src.feature->name, n_rows));
            } else {
                const auto& cats = src.feature->categories;
                auto it = std::find(cats.begin(), cats.end(), cell);
                if (it == cats.end()) {
                    throw SchemaError("value '" + cell + "' in column '" + src.feature->name +
                                      "' at row " + std::to_string(n_rows) +
                                      " is not a declared category");
                }
                for (const auto& c : cats) values.push_back(c == cell ? 1.0 : 0.0);
            }
        }
        if (pred_idx) {
            double v = parse_real(cells[*pred_idx], *prediction_column_name, n_rows);
            predictions.push_back(v);
        }
        if (label_idx) labels.push_back(parse_real(cells[*label_idx], *label_column_name, n_rows));
        ++n_rows;
    }
    if (n_rows == 0) throw ParseError("CSV '" + origin + "' contains a header but no rows");
    (void)dim;

    return Dataset(schema, std::move(values), n_rows,
                   pred_idx ? std::optional<std::vector<double>>(std::move(predictions))
                            : std::nullopt,
                   label_idx ? std::optional<std::vector<double>>(std::move(labels))
                             : std::nullopt);
}

Dataset load_csv(const std::string& path, const FeatureSchema& schema,
                 const std::optional<std::string>& prediction_column_name,
                 const std::optional<std::string>& label_column_name) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open CSV file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return load_csv_text(buf.str(), schema, prediction_column_name, label_column_name, path);
}

std::pair<Dataset, Dataset> partition_by_threshold(const Dataset& data, const std::string& feature,
                                                   double threshold, bool drop_feature) {
    const Feature& f = data.schema().feature(feature);
    if (f.kind != FeatureKind::Numeric) {
        throw InvalidArgumentError("partition feature '" + feature + "' must be numeric");
    }
    const std::size_t col = data.column_index(feature);

    std::vector<std::size_t> low, high;
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
        (data.at(i, col) <= threshold ? low : high).push_back(i);
    }
    if (low.empty() || high.empty()) {
        throw InvalidArgumentError("empty partition: threshold " + std::to_string(threshold) +
                                   " leaves no rows on the " + (low.empty() ? "low" : "high") +
                                   " side of '" + feature + "'");
    }

    const FeatureSchema out_schema =
        drop_feature ? data.schema().without_feature(feature) : data.schema();

    auto build = [&](const std::vector<std::size_t>& rows) {
        std::vector<double> values;
        values.reserve(rows.size() * (data.n_cols() - (drop_feature ? 1 : 0)));
        std::optional<std::vector<double>> preds;
        std::optional<std::vector<double>> labels;
        if (data.has_predictions()) preds.emplace();
        if (data.has_labels()) labels.emplace();
        for (std::size_t i : rows) {
            auto r = data.row(i);
            for (std::size_t c = 0; c < r.size(); ++c) {
                if (drop_feature && c == col) continue;
                values.push_back(r[c]);
            }
            if (preds) preds->push_back(data.predictions()[i]);
            if (labels) labels->push_back(data.labels()[i]);
        }
        return Dataset(out_schema, std::move(values), rows.size(), std::move(preds),
                       std::move(labels));
    };

    return {build(low), build(high)};
}

}  // namespace shapshift
