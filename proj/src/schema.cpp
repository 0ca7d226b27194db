#include "shapshift/schema.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "shapshift/errors.hpp"

namespace shapshift {

FeatureSchema::FeatureSchema(std::vector<Feature> features) : features_(std::move(features)) {
    validate();
}

void FeatureSchema::validate() const {
    std::unordered_set<std::string> seen;
    for (const auto& f : features_) {
        if (f.name.empty()) throw SchemaError("feature with empty name");
        if (!seen.insert(f.name).second) {
            throw SchemaError("duplicate feature name '" + f.name + "'");
        }
        if (f.kind == FeatureKind::Categorical) {
            if (f.categories.empty()) {
                throw SchemaError("categorical feature '" + f.name + "' declares no categories");
            }
            std::unordered_set<std::string> cats;
            for (const auto& c : f.categories) {
                if (!cats.insert(c).second) {
                    throw SchemaError("feature '" + f.name + "' lists duplicate category '" + c + "'");
                }
            }
        } else if (!f.categories.empty()) {
            throw SchemaError("numeric feature '" + f.name + "' must not list categories");
        }
    }
}

FeatureSchema FeatureSchema::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open schema file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

FeatureSchema FeatureSchema::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid schema JSON: ") + e.what());
    }
    if (!j.is_array()) throw ParseError("schema JSON must be an array of features");
    std::vector<Feature> features;
    for (const auto& item : j) {
        if (!item.is_object()) throw ParseError("schema entry must be an object");
        Feature f;
        if (!item.contains("name") || !item["name"].is_string()) {
            throw ParseError("schema entry missing string field 'name'");
        }
        f.name = item["name"].get<std::string>();
        std::string kind = item.value("kind", std::string("numeric"));
        if (kind == "numeric") {
            f.kind = FeatureKind::Numeric;
        } else if (kind == "categorical") {
            f.kind = FeatureKind::Categorical;
            if (!item.contains("categories") || !item["categories"].is_array()) {
                throw ParseError("categorical feature '" + f.name + "' needs a 'categories' array");
            }
            for (const auto& c : item["categories"]) f.categories.push_back(c.get<std::string>());
        } else {
            throw ParseError("feature '" + f.name + "' has unknown kind '" + kind + "'");
        }
        features.push_back(std::move(f));
    }
    return FeatureSchema(std::move(features));
}

bool FeatureSchema::has_feature(const std::string& name) const {
    for (const auto& f : features_) {
        if (f.name == name) return true;
    }
    return false;
}

const Feature& FeatureSchema::feature(const std::string& name) const {
    for (const auto& f : features_) {
        if (f.name == name) return f;
    }
    throw SchemaError("unknown feature '" + name + "'");
}

std::vector<std::string> FeatureSchema::expanded_column_names() const {
    std::vector<std::string> names;
    for (const auto& f : features_) {
        if (f.kind == FeatureKind::Numeric) {
            names.push_back(f.name);
        } else {
            for (const auto& c : f.categories) names.push_back(f.name + "=" + c);
        }
    }
    return names;
}

std::size_t FeatureSchema::expanded_dimension() const {
    std::size_t d = 0;
    for (const auto& f : features_) {
        d += f.kind == FeatureKind::Numeric ? 1 : f.categories.size();
    }
    return d;
}

FeatureSchema FeatureSchema::without_feature(const std::string& name) const {
    std::vector<Feature> kept;
    bool found = false;
    for (const auto& f : features_) {
        if (f.name == name) {
            found = true;
        } else {
            kept.push_back(f);
        }
    }
    if (!found) throw SchemaError("unknown feature '" + name + "'");
    return FeatureSchema(std::move(kept));
}

std::vector<double> scalarise(const RawOutputs& raw, const Scalariser& scalariser) {
    if (scalariser.mode == Scalariser::Mode::Identity) {
        if (const auto* reals = std::get_if<std::vector<double>>(&raw)) return *reals;
        // Identity over labels only makes sense if the labels are numbers.
        const auto& labels = std::get<std::vector<std::string>>(raw);
        std::vector<double> out;
        out.reserve(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            try {
                std::size_t pos = 0;
                double v = std::stod(labels[i], &pos);
                if (pos != labels[i].size()) throw std::invalid_argument("trailing");
                out.push_back(v);
            } catch (const std::exception&) {
                throw InvalidArgumentError("identity scalariser cannot map non-numeric label '" +
                                           labels[i] + "' at index " + std::to_string(i));
            }
        }
        return out;
    }

    // ClassIndicator
    if (scalariser.target_classes.empty()) {
        throw InvalidArgumentError("class_indicator scalariser requires non-empty target_classes");
    }
    const auto* labels = std::get_if<std::vector<std::string>>(&raw);
    if (labels == nullptr) {
        throw InvalidArgumentError("class_indicator scalariser requires label-valued outputs");
    }
    std::vector<double> out;
    out.reserve(labels->size());
    for (const auto& label : *labels) {
        out.push_back(scalariser.target_classes.count(label) ? 1.0 : 0.0);
    }
    return out;
}

}  // namespace shapshift
