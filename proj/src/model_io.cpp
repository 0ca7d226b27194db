#include "shapshift/model_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "shapshift/errors.hpp"

namespace shapshift {

namespace {

using nlohmann::json;

void reject_unknown_fields(const json& obj, const std::set<std::string>& allowed,
                           const std::string& context) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ValidationError("unknown field '" + it.key() + "' in " + context);
        }
    }
}

json tree_to_json(const DecisionTree& tree) {
    json nodes = json::array();
    for (const auto& n : tree.nodes()) {
        nodes.push_back({{"id", n.id},
                         {"feature", n.feature_index},
                         {"threshold", n.threshold},
                         {"left", n.left_child_id},
                         {"right", n.right_child_id}});
    }
    json leaves = json::array();
    for (const auto& l : tree.leaves()) leaves.push_back({{"id", l.id}, {"value", l.value}});
    return {{"nodes", std::move(nodes)}, {"leaves", std::move(leaves)}, {"root", tree.root_id()}};
}

DecisionTree tree_from_json(const json& jt, const std::vector<std::string>& feature_names) {
    if (!jt.is_object()) throw ValidationError("tree entry must be an object");
    reject_unknown_fields(jt, {"nodes", "leaves", "root"}, "tree");
    if (!jt.contains("leaves") || !jt.contains("root")) {
        throw ValidationError("tree entry needs 'leaves' and 'root'");
    }

    std::vector<SplitNode> nodes;
    if (jt.contains("nodes")) {
        for (const auto& jn : jt["nodes"]) {
            reject_unknown_fields(jn, {"id", "feature", "threshold", "left", "right"},
                                  "split node");
            SplitNode n;
            n.id = jn.at("id").get<int>();
            n.feature_index = jn.at("feature").get<int>();
            n.threshold = jn.at("threshold").get<double>();
            n.left_child_id = jn.at("left").get<int>();
            n.right_child_id = jn.at("right").get<int>();
            nodes.push_back(n);
        }
    }
    std::vector<Leaf> leaves;
    for (const auto& jl : jt["leaves"]) {
        reject_unknown_fields(jl, {"id", "value"}, "leaf");
        leaves.push_back({jl.at("id").get<int>(), jl.at("value").get<double>()});
    }
    return DecisionTree(std::move(nodes), std::move(leaves), jt.at("root").get<int>(),
                        feature_names);
}

std::string aggregation_name(Aggregation a) {
    return a == Aggregation::Mean ? "mean" : "weighted_sum";
}

std::string kind_name(EnsembleKind k) {
    switch (k) {
        case EnsembleKind::RandomForest: return "random_forest";
        case EnsembleKind::GradientBoosted: return "gradient_boosted";
        case EnsembleKind::Other: break;
    }
    return "other";
}

}  // namespace

std::string model_to_json_text(const Model& model) {
    json j;
    if (const auto* tree = std::get_if<DecisionTree>(&model)) {
        j["kind"] = "tree";
        j["feature_names"] = tree->feature_names();
        j["trees"] = json::array({tree_to_json(*tree)});
    } else {
        const auto& ens = std::get<TreeEnsemble>(model);
        j["kind"] = "ensemble";
        j["feature_names"] = ens.feature_names;
        json trees = json::array();
        for (const auto& t : ens.trees) trees.push_back(tree_to_json(t));
        j["trees"] = std::move(trees);
        j["weights"] = ens.tree_weights;
        j["base_score"] = ens.base_score;
        j["aggregation"] = aggregation_name(ens.aggregation);
        j["ensemble_kind"] = kind_name(ens.kind);
    }
    return j.dump(2);
}

Model model_from_json_text(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError("invalid model JSON in '" + origin + "': " + e.what());
    }
    if (!j.is_object()) throw ValidationError("model JSON must be an object");
    reject_unknown_fields(
        j, {"kind", "feature_names", "trees", "weights", "base_score", "aggregation",
            "ensemble_kind"},
        "model");

    const std::string kind = j.value("kind", std::string());
    std::vector<std::string> feature_names;
    if (j.contains("feature_names")) {
        feature_names = j["feature_names"].get<std::vector<std::string>>();
    }
    if (!j.contains("trees") || !j["trees"].is_array() || j["trees"].empty()) {
        throw ValidationError("model JSON needs a nonempty 'trees' array");
    }

    if (kind == "tree") {
        if (j["trees"].size() != 1) {
            throw ValidationError("kind 'tree' requires exactly one tree entry");
        }
        return tree_from_json(j["trees"][0], feature_names);
    }
    if (kind != "ensemble") {
        throw ValidationError("model kind must be 'tree' or 'ensemble', got '" + kind + "'");
    }

    TreeEnsemble ens;
    ens.feature_names = feature_names;
    for (const auto& jt : j["trees"]) ens.trees.push_back(tree_from_json(jt, feature_names));
    if (j.contains("weights")) {
        ens.tree_weights = j["weights"].get<std::vector<double>>();
    } else {
        ens.tree_weights.assign(ens.trees.size(), 1.0);
    }
    ens.base_score = j.value("base_score", 0.0);
    const std::string agg = j.value("aggregation", std::string("mean"));
    if (agg == "mean") {
        ens.aggregation = Aggregation::Mean;
    } else if (agg == "weighted_sum") {
        ens.aggregation = Aggregation::WeightedSum;
    } else {
        throw ValidationError("unknown aggregation '" + agg + "'");
    }
    const std::string ek = j.value("ensemble_kind", std::string("other"));
    if (ek == "random_forest") {
        ens.kind = EnsembleKind::RandomForest;
    } else if (ek == "gradient_boosted") {
        ens.kind = EnsembleKind::GradientBoosted;
    } else if (ek == "other") {
        ens.kind = EnsembleKind::Other;
    } else {
        throw ValidationError("unknown ensemble_kind '" + ek + "'");
    }
    ens.validate();
    return ens;
}

Model import_model_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return model_from_json_text(buf.str(), path);
}

void export_model_json(const Model& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    out << model_to_json_text(model) << "\n";
}

double model_predict(const Model& model, std::span<const double> row) {
    if (const auto* tree = std::get_if<DecisionTree>(&model)) return tree->predict(row);
    return std::get<TreeEnsemble>(model).predict(row);
}

std::size_t model_min_dimension(const Model& model) {
    if (const auto* tree = std::get_if<DecisionTree>(&model)) return tree->min_dimension();
    return std::get<TreeEnsemble>(model).min_dimension();
}

}  // namespace shapshift
