#include "shapshift/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "shapshift/conditionals.hpp"

namespace shapshift {

namespace {

using nlohmann::json;

json path_to_json(const SplitConditional& c) {
    json path = json::array();
    for (const auto& step : c.path) {
        path.push_back({{"feature", step.feature_index},
                        {"threshold", step.threshold},
                        {"branch", step.branch_true}});
    }
    return path;
}

std::string method_name(SvMethod m) {
    return m == SvMethod::Exact ? "exact" : "kernel_shap";
}

// Basic XML escaping for labels.
std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(ch);
        }
    }
    return out;
}

}  // namespace

std::string explanation_to_json_text(const Explanation& explanation,
                                     std::optional<double> timing_ms,
                                     const std::vector<TreeScanEntry>* scan) {
    json j;
    j["version"] = 1;
    j["method"] = method_name(explanation.method);
    j["mu_p"] = explanation.mu_p;
    j["mu_q"] = explanation.mu_q;
    j["shift"] = explanation.shift();

    json factors = json::array();
    for (const auto& f : explanation.factors) {
        factors.push_back({{"label", f.conditional.human_label},
                           {"node_id", f.conditional.node_id},
                           {"feature", f.conditional.feature_index},
                           {"threshold", f.conditional.threshold},
                           {"path", path_to_json(f.conditional)},
                           {"p_prob", f.p_prob},
                           {"q_prob", f.q_prob},
                           {"sv", f.sv}});
    }
    j["factors"] = std::move(factors);

    if (explanation.leafmeans_sv) j["leafmeans_sv"] = *explanation.leafmeans_sv;
    if (explanation.percent_unexplained) {
        j["percent_unexplained"] = *explanation.percent_unexplained;
    } else if (explanation.leafmeans_sv) {
        j["percent_unexplained"] = nullptr;  // undefined (zero shift)
    }
    j["flags"] = explanation.flags;
    if (timing_ms) j["timing_ms"] = *timing_ms;
    if (explanation.seed) j["seed"] = *explanation.seed;
    if (explanation.method == SvMethod::KernelShap) j["budget"] = explanation.kernel_budget;
    if (explanation.tree_index) j["tree_index"] = *explanation.tree_index;
    if (explanation.empirical_mu_p) j["empirical_mu_p"] = *explanation.empirical_mu_p;
    if (explanation.empirical_mu_q) j["empirical_mu_q"] = *explanation.empirical_mu_q;

    if (scan) {
        json rows = json::array();
        for (const auto& entry : *scan) {
            json row;
            row["tree_index"] = entry.tree_index;
            if (entry.failed) {
                row["failed"] = true;
                row["reason"] = entry.failure_reason;
            } else {
                row["failed"] = false;
                if (entry.percent_unexplained) {
                    row["percent_unexplained"] = *entry.percent_unexplained;
                } else {
                    row["percent_unexplained"] = nullptr;
                }
                if (entry.leafmeans_sv) row["leafmeans_sv"] = *entry.leafmeans_sv;
            }
            rows.push_back(std::move(row));
        }
        j["scan"] = std::move(rows);
    }
    return j.dump(2);
}

std::string explanation_to_svg(const Explanation& explanation) {
    struct Bar {
        std::string label;
        double value;
        bool is_leafmeans;
    };
    std::vector<Bar> bars;
    for (const auto& f : explanation.factors) {
        bars.push_back({f.conditional.human_label, f.sv, false});
    }
    if (explanation.leafmeans_sv) {
        bars.push_back({"LeafMeans (unexplained)", *explanation.leafmeans_sv, true});
    }

    const int width = 800;
    const int row_height = 40;
    const int height = row_height * std::max<int>(1, static_cast<int>(bars.size()));
    const int label_width = 330;
    const int plot_left = label_width + 10;
    const int plot_width = width - plot_left - 70;

    double max_abs = 0.0;
    for (const auto& b : bars) max_abs = std::max(max_abs, std::abs(b.value));
    if (max_abs == 0.0) max_abs = 1.0;
    const double zero_x = plot_left + plot_width / 2.0;
    const double scale = (plot_width / 2.0 - 4.0) / max_abs;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "  <rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    svg << "  <line x1=\"" << zero_x << "\" y1=\"0\" x2=\"" << zero_x << "\" y2=\"" << height
        << "\" stroke=\"#999\" stroke-width=\"1\"/>\n";

    for (std::size_t i = 0; i < bars.size(); ++i) {
        const Bar& b = bars[i];
        const int y = static_cast<int>(i) * row_height;
        const double len = std::abs(b.value) * scale;
        const double x = b.value >= 0.0 ? zero_x : zero_x - len;
        const char* color = b.is_leafmeans ? "#777777" : (b.value >= 0.0 ? "#2c7fb8" : "#d95f02");
        svg << "  <text x=\"8\" y=\"" << y + row_height / 2 + 4
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(b.label)
            << "</text>\n";
        svg << "  <rect x=\"" << x << "\" y=\"" << y + 8 << "\" width=\"" << std::max(len, 0.5)
            << "\" height=\"" << row_height - 16 << "\" fill=\"" << color << "\"/>\n";
        const double tx = b.value >= 0.0 ? zero_x + len + 4 : zero_x - len - 4;
        svg << "  <text x=\"" << tx << "\" y=\"" << y + row_height / 2 + 4
            << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\""
            << (b.value >= 0.0 ? "start" : "end") << "\">" << format_real(b.value)
            << "</text>\n";
        if (b.is_leafmeans && explanation.percent_unexplained) {
            svg << "  <text x=\"8\" y=\"" << y + row_height - 4
                << "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#555\">"
                << "PercentUnexplained = " << format_real(*explanation.percent_unexplained)
                << "%</text>\n";
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace shapshift
