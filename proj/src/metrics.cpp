#include "shapshift/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shapshift/errors.hpp"

namespace shapshift {

double sv_entropy(const Explanation& explanation, bool* all_zero_flag) {
    if (explanation.factors.empty()) {
        throw InvalidArgumentError("sv_entropy needs at least one conditional factor");
    }
    double total = 0.0;
    for (const auto& f : explanation.factors) total += std::abs(f.sv);
    if (all_zero_flag) *all_zero_flag = total == 0.0;
    if (total == 0.0) return 0.0;
    double h = 0.0;
    for (const auto& f : explanation.factors) {
        const double p = std::abs(f.sv) / total;
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

ReweightSpec make_reweight_spec(const ConditionalTable& table, std::size_t factor_index,
                                ReweightDirection direction) {
    if (factor_index >= table.n_conditionals()) {
        throw InvalidArgumentError("factor index out of range");
    }
    return {table.conditionals()[factor_index], table.p_probs()[factor_index],
            table.q_probs()[factor_index], direction};
}

ReweightSpec make_reweight_spec(const Explanation& explanation, std::size_t factor_index,
                                ReweightDirection direction) {
    if (factor_index >= explanation.factors.size()) {
        throw InvalidArgumentError("factor index out of range");
    }
    const FactorAttribution& f = explanation.factors[factor_index];
    return {f.conditional, f.p_prob, f.q_prob, direction};
}

namespace {

struct ReweightRatios {
    double in_true;   // rows passing the node's test
    double in_false;  // rows failing it
};

ReweightRatios ratios_for(const ReweightSpec& spec) {
    const bool forward = spec.direction == ReweightDirection::Forward;
    const double source = forward ? spec.p_prob : spec.q_prob;
    const double target = forward ? spec.q_prob : spec.p_prob;
    if ((source == 0.0 || source == 1.0) && target != source) {
        throw DegenerateReweightError("conditional '" + spec.conditional.human_label +
                                      "' has source probability " + format_real(source) +
                                      " but target " + format_real(target) +
                                      "; reweighting is degenerate");
    }
    if (source == target) return {1.0, 1.0};
    return {target / source, (1.0 - target) / (1.0 - source)};
}

// Whether a row reaches the conditional's node (g2) and, if so, whether it
// passes the node's own test (g1).
struct Membership {
    bool in_g2 = false;
    bool in_g1 = false;
};

Membership membership_of(std::span<const double> row, const SplitConditional& conditional) {
    for (const auto& step : conditional.path) {
        const bool went_true =
            row[static_cast<std::size_t>(step.feature_index)] <= step.threshold;
        if (went_true != step.branch_true) return {false, false};
    }
    const bool test_true =
        row[static_cast<std::size_t>(conditional.feature_index)] <= conditional.threshold;
    return {true, test_true};
}

}  // namespace

std::vector<double> reweight(const Dataset& rows, const ReweightSpec& spec) {
    const ReweightRatios r = ratios_for(spec);
    std::vector<double> weights(rows.n_rows(), 1.0);
    for (std::size_t i = 0; i < rows.n_rows(); ++i) {
        const Membership m = membership_of(rows.row(i), spec.conditional);
        if (!m.in_g2) continue;
        weights[i] = m.in_g1 ? r.in_true : r.in_false;
    }
    return weights;
}

double reweighted_mean(const std::vector<double>& predictions,
                       const std::vector<std::vector<double>>& weight_vectors) {
    if (predictions.empty()) throw InvalidArgumentError("predictions must be nonempty");
    for (const auto& w : weight_vectors) {
        if (w.size() != predictions.size()) {
            throw InvalidArgumentError("weight vector length does not match predictions");
        }
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        double w = 1.0;
        for (const auto& v : weight_vectors) w *= v[i];
        acc += predictions[i] * w;
    }
    return acc / static_cast<double>(predictions.size());
}

double reweighted_mean_for_set(const Explanation& explanation, const Dataset& source_rows,
                               const std::vector<double>& source_predictions,
                               const std::vector<std::size_t>& factor_set,
                               ReweightDirection direction) {
    std::vector<std::vector<double>> weights;
    weights.reserve(factor_set.size());
    for (std::size_t c : factor_set) {
        weights.push_back(reweight(source_rows, make_reweight_spec(explanation, c, direction)));
    }
    return reweighted_mean(source_predictions, weights);
}

namespace {

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2) return std::nullopt;
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;  // zero variance
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

FaithfulnessResult r_faithfulness(const Explanation& explanation, const Dataset& data_p,
                                  const Dataset& data_q, const std::vector<double>& predict_p,
                                  const std::vector<double>& predict_q,
                                  ReweightDirection direction) {
    const bool forward = direction == ReweightDirection::Forward;
    const Dataset& source = forward ? data_p : data_q;
    const std::vector<double>& preds = forward ? predict_p : predict_q;
    if (preds.size() != source.n_rows()) {
        throw InvalidArgumentError("prediction vector does not match the source dataset");
    }

    FaithfulnessResult result;
    std::vector<double> svs;
    std::vector<double> means;
    for (std::size_t c = 0; c < explanation.factors.size(); ++c) {
        try {
            means.push_back(reweighted_mean_for_set(explanation, source, preds, {c}, direction));
            svs.push_back(explanation.factors[c].sv);
        } catch (const DegenerateReweightError&) {
            result.dropped_factors.push_back(c);
        }
    }
    std::optional<double> r = pearson(svs, means);
    if (r && !forward) r = -*r;
    result.value = r;
    return result;
}

AucFaithfulnessResult auc_faithfulness(const Explanation& explanation, const Dataset& data_p,
                                       const Dataset& data_q,
                                       const std::vector<double>& predict_p,
                                       const std::vector<double>& predict_q,
                                       ReweightDirection direction, double epsilon) {
    const bool forward = direction == ReweightDirection::Forward;
    const Dataset& source = forward ? data_p : data_q;
    const std::vector<double>& preds = forward ? predict_p : predict_q;
    if (preds.size() != source.n_rows()) {
        throw InvalidArgumentError("prediction vector does not match the source dataset");
    }

    AucFaithfulnessResult result;

    std::vector<std::size_t> usable;
    for (std::size_t c = 0; c < explanation.factors.size(); ++c) {
        try {
            (void)ratios_for(make_reweight_spec(explanation, c, direction));
            usable.push_back(c);
        } catch (const DegenerateReweightError&) {
            result.dropped_factors.push_back(c);
        }
    }
    if (usable.empty()) return result;

    const double mu_source =
        std::accumulate(preds.begin(), preds.end(), 0.0) / static_cast<double>(preds.size());
    const std::vector<double>& other = forward ? predict_q : predict_p;
    const double mu_target =
        std::accumulate(other.begin(), other.end(), 0.0) / static_cast<double>(other.size());
    const double shift = mu_target - mu_source;
    if (std::abs(shift) <= epsilon) return result;  // undefined

    // Descending SV order in the direction of the prediction shift. The
    // permutation is shared by the forward and backward curves.
    const double sign = explanation.mu_q - explanation.mu_p >= 0.0 ? 1.0 : -1.0;
    std::vector<std::size_t> order = usable;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return sign * explanation.factors[a].sv > sign * explanation.factors[b].sv;
    });

    auto curve_area = [&](const std::vector<std::size_t>& applied_order) {
        std::vector<std::vector<double>> weights;
        double area = 0.0;
        for (std::size_t c : applied_order) {
            weights.push_back(reweight(source, make_reweight_spec(explanation, c, direction)));
            const double mu = reweighted_mean(preds, weights);
            area += (mu - mu_source) / shift;
        }
        return area / static_cast<double>(applied_order.size());
    };

    result.auac = curve_area(order);
    std::vector<std::size_t> reversed(order.rbegin(), order.rend());
    result.auiac = curve_area(reversed);
    return result;
}

double mann_whitney_u(const std::vector<double>& sample_a, const std::vector<double>& sample_b,
                      MwuAlternative alternative) {
    (void)alternative;  // only A_greater is defined
    if (sample_a.empty() || sample_b.empty()) {
        throw InvalidArgumentError("Mann-Whitney requires nonempty samples");
    }
    const std::size_t na = sample_a.size();
    const std::size_t nb = sample_b.size();
    const std::size_t n = na + nb;

    std::vector<std::pair<double, bool>> pooled;  // (value, from A)
    pooled.reserve(n);
    for (double v : sample_a) pooled.emplace_back(v, true);
    for (double v : sample_b) pooled.emplace_back(v, false);
    std::sort(pooled.begin(), pooled.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });

    // Midranks with tie bookkeeping.
    double rank_sum_a = 0.0;
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && pooled[j].first == pooled[i].first) ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        const auto t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        for (std::size_t k = i; k < j; ++k) {
            if (pooled[k].second) rank_sum_a += midrank;
        }
        i = j;
    }

    const double u_a = rank_sum_a - static_cast<double>(na) * (static_cast<double>(na) + 1.0) / 2.0;
    const double mean = static_cast<double>(na) * static_cast<double>(nb) / 2.0;
    const double nn = static_cast<double>(n);
    const double variance = static_cast<double>(na) * static_cast<double>(nb) / 12.0 *
                            ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if (variance <= 0.0) return 0.5;  // all values tied; no evidence either way
    const double z = (u_a - mean - 0.5) / std::sqrt(variance);
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

}  // namespace shapshift
