#pragma once

#include <optional>
#include <vector>

#include "shapshift/conditionals.hpp"
#include "shapshift/dataset.hpp"
#include "shapshift/shapley.hpp"

namespace shapshift {

// Entropy (nats) of the normalised absolute conditional SVs. LeafMeans is
// excluded. All-zero SVs return 0 with the flag set.
double sv_entropy(const Explanation& explanation, bool* all_zero_flag = nullptr);

enum class ReweightDirection {
    Forward,   // reweight P rows to match Q's conditional
    Backward,  // reweight Q rows to match P's conditional
};

struct ReweightSpec {
    SplitConditional conditional;
    double p_prob = 0.0;
    double q_prob = 0.0;
    ReweightDirection direction = ReweightDirection::Forward;
};

ReweightSpec make_reweight_spec(const ConditionalTable& table, std::size_t factor_index,
                                ReweightDirection direction);
ReweightSpec make_reweight_spec(const Explanation& explanation, std::size_t factor_index,
                                ReweightDirection direction);

// Per-row weights: target/source ratio inside the conditioned subgroup on
// the test-true side, complemented ratio on the test-false side, 1 for
// rows outside the subgroup. Throws DegenerateReweightError when the
// source probability is exactly 0 or 1 while the target differs.
std::vector<double> reweight(const Dataset& rows, const ReweightSpec& spec);

// Mean of f(x) * product of the given per-row weight vectors.
double reweighted_mean(const std::vector<double>& predictions,
                       const std::vector<std::vector<double>>& weight_vectors);

// Reweighted mean for a set of conditionals applied cumulatively.
double reweighted_mean_for_set(const Explanation& explanation, const Dataset& source_rows,
                               const std::vector<double>& source_predictions,
                               const std::vector<std::size_t>& factor_set,
                               ReweightDirection direction);

struct FaithfulnessResult {
    std::optional<double> value;  // nullopt when undefined (zero variance, < 2 factors)
    std::vector<std::size_t> dropped_factors;  // degenerate reweights, by factor index
};

// Pearson correlation between the conditional SVs and their single-factor
// reweighted means. Backward direction flips the correlation's sign.
FaithfulnessResult r_faithfulness(const Explanation& explanation, const Dataset& data_p,
                                  const Dataset& data_q, const std::vector<double>& predict_p,
                                  const std::vector<double>& predict_q,
                                  ReweightDirection direction);

struct AucFaithfulnessResult {
    std::optional<double> auac;
    std::optional<double> auiac;
    std::vector<std::size_t> dropped_factors;
};

// Area under the activation curve: conditionals applied cumulatively in
// descending SV order (in the direction of the prediction shift),
// reweighted means normalised by the shift, averaged. AUIAC uses the
// reverse order; a faithful ordering makes AUAC exceed AUIAC.
AucFaithfulnessResult auc_faithfulness(const Explanation& explanation, const Dataset& data_p,
                                       const Dataset& data_q,
                                       const std::vector<double>& predict_p,
                                       const std::vector<double>& predict_q,
                                       ReweightDirection direction, double epsilon = 1e-12);

enum class MwuAlternative { AGreater };

// One-sided Mann-Whitney U p-value via the normal approximation with tie
// and continuity corrections.
double mann_whitney_u(const std::vector<double>& sample_a, const std::vector<double>& sample_b,
                      MwuAlternative alternative = MwuAlternative::AGreater);

}  // namespace shapshift
