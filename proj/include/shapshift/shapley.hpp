#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shapshift/conditionals.hpp"

namespace shapshift {

enum class SvMethod { Exact, KernelShap };

struct FactorAttribution {
    SplitConditional conditional;
    double p_prob = 0.0;
    double q_prob = 0.0;
    double sv = 0.0;
};

// SV attribution of a mean prediction shift to per-conditional factors,
// optionally plus the LeafMeans factor that swaps all leafwise means from
// their P values to their Q values. Positive sv means the factor pushed
// the mean prediction upward from P to Q.
struct Explanation {
    std::vector<FactorAttribution> factors;
    std::optional<double> leafmeans_sv;
    double mu_p = 0.0;  // interventional mean at the empty set
    double mu_q = 0.0;  // interventional mean at the full set
    std::optional<double> percent_unexplained;
    SvMethod method = SvMethod::Exact;

    // metadata
    std::optional<std::size_t> tree_index;
    std::optional<std::uint64_t> seed;
    std::size_t kernel_budget = 0;
    std::optional<double> empirical_mu_p;  // raw-data means, for discrepancy reporting
    std::optional<double> empirical_mu_q;
    std::vector<std::string> flags;

    double shift() const { return mu_q - mu_p; }
    double sv_sum() const;
};

struct ShapleyOptions {
    bool include_leafmeans = false;
    std::size_t exact_limit = 20;  // max player count for exact enumeration
};

struct KernelShapOptions {
    bool include_leafmeans = false;
    std::size_t budget = 0;  // 0 means the default 2n + 2048
    std::uint64_t seed = 0;
};

// Probability of reaching a leaf under the interventional distribution
// that takes the conditionals in S from Q and the rest from P: the
// product over the leaf's ancestors of the chosen-side probability,
// complemented on false branches. in_s has one entry per conditional.
double interventional_leaf_prob(const ConditionalTable& table, const std::vector<bool>& in_s,
                                std::size_t leaf_index);

// Interventional mean: sum over leaves of the interventional leaf
// probability times the leafwise value, which is the Q-side mean when
// leafmeans_swapped and the P-side mean otherwise.
double interventional_mean(const ConditionalTable& table, std::span<const double> p_values,
                           std::span<const double> q_values, const std::vector<bool>& in_s,
                           bool leafmeans_swapped);

// Exact SVs over all 2^n interventions. Self-explanation flavor: leafwise
// values are the tree's own leaf predictions on both sides.
Explanation exact_shapley(const ConditionalTable& table, const ShapleyOptions& options = {});
// Ensemble/surrogate flavor: leafwise values come from LeafStats.
Explanation exact_shapley(const ConditionalTable& table, const LeafStats& stats,
                          const ShapleyOptions& options);

// 100 * |phi_LeafMeans| / |mu_Q - mu_P|; nullopt when the shift magnitude
// is below epsilon. Throws if the explanation has no LeafMeans SV.
std::optional<double> percent_unexplained(const Explanation& explanation,
                                          double epsilon = 1e-12);

// Kernel SHAP estimate: weighted least squares over sampled coalitions
// with Shapley kernel weights and paired complements; the empty and full
// coalitions enter as equality constraints. Enumerates everything when
// the budget covers all 2^n - 2 proper coalitions, which reproduces the
// exact SVs up to solver tolerance.
Explanation kernel_shap(const ConditionalTable& table, const LeafStats& stats,
                        const KernelShapOptions& options);
Explanation kernel_shap_self(const ConditionalTable& table, const KernelShapOptions& options);

// Reference implementation: the SV formula evaluated as a literal double
// loop over factors and subsets, sharing no traversal code with
// exact_shapley. Exists for equivalence testing; refuses > 12 factors.
Explanation brute_force_oracle(const ConditionalTable& table, const LeafStats& stats,
                               const ShapleyOptions& options);
Explanation brute_force_oracle(const ConditionalTable& table, const ShapleyOptions& options = {});

// Diagnostic SV analysis over leaf joint probabilities with uniform
// renormalisation of the unswapped leaves. Demonstrates why joint
// factors are ill-behaved: a leaf with unchanged probability can still
// receive a nonzero SV. Returns one SV per leaf.
std::vector<double> joint_sv_diagnostic(const std::vector<double>& leaf_probs_p,
                                        const std::vector<double>& leaf_probs_q,
                                        const std::vector<double>& leaf_values);

}  // namespace shapshift
