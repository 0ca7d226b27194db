#include "shapshift/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <unordered_map>

#include <Eigen/Dense>

#include "growth.hpp"
#include "shapshift/errors.hpp"
#include "shapshift/threading.hpp"

namespace shapshift {

double Explanation::sv_sum() const {
    double acc = 0.0;
    for (const auto& f : factors) acc += f.sv;
    if (leafmeans_sv) acc += *leafmeans_sv;
    return acc;
}

double interventional_leaf_prob(const ConditionalTable& table, const std::vector<bool>& in_s,
                                std::size_t leaf_index) {
    if (in_s.size() != table.n_conditionals()) {
        throw InvalidArgumentError("subset mask length must equal the conditional count");
    }
    const LeafFactorPath& leaf = table.leaves().at(leaf_index);
    double z = 1.0;
    for (const auto& [factor, went_true] : leaf.steps) {
        const double prob = in_s[factor] ? table.q_probs()[factor] : table.p_probs()[factor];
        z *= went_true ? prob : 1.0 - prob;
    }
    return z;
}

double interventional_mean(const ConditionalTable& table, std::span<const double> p_values,
                           std::span<const double> q_values, const std::vector<bool>& in_s,
                           bool leafmeans_swapped) {
    if (p_values.size() != table.n_leaves() || q_values.size() != table.n_leaves()) {
        throw InvalidArgumentError("leaf value vectors must align with the table's leaves");
    }
    double acc = 0.0;
    for (std::size_t l = 0; l < table.n_leaves(); ++l) {
        const double v = leafmeans_swapped ? q_values[l] : p_values[l];
        acc += interventional_leaf_prob(table, in_s, l) * v;
    }
    return acc;
}

namespace {

// w(s) = s!(n-s-1)!/n! = 1 / (n * C(n-1, s)), via a Pascal row (exact for
// the player counts the exact engine permits).
std::vector<double> shapley_weights(std::size_t n) {
    std::vector<double> choose(n, 1.0);  // C(n-1, s)
    for (std::size_t s = 1; s < n; ++s) {
        choose[s] = choose[s - 1] * static_cast<double>(n - s) / static_cast<double>(s);
    }
    std::vector<double> w(n);
    for (std::size_t s = 0; s < n; ++s) w[s] = 1.0 / (static_cast<double>(n) * choose[s]);
    return w;
}

// Exact SVs for n players from a value function evaluated on all 2^n
// coalitions. The mu table is filled in parallel; each phi accumulates in
// ascending mask order so results do not depend on thread count.
std::vector<double> exact_sv_core(std::size_t n,
                                  const std::function<double(std::uint32_t)>& mu_of,
                                  std::vector<double>* mu_table_out) {
    const std::uint32_t n_masks = std::uint32_t{1} << n;
    std::vector<double> mu(n_masks);
    constexpr std::uint32_t kBlock = 4096;
    const std::size_t n_blocks = (n_masks + kBlock - 1) / kBlock;
    parallel_for(n_blocks, [&](std::size_t b) {
        const std::uint32_t begin = static_cast<std::uint32_t>(b) * kBlock;
        const std::uint32_t end = std::min(n_masks, begin + kBlock);
        for (std::uint32_t mask = begin; mask < end; ++mask) mu[mask] = mu_of(mask);
    });

    const std::vector<double> w = shapley_weights(n);
    std::vector<double> phi(n, 0.0);
    parallel_for(n, [&](std::size_t player) {
        const std::uint32_t bit = std::uint32_t{1} << player;
        double acc = 0.0;
        for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
            if (mask & bit) continue;
            acc += w[std::popcount(mask)] * (mu[mask | bit] - mu[mask]);
        }
        phi[player] = acc;
    });

    if (mu_table_out) *mu_table_out = std::move(mu);
    return phi;
}

struct LeafValues {
    std::vector<double> p;
    std::vector<double> q;
};

LeafValues self_values(const ConditionalTable& table) {
    LeafValues v;
    v.p.reserve(table.n_leaves());
    for (const auto& leaf : table.leaves()) v.p.push_back(leaf.tree_value);
    v.q = v.p;
    return v;
}

LeafValues stats_values(const ConditionalTable& table, const LeafStats& stats) {
    if (stats.p_means.size() != table.n_leaves()) {
        throw InvalidArgumentError("leaf stats do not align with the conditional table");
    }
    for (std::size_t i = 0; i < stats.leaf_ids.size(); ++i) {
        if (stats.leaf_ids[i] != table.leaves()[i].leaf_id) {
            throw InvalidArgumentError("leaf stats ordering does not match the table");
        }
    }
    return {stats.p_means, stats.q_means};
}

void append_fill_flags(Explanation& expl, const LeafStats& stats) {
    for (std::size_t i = 0; i < stats.fill_applied.size(); ++i) {
        if (stats.fill_applied[i]) {
            expl.flags.push_back("leaf_mean_fill_applied:" +
                                 std::to_string(stats.leaf_ids[i]));
        }
    }
}

void append_empirical_means(Explanation& expl, const LeafStats& stats) {
    double mu_p = 0.0, mu_q = 0.0;
    for (std::size_t i = 0; i < stats.p_probs.size(); ++i) {
        mu_p += stats.p_probs[i] * stats.p_means[i];
        mu_q += stats.q_probs[i] * stats.q_means[i];
    }
    expl.empirical_mu_p = mu_p;
    expl.empirical_mu_q = mu_q;
}

Explanation exact_shapley_impl(const ConditionalTable& table, const LeafValues& values,
                               const ShapleyOptions& options) {
    const std::size_t m = table.n_conditionals();
    const std::size_t n = m + (options.include_leafmeans ? 1 : 0);
    if (n > options.exact_limit || n >= 31) {
        throw InvalidArgumentError(
            "factor count " + std::to_string(n) + " exceeds the exact limit of " +
            std::to_string(options.exact_limit) +
            "; use kernel_shap or prune_regrow for large trees");
    }

    // Precompute per-leaf ancestor masks so mu(mask) is a tight loop.
    const auto& leaves = table.leaves();
    const std::size_t n_leaves = leaves.size();

    auto mu_of = [&](std::uint32_t mask) {
        double acc = 0.0;
        const bool lm = options.include_leafmeans && (mask & (std::uint32_t{1} << m));
        for (std::size_t l = 0; l < n_leaves; ++l) {
            double z = 1.0;
            for (const auto& [factor, went_true] : leaves[l].steps) {
                const double prob = (mask >> factor) & 1 ? table.q_probs()[factor]
                                                         : table.p_probs()[factor];
                z *= went_true ? prob : 1.0 - prob;
            }
            acc += z * (lm ? values.q[l] : values.p[l]);
        }
        return acc;
    };

    std::vector<double> mu;
    std::vector<double> phi = n == 0 ? std::vector<double>{} : exact_sv_core(n, mu_of, &mu);

    Explanation expl;
    expl.method = SvMethod::Exact;
    expl.mu_p = n == 0 ? mu_of(0) : mu.front();
    expl.mu_q = n == 0 ? mu_of(0) : mu.back();
    expl.factors.reserve(m);
    for (std::size_t c = 0; c < m; ++c) {
        expl.factors.push_back({table.conditionals()[c], table.p_probs()[c], table.q_probs()[c],
                                n == 0 ? 0.0 : phi[c]});
    }
    if (options.include_leafmeans) {
        expl.leafmeans_sv = phi[m];
        expl.percent_unexplained = percent_unexplained(expl);
        if (!expl.percent_unexplained) {
            expl.flags.push_back("percent_unexplained_undefined_zero_shift");
        }
    }
    return expl;
}

}  // namespace

Explanation exact_shapley(const ConditionalTable& table, const ShapleyOptions& options) {
    return exact_shapley_impl(table, self_values(table), options);
}

Explanation exact_shapley(const ConditionalTable& table, const LeafStats& stats,
                          const ShapleyOptions& options) {
    Explanation expl = exact_shapley_impl(table, stats_values(table, stats), options);
    append_fill_flags(expl, stats);
    append_empirical_means(expl, stats);
    return expl;
}

std::optional<double> percent_unexplained(const Explanation& explanation, double epsilon) {
    if (!explanation.leafmeans_sv) {
        throw InvalidArgumentError(
            "percent_unexplained requires an explanation with the LeafMeans factor");
    }
    const double shift = std::abs(explanation.mu_q - explanation.mu_p);
    if (shift < epsilon) return std::nullopt;
    return 100.0 * std::abs(*explanation.leafmeans_sv) / shift;
}

namespace {

// ---- Kernel SHAP -----------------------------------------------------

struct CoalitionSet {
    // Masks are stored per coalition as byte vectors (players can exceed 64).
    std::vector<std::vector<std::uint8_t>> masks;
    std::vector<double> weights;
};

double binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0.0;
    k = std::min(k, n - k);
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) {
        r *= static_cast<double>(n - k + i) / static_cast<double>(i);
        if (r > 1e18) return 1e18;  // saturate; only compared against budgets
    }
    return r;
}

// Enumerates all C(n, k) subsets of size k, invoking fn on each index set.
void for_each_combination(std::size_t n, std::size_t k,
                          const std::function<void(const std::vector<std::size_t>&)>& fn) {
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    for (;;) {
        fn(idx);
        std::size_t i = k;
        while (i > 0) {
            --i;
            if (idx[i] != i + n - k) {
                ++idx[i];
                for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
                break;
            }
            if (i == 0) return;
        }
        if (k == 0) return;
    }
}

CoalitionSet build_coalitions(std::size_t n, std::size_t budget, std::uint64_t seed) {
    CoalitionSet out;
    const std::size_t num_subset_sizes =
        static_cast<std::size_t>(std::ceil((static_cast<double>(n) - 1.0) / 2.0));
    const std::size_t num_paired =
        static_cast<std::size_t>(std::floor((static_cast<double>(n) - 1.0) / 2.0));

    // Class weights: Shapley kernel mass of each |S| class, with paired
    // complement classes folded in.
    std::vector<double> class_weight(num_subset_sizes + 1, 0.0);
    double total = 0.0;
    for (std::size_t j = 1; j <= num_subset_sizes; ++j) {
        double w = (static_cast<double>(n) - 1.0) /
                   (static_cast<double>(j) * static_cast<double>(n - j));
        if (j <= num_paired) w *= 2.0;
        class_weight[j] = w;
        total += w;
    }
    for (std::size_t j = 1; j <= num_subset_sizes; ++j) class_weight[j] /= total;

    auto push_mask = [&](const std::vector<std::size_t>& members, double weight) {
        std::vector<std::uint8_t> mask(n, 0);
        for (std::size_t p : members) mask[p] = 1;
        out.masks.push_back(std::move(mask));
        out.weights.push_back(weight);
    };
    auto push_complement = [&](const std::vector<std::size_t>& members, double weight) {
        std::vector<std::uint8_t> mask(n, 1);
        for (std::size_t p : members) mask[p] = 0;
        out.masks.push_back(std::move(mask));
        out.weights.push_back(weight);
    };

    std::size_t samples_left = budget;
    double weight_left = 1.0;
    std::size_t first_unenumerated = num_subset_sizes + 1;

    for (std::size_t j = 1; j <= num_subset_sizes; ++j) {
        double nsubsets = binomial(n, j);
        if (j <= num_paired) nsubsets *= 2.0;
        if (nsubsets <= static_cast<double>(samples_left) * class_weight[j] / weight_left +
                            1e-8 &&
            nsubsets <= static_cast<double>(samples_left)) {
            const double per_subset = class_weight[j] / nsubsets;
            for_each_combination(n, j, [&](const std::vector<std::size_t>& members) {
                push_mask(members, per_subset);
                if (j <= num_paired) push_complement(members, per_subset);
            });
            samples_left -= static_cast<std::size_t>(nsubsets);
            weight_left -= class_weight[j];
        } else {
            first_unenumerated = j;
            break;
        }
    }

    if (first_unenumerated <= num_subset_sizes && samples_left > 0) {
        // Random phase: sample sizes proportionally to the remaining class
        // weights, subsets uniformly within a size, always paired with the
        // complement. Duplicate draws accumulate counts.
        std::vector<double> cumulative;
        std::vector<std::size_t> sizes;
        double acc = 0.0;
        for (std::size_t j = first_unenumerated; j <= num_subset_sizes; ++j) {
            acc += class_weight[j];
            cumulative.push_back(acc);
            sizes.push_back(j);
        }

        std::uint64_t rng = seed;
        std::vector<std::size_t> pool(n);
        std::unordered_map<std::string, std::size_t> seen;  // mask bytes -> row
        std::vector<std::string> sampled_keys;
        std::vector<double> counts;

        auto record = [&](const std::string& key) {
            auto [it, fresh] = seen.emplace(key, sampled_keys.size());
            if (fresh) {
                sampled_keys.push_back(key);
                counts.push_back(1.0);
            } else {
                counts[it->second] += 1.0;
            }
        };

        std::size_t draws = 0;
        while (draws < samples_left) {
            const double u = detail::to_unit_double(detail::next_rand(rng)) * acc;
            std::size_t pick = 0;
            while (pick + 1 < cumulative.size() && u > cumulative[pick]) ++pick;
            const std::size_t j = sizes[pick];

            for (std::size_t i = 0; i < n; ++i) pool[i] = i;
            std::string key(n, '\0');
            for (std::size_t i = 0; i < j; ++i) {
                const std::size_t r = i + detail::next_rand(rng) % (n - i);
                std::swap(pool[i], pool[r]);
                key[pool[i]] = 1;
            }
            record(key);
            ++draws;

            if (draws < samples_left) {
                std::string comp(n, '\0');
                for (std::size_t i = 0; i < n; ++i) comp[i] = key[i] ? '\0' : 1;
                record(comp);
                ++draws;
            }
        }

        double total_count = 0.0;
        for (double c : counts) total_count += c;
        if (total_count > 0.0) {
            const double scale = weight_left / total_count;
            for (std::size_t i = 0; i < sampled_keys.size(); ++i) {
                std::vector<std::uint8_t> mask(n, 0);
                for (std::size_t p = 0; p < n; ++p) mask[p] = sampled_keys[i][p] ? 1 : 0;
                out.masks.push_back(std::move(mask));
                out.weights.push_back(counts[i] * scale);
            }
        }
    }

    return out;
}

}  // namespace

namespace {

Explanation kernel_shap_impl(const ConditionalTable& table, const LeafValues& values,
                             const KernelShapOptions& options) {
    const std::size_t m = table.n_conditionals();
    const std::size_t n = m + (options.include_leafmeans ? 1 : 0);
    if (n < 2) {
        throw InvalidArgumentError("kernel_shap requires at least 2 factors");
    }

    const std::size_t budget = options.budget > 0 ? options.budget : 2 * n + 2048;

    // Coalition value: conditionals indexed 0..m-1, LeafMeans (if any) last.
    const auto& leaves = table.leaves();
    auto mu_of = [&](const std::vector<std::uint8_t>& mask) {
        const bool lm = options.include_leafmeans && mask[m];
        double acc = 0.0;
        for (std::size_t l = 0; l < leaves.size(); ++l) {
            double z = 1.0;
            for (const auto& [factor, went_true] : leaves[l].steps) {
                const double prob =
                    mask[factor] ? table.q_probs()[factor] : table.p_probs()[factor];
                z *= went_true ? prob : 1.0 - prob;
            }
            acc += z * (lm ? values.q[l] : values.p[l]);
        }
        return acc;
    };

    const std::vector<std::uint8_t> empty_mask(n, 0);
    const std::vector<std::uint8_t> full_mask(n, 1);
    const double mu_empty = mu_of(empty_mask);
    const double mu_full = mu_of(full_mask);

    CoalitionSet coalitions = build_coalitions(n, budget, options.seed);
    const std::size_t rows = coalitions.masks.size();
    if (rows < n - 1) {
        throw InvalidArgumentError("kernel_shap budget too small to identify " +
                                   std::to_string(n) + " factors; increase budget");
    }

    std::vector<double> y(rows);
    parallel_for(rows, [&](std::size_t k) { y[k] = mu_of(coalitions.masks[k]); });

    // Constrained WLS: eliminate the last player so the fits at the empty
    // and full coalitions match mu_empty and mu_full exactly.
    Eigen::MatrixXd a(rows, static_cast<Eigen::Index>(n - 1));
    Eigen::VectorXd b(rows);
    for (std::size_t k = 0; k < rows; ++k) {
        const auto& mask = coalitions.masks[k];
        const double sw = std::sqrt(coalitions.weights[k]);
        const double zn = mask[n - 1] ? 1.0 : 0.0;
        for (std::size_t j = 0; j + 1 < n; ++j) {
            a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
                sw * ((mask[j] ? 1.0 : 0.0) - zn);
        }
        b(static_cast<Eigen::Index>(k)) = sw * (y[k] - mu_empty - zn * (mu_full - mu_empty));
    }

    const Eigen::MatrixXd normal = a.transpose() * a;
    const Eigen::VectorXd rhs = a.transpose() * b;
    Eigen::LDLT<Eigen::MatrixXd> solver(normal);
    if (solver.info() != Eigen::Success) {
        throw InvalidArgumentError("kernel_shap regression system is singular; increase budget");
    }
    const Eigen::VectorXd x = solver.solve(rhs);
    if (!x.allFinite()) {
        throw InvalidArgumentError("kernel_shap regression system is singular; increase budget");
    }

    std::vector<double> phi(n);
    double partial = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        phi[j] = x(static_cast<Eigen::Index>(j));
        partial += phi[j];
    }
    phi[n - 1] = (mu_full - mu_empty) - partial;

    Explanation expl;
    expl.method = SvMethod::KernelShap;
    expl.mu_p = mu_empty;
    expl.mu_q = mu_full;
    expl.seed = options.seed;
    expl.kernel_budget = budget;
    expl.factors.reserve(m);
    for (std::size_t c = 0; c < m; ++c) {
        expl.factors.push_back(
            {table.conditionals()[c], table.p_probs()[c], table.q_probs()[c], phi[c]});
    }
    if (options.include_leafmeans) {
        expl.leafmeans_sv = phi[m];
        expl.percent_unexplained = percent_unexplained(expl);
        if (!expl.percent_unexplained) {
            expl.flags.push_back("percent_unexplained_undefined_zero_shift");
        }
    }
    return expl;
}

}  // namespace

Explanation kernel_shap(const ConditionalTable& table, const LeafStats& stats,
                        const KernelShapOptions& options) {
    Explanation expl = kernel_shap_impl(table, stats_values(table, stats), options);
    append_fill_flags(expl, stats);
    append_empirical_means(expl, stats);
    return expl;
}

Explanation kernel_shap_self(const ConditionalTable& table, const KernelShapOptions& options) {
    return kernel_shap_impl(table, self_values(table), options);
}

namespace {

// ---- Brute-force oracle ----------------------------------------------
//
// Literal transcription of the SV formula: a double loop over factors and
// subsets of the remaining factors, with its own interventional-mean
// evaluation. Kept free of any code shared with exact_shapley.

double oracle_factorial(std::size_t k) {
    double f = 1.0;
    for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
    return f;
}

Explanation brute_force_impl(const ConditionalTable& table, const LeafValues& values,
                             const ShapleyOptions& options) {
    const std::size_t m = table.n_conditionals();
    const std::size_t n = m + (options.include_leafmeans ? 1 : 0);
    if (n > 12) {
        throw InvalidArgumentError("brute_force_oracle refuses more than 12 factors");
    }

    auto mu_hat = [&](std::uint32_t subset) {
        double mean = 0.0;
        const bool leafmeans_swapped =
            options.include_leafmeans && ((subset >> m) & 1u) == 1u;
        for (const auto& leaf : table.leaves()) {
            double prob = 1.0;
            for (const auto& [factor, went_true] : leaf.steps) {
                double p = table.p_probs()[factor];
                if (((subset >> factor) & 1u) == 1u) p = table.q_probs()[factor];
                prob *= went_true ? p : 1.0 - p;
            }
            const std::size_t index =
                static_cast<std::size_t>(&leaf - table.leaves().data());
            mean += prob * (leafmeans_swapped ? values.q[index] : values.p[index]);
        }
        return mean;
    };

    std::vector<double> phi(n, 0.0);
    const double n_fact = oracle_factorial(n);
    for (std::size_t c = 0; c < n; ++c) {
        const std::uint32_t c_bit = std::uint32_t{1} << c;
        double sv = 0.0;
        for (std::uint32_t subset = 0; subset < (std::uint32_t{1} << n); ++subset) {
            if ((subset & c_bit) != 0) continue;  // S must exclude c
            std::size_t s_size = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if ((subset >> i) & 1u) ++s_size;
            }
            const double w =
                oracle_factorial(s_size) * oracle_factorial(n - s_size - 1) / n_fact;
            sv += w * (mu_hat(subset | c_bit) - mu_hat(subset));
        }
        phi[c] = sv;
    }

    Explanation expl;
    expl.method = SvMethod::Exact;
    expl.mu_p = mu_hat(0);
    expl.mu_q = mu_hat((std::uint32_t{1} << n) - 1);
    for (std::size_t c = 0; c < m; ++c) {
        expl.factors.push_back(
            {table.conditionals()[c], table.p_probs()[c], table.q_probs()[c], phi[c]});
    }
    if (options.include_leafmeans) {
        expl.leafmeans_sv = phi[m];
        expl.percent_unexplained = percent_unexplained(expl);
    }
    return expl;
}

}  // namespace

Explanation brute_force_oracle(const ConditionalTable& table, const LeafStats& stats,
                               const ShapleyOptions& options) {
    return brute_force_impl(table, stats_values(table, stats), options);
}

Explanation brute_force_oracle(const ConditionalTable& table, const ShapleyOptions& options) {
    return brute_force_impl(table, self_values(table), options);
}

std::vector<double> joint_sv_diagnostic(const std::vector<double>& leaf_probs_p,
                                        const std::vector<double>& leaf_probs_q,
                                        const std::vector<double>& leaf_values) {
    const std::size_t n = leaf_probs_p.size();
    if (leaf_probs_q.size() != n || leaf_values.size() != n) {
        throw InvalidArgumentError("joint diagnostic inputs must have equal length");
    }
    if (n == 0 || n > 20) {
        throw InvalidArgumentError("joint diagnostic supports 1..20 leaves");
    }
    auto check_sum = [](const std::vector<double>& probs, const char* name) {
        double s = 0.0;
        for (double p : probs) s += p;
        if (std::abs(s - 1.0) > 1e-9) {
            throw InvalidArgumentError(std::string(name) + " leaf probabilities sum to " +
                                       format_real(s) + ", expected 1");
        }
    };
    check_sum(leaf_probs_p, "P");
    check_sum(leaf_probs_q, "Q");

    // Swapped leaves take their Q probability; the rest are scaled by a
    // common factor that restores total mass 1.
    auto mu_of = [&](std::uint32_t mask) {
        double swapped_q = 0.0, swapped_p = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
            if ((mask >> l) & 1u) {
                swapped_q += leaf_probs_q[l];
                swapped_p += leaf_probs_p[l];
            }
        }
        const double numer = 1.0 - swapped_q;
        const double denom = 1.0 - swapped_p;
        double alpha;
        if (std::abs(denom) < 1e-15) {
            if (std::abs(numer) < 1e-9) {
                alpha = 0.0;  // no residual mass on either side
            } else {
                throw InvalidArgumentError(
                    "renormalisation singularity: swapped leaves carry all P mass but the "
                    "remaining Q mass is nonzero");
            }
        } else {
            alpha = numer / denom;
        }
        double acc = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
            const double prob =
                ((mask >> l) & 1u) ? leaf_probs_q[l] : alpha * leaf_probs_p[l];
            acc += prob * leaf_values[l];
        }
        return acc;
    };

    return exact_sv_core(n, mu_of, nullptr);
}

}  // namespace shapshift
