#include "shapshift/benchmark.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "growth.hpp"
#include "shapshift/errors.hpp"

namespace shapshift {

namespace {

double gaussian(std::uint64_t& state) {
    // Box-Muller on splitmix draws; u clamped away from 0.
    const double u = std::max(detail::to_unit_double(detail::next_rand(state)), 1e-12);
    const double v = detail::to_unit_double(detail::next_rand(state));
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

double score_of(const std::vector<double>& x) {
    // Smooth nonlinear target in (0, 1).
    double t = 0.9 * x[0] - 0.4;
    if (x.size() > 2) t += 0.7 * x[1] * (x[2] > 0.3 ? 1.0 : -0.2);
    if (x.size() > 3) t += 0.5 * x[3];
    return 1.0 / (1.0 + std::exp(-t));
}

Dataset sample_distribution(const SyntheticShiftConfig& config, double component0_weight,
                            std::uint64_t seed) {
    const std::size_t d = config.n_features;
    const std::size_t n = config.rows_per_distribution;

    std::vector<Feature> features;
    for (std::size_t k = 0; k < d; ++k) {
        features.push_back({"f" + std::to_string(k), FeatureKind::Numeric, {}});
    }
    FeatureSchema schema(std::move(features));

    std::uint64_t state = seed;
    std::vector<double> values;
    values.reserve(n * d);
    std::vector<double> labels;
    labels.reserve(n);
    std::vector<double> x(d);
    for (std::size_t i = 0; i < n; ++i) {
        const bool component1 =
            detail::to_unit_double(detail::next_rand(state)) >= component0_weight;
        for (std::size_t k = 0; k < d; ++k) {
            const double center =
                component1 ? config.mean_separation * (k < 3 ? 1.0 : 0.25) : 0.0;
            x[k] = center + gaussian(state);
            values.push_back(x[k]);
        }
        labels.push_back(score_of(x));
    }
    return Dataset(std::move(schema), std::move(values), n, std::nullopt, std::move(labels));
}

}  // namespace

SyntheticShift make_synthetic_shift(const SyntheticShiftConfig& config) {
    if (config.n_features < 1) throw InvalidArgumentError("need at least one feature");
    if (config.rows_per_distribution < 2) throw InvalidArgumentError("need at least two rows");
    SyntheticShift shift;
    shift.data_p = sample_distribution(config, config.mixture_weight_p,
                                       detail::derive_seed(config.seed, 101));
    shift.data_q = sample_distribution(config, config.mixture_weight_q,
                                       detail::derive_seed(config.seed, 202));
    return shift;
}

}  // namespace shapshift
