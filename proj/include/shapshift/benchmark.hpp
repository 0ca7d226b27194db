#pragma once

#include <cstdint>

#include "shapshift/dataset.hpp"

namespace shapshift {

// Built-in synthetic shift benchmark: two-component Gaussian mixtures over
// numeric features whose component weights differ between P and Q (and the
// second component sits at a shifted mean), with a smooth nonlinear score
// in (0, 1) as the training target. Fitting a model on the pooled rows and
// contrasting its mean prediction on P and Q yields a reproducible,
// seedable prediction shift to explain.
struct SyntheticShiftConfig {
    std::uint64_t seed = 0;
    std::size_t rows_per_distribution = 2000;
    std::size_t n_features = 5;
    double mixture_weight_p = 0.75;  // probability of component 0 under P
    double mixture_weight_q = 0.35;  // and under Q
    double mean_separation = 1.6;    // distance of component 1 from the origin
};

struct SyntheticShift {
    Dataset data_p;
    Dataset data_q;
};

// Datasets carry the score in their label column, so any learner in this
// library can fit the black box directly.
SyntheticShift make_synthetic_shift(const SyntheticShiftConfig& config);

}  // namespace shapshift
