#pragma once

#include <cstdint>

#include "ekp/dataset.hpp"

namespace ekp {

/// Generator for bandwidth-localized targets: the clean signal is a random
/// expansion f(x) = sum_j c_j exp(-gamma0 ||x - z_j||^2), so a kernel grid
/// containing gamma0 has one member matched to the data.
struct SyntheticConfig {
    int n = 200;
    int dim = 2;
    int n_centers = 20;
    double gamma0 = 1.0;
    double noise = 0.1;  // additive Gaussian noise on f before labeling
    Task task = Task::regression;
    std::uint64_t seed = 0;
};

/// Regression labels are f + noise; classification labels are the sign of the
/// median-centered noisy signal (balanced classes by construction).
DataSet make_synthetic(const SyntheticConfig& cfg);

}  // namespace ekp
