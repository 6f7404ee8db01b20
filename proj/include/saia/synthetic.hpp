#pragma once

#include <cstdint>
#include <vector>

#include "saia/core.hpp"

namespace saia {

/// Gaussian-mixture classification data seen through two kinds of view.
/// A latent point z ~ N(mu_y, I) is drawn per sample; the client's weak view
/// keeps the first `weak_dims` latent coordinates under heavy noise plus
/// pure-noise nuisance features, while each strong view observes all of z
/// under light, independent noise.
struct SyntheticConfig {
    int samples = 8000;
    int classes = 4;
    int latent_dims = 6;
    double separation = 1.6;
    int weak_dims = 3;
    double weak_noise = 0.95;
    int nuisance_dims = 2;
    int strong_views = 3;
    double strong_noise = 0.5;
    /// Probability that the observed label is replaced by a different class.
    double label_noise = 0.065;
    std::uint64_t seed = 1;

    void validate() const;
};

struct SyntheticData {
    /// Weak view, for the embedded AI.
    Dataset client;
    /// Same ids and labels as `client`.
    std::vector<Dataset> strong;
};

/// Deterministic per seed. Classes are assigned round-robin so every class has
/// samples / classes members (+1 for the first remainder classes).
SyntheticData make_synthetic(const SyntheticConfig& cfg);

}  // namespace saia
