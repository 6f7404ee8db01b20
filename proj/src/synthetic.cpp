#include "saia/synthetic.hpp"

#include <cstdio>

#include "saia/error.hpp"
#include "saia/random.hpp"
#include "saia/text.hpp"

namespace saia {

void SyntheticConfig::validate() const {
    auto bad = [](const char* what) { throw Error(ErrorKind::ConfigError, std::string("synthetic: ") + what); };
    if (samples < 1) bad("samples must be >= 1");
    if (classes < 2) bad("classes must be >= 2");
    if (latent_dims < 1) bad("latent_dims must be >= 1");
    if (weak_dims < 1 || weak_dims > latent_dims) bad("weak_dims must be in [1, latent_dims]");
    if (nuisance_dims < 0) bad("nuisance_dims must be >= 0");
    if (strong_views < 1) bad("strong_views must be >= 1");
    if (!(separation >= 0.0) || !(weak_noise >= 0.0) || !(strong_noise >= 0.0)) bad("scales must be >= 0");
    if (!(label_noise >= 0.0 && label_noise <= 1.0)) bad("label_noise must be in [0,1]");
}

SyntheticData make_synthetic(const SyntheticConfig& cfg) {
    cfg.validate();
    Rng mean_rng(mix_seed(cfg.seed, 1));
    std::vector<std::vector<double>> means(cfg.classes, std::vector<double>(cfg.latent_dims));
    for (auto& mu : means) {
        for (auto& v : mu) v = cfg.separation * mean_rng.normal();
    }

    SyntheticData out{Dataset(cfg.classes, cfg.weak_dims + cfg.nuisance_dims), {}};
    for (int k = 0; k < cfg.strong_views; ++k) out.strong.emplace_back(cfg.classes, cfg.latent_dims);

    Rng rng(mix_seed(cfg.seed, 2));
    std::vector<double> z(cfg.latent_dims);
    const int width = static_cast<int>(std::to_string(cfg.samples - 1).size());
    for (int i = 0; i < cfg.samples; ++i) {
        const int y = i % cfg.classes;
        for (int j = 0; j < cfg.latent_dims; ++j) z[j] = means[y][j] + rng.normal();
        int observed = y;
        if (rng.uniform() < cfg.label_noise) {
            observed = static_cast<int>(rng.index(static_cast<std::size_t>(cfg.classes - 1)));
            if (observed >= y) ++observed;
        }
        char id[32];
        std::snprintf(id, sizeof id, "s%0*d", width, i);

        Sample weak{id, {}, observed};
        for (int j = 0; j < cfg.weak_dims; ++j) weak.features.push_back(z[j] + cfg.weak_noise * rng.normal());
        for (int j = 0; j < cfg.nuisance_dims; ++j) weak.features.push_back(rng.normal());
        out.client.add(std::move(weak));

        for (int k = 0; k < cfg.strong_views; ++k) {
            Sample strong{id, {}, observed};
            for (int j = 0; j < cfg.latent_dims; ++j) strong.features.push_back(z[j] + cfg.strong_noise * rng.normal());
            out.strong[k].add(std::move(strong));
        }
    }
    return out;
}

}  // namespace saia
