#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "normscore/generator.hpp"
#include "normscore/image.hpp"

namespace normscore {

struct TrainConfig {
    int steps = 2200;
    int batch = 8;
    double lr = 2.5e-3;
    double adam_beta1 = 0.0;
    double adam_beta2 = 0.99;
    // finite-difference directional gradient penalty on real batches
    double penalty_gamma = 1.0;
    double penalty_delta = 1e-3;
    int penalty_interval = 4;
    double ema_decay = 0.995;
    std::uint64_t seed = 1;
    int log_interval = 50;
};

struct TrainMetricsRow {
    int step = 0;
    double d_loss = 0.0;
    double g_loss = 0.0;
    double penalty = 0.0;
    double fake_pixel_std = 0.0;
};

// Non-saturating adversarial training of the style generator on normal faces
// only. The returned model carries the exponential moving average of the
// generator weights. Throws if any loss goes non-finite.
GeneratorModel train_generator(const std::vector<Image>& corpus, int latent_dim,
                               const TrainConfig& cfg,
                               std::vector<TrainMetricsRow>* metrics = nullptr);

void write_train_log(const std::string& path, const std::vector<TrainMetricsRow>& rows);

}  // namespace normscore
