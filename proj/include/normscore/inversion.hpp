#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "normscore/generator.hpp"
#include "normscore/image.hpp"
#include "normscore/perceptual.hpp"

namespace normscore {

struct InversionConfig {
    int mean_latent_samples = 10000;
    int iterations = 200;  // desk-scale default; full runs use 2000
    double alpha = 1e5;    // noise regularizer weight
    double step_size = 0.05;
    double rampup_frac = 0.05;   // cosine-ramped schedule
    double rampdown_frac = 0.25;
    std::uint64_t seed = 0;
};

struct InversionTraceRow {
    double image_loss = 0.0;
    double reg_loss = 0.0;
    double total() const { return image_loss; }
};

struct InversionResult {
    LatentVector w;  // W space, best iterate
    NoiseMapSet noise;
    std::vector<InversionTraceRow> trace;  // one row per iteration
    Image final_image;                     // synthesize(G, w, noise), exactly
    double initial_image_loss = 0.0;
    double best_total_loss = 0.0;
};

// Mean of map_latent over n seeded draws.
LatentVector compute_mean_latent(const GeneratorModel& G, int n, std::uint64_t seed);

// Sum over maps and pyramid levels of squared lag-1 autocorrelations
// (wrap-around indexing); levels downsample by 2x2 averaging with x2 gain and
// stop once a side drops below 8. Maps smaller than 8x8 contribute nothing.
double noise_regularization(const NoiseMapSet& noise);
ad::Ptr noise_regularization_graph(const std::vector<ad::Ptr>& maps);

// Gradient descent on (w, noise maps) minimizing
//   D_LPIPS(target, G(w, noise)) + alpha * regularizer,
// with each noise map renormalized to zero mean / unit variance per
// iteration. Returns the best-loss iterate.
InversionResult invert(const GeneratorModel& G, const FeatureExtractor& fe,
                       const Image& target, const InversionConfig& cfg);

// Loss trace CSV: iter,image_loss,reg_loss,total
void write_inversion_trace(const std::string& path, const InversionResult& res,
                           double alpha);

// Inversion result container (w + noise maps), same envelope style as the
// generator checkpoint.
void save_inversion(const InversionResult& res, const std::string& path);
// Loads w and noise; trace/final image are not stored.
void load_inversion(const std::string& path, LatentVector& w, NoiseMapSet& noise);

}  // namespace normscore
