#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "normscore/generator.hpp"
#include "normscore/image.hpp"
#include "normscore/perceptual.hpp"

namespace normscore {

struct AdaptationConfig {
    int iterations = 50;
    double step_size = 2e-3;
    bool track_anomaly_reconstruction = false;
    std::vector<int> snapshot_iterations;  // e.g. {50,100,...,500}
    std::uint64_t seed = 0;
};

struct AdaptationTraceRow {
    double lpips = 0.0;
    double l2 = 0.0;
    double total() const { return lpips + l2; }
};

struct AdaptationSnapshot {
    int iteration = 0;
    Image image;
};

struct AdaptationResult {
    GeneratorModel adapted;  // G'
    Image normalized;        // synthesize(G', w, noise), exactly
    std::vector<AdaptationTraceRow> trace;
    std::vector<AdaptationSnapshot> snapshots;
    // Masked target-vs-output squared pixel error per iteration, filled when
    // track_anomaly_reconstruction is set and an ROI mask is supplied.
    std::vector<double> roi_pse_trace;
};

struct CombinedLoss {
    double total = 0.0;
    double lpips = 0.0;
    double l2 = 0.0;
};

// D_LPIPS(x, x') + mean squared pixel difference.
CombinedLoss combined_loss(const Image& x, const Image& x_prime, const FeatureExtractor& fe);
ad::Ptr combined_loss_graph(const FeatureExtractor& fe, const std::vector<Tensor>& x_feats,
                            const Tensor& x_pixels, ad::Ptr y01, ad::Ptr* lpips_out,
                            ad::Ptr* l2_out);

// Fine-tunes a copy of the synthesis parameters with (w, noise) frozen.
// G itself is never touched; iterations = 0 returns G' == G.
AdaptationResult adapt(const GeneratorModel& G, const LatentVector& w,
                       const NoiseMapSet& noise, const Image& target,
                       const FeatureExtractor& fe, const AdaptationConfig& cfg,
                       const Mask* roi = nullptr);

void write_adaptation_trace(const std::string& path, const AdaptationResult& res);

}  // namespace normscore
