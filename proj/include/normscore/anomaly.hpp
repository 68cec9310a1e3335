#pragma once

#include <utility>

#include "normscore/heatmap.hpp"
#include "normscore/image.hpp"
#include "normscore/perceptual.hpp"

namespace normscore {

enum class MaskMode { mouth_nose, face_minus_eyes };

struct ScoreConfig {
    ColorSpace color_space = ColorSpace::RGB;
    bool erosion = false;
    HeatmapMethod heatmap_method = HeatmapMethod::PSE;
    MaskMode mask_mode = MaskMode::mouth_nose;
    double epsilon = 1e-12;
    // Ambiguous in the source pipeline; default erodes the image channels
    // before differencing, the alternative erodes the heatmap instead.
    bool erode_heatmap_instead = false;
};

struct AnomalyScore {
    double S = 0.0;
    double residual_energy = 0.0;  // sqrt of masked heatmap sum
    int N = 0;                     // mask pixel count
    ScoreConfig config;
};

// Channel-summed squared pixel difference.
HeatMap pse_heatmap(const Image& x, const Image& y);

// 1 - local SSIM over an 11x11 Gaussian window (sigma 1.5) on the luminance
// plane, clamped to [0,2].
HeatMap ssim_heatmap(const Image& x, const Image& y);

// Applies the configured color transform and (by default) per-channel
// erosion to BOTH images before comparison.
std::pair<Image, Image> postprocess_pair(const Image& x, const Image& y,
                                         const ScoreConfig& cfg);

// S = -ln(max(sqrt(masked heatmap sum)/N, epsilon)); higher = closer to
// normal. Rejects empty masks.
AnomalyScore anomaly_score(const HeatMap& hm, const Mask& mask, const ScoreConfig& cfg);

// postprocess -> heatmap -> score. fe is required for the LPIPS method only.
std::pair<AnomalyScore, HeatMap> score_face(const Image& original, const Image& normalized,
                                            const Mask& mask, const ScoreConfig& cfg,
                                            const FeatureExtractor* fe = nullptr);

// Masked squared-difference energy; the over-adaptation probe.
double masked_pse_energy(const Image& a, const Image& b, const Mask& mask);

}  // namespace normscore
