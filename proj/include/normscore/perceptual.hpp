#pragma once

#include <cstdint>
#include <vector>

#include "normscore/autograd.hpp"
#include "normscore/heatmap.hpp"
#include "normscore/image.hpp"

namespace normscore {

struct FeatureLayerSpec {
    int out_channels = 16;
    int stride = 1;
};

// Fixed multi-scale convolutional feature pyramid with seeded orthonormal
// filters. Per-location feature vectors are unit-normalized across channels;
// per-layer channel weights default to all ones. Immutable after
// construction, so concurrent use is safe.
class FeatureExtractor {
public:
    explicit FeatureExtractor(std::uint64_t seed,
                              std::vector<FeatureLayerSpec> layers = default_layers());

    static std::vector<FeatureLayerSpec> default_layers() {
        return {{12, 1}, {24, 2}, {48, 2}};
    }

    std::uint64_t seed() const { return seed_; }
    int layer_count() const { return static_cast<int>(strides_.size()); }
    const std::vector<FeatureLayerSpec>& layer_specs() const { return specs_; }

    // Normalized, channel-weighted feature nodes per layer.
    std::vector<ad::Ptr> features_graph(ad::Ptr img01) const;
    // Value-only variant for precomputing the fixed side of a comparison.
    std::vector<Tensor> features(const Tensor& img01) const;

private:
    std::uint64_t seed_;
    std::vector<FeatureLayerSpec> specs_;
    std::vector<Tensor> weights_, biases_, channel_weights_;
    std::vector<int> strides_;
};

// Sum over layers of the spatial mean of squared weighted feature
// differences. Differentiable through both image nodes.
ad::Ptr lpips_graph(const FeatureExtractor& fe, ad::Ptr x01, ad::Ptr y01);

// Same distance with one side's features frozen (the hot loop in inversion).
ad::Ptr lpips_graph_fixed(const FeatureExtractor& fe, const std::vector<Tensor>& x_feats,
                          ad::Ptr y01);

double lpips_distance(const Image& x, const Image& y, const FeatureExtractor& fe);

// Per-layer squared-difference maps upsampled to input resolution and summed;
// the spatial mean matches lpips_distance up to upsampling tolerance.
HeatMap lpips_heatmap(const Image& x, const Image& y, const FeatureExtractor& fe);

}  // namespace normscore
