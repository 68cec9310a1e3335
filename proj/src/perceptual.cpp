#include "normscore/perceptual.hpp"

#include <cmath>

#include "normscore/kernels.hpp"
#include "normscore/rng.hpp"

namespace normscore {

namespace nad = ad;

namespace {

constexpr double kNormEps = 1e-10;

// Rows orthonormalized by Gram-Schmidt over the flattened (Cin*3*3) extent,
// then scaled so the tanh nonlinearity stays in its responsive range.
Tensor orthonormal_conv_init(int cout, int cin, Rng& rng, double gain) {
    const int n = cin * 9;
    Tensor w = Tensor::randn({cout, cin, 3, 3}, rng);
    for (int r = 0; r < cout; ++r) {
        double* row = w.data() + static_cast<std::size_t>(r) * n;
        for (int p = 0; p < r; ++p) {
            const double* prev = w.data() + static_cast<std::size_t>(p) * n;
            double dot = 0.0;
            for (int i = 0; i < n; ++i) dot += row[i] * prev[i];
            for (int i = 0; i < n; ++i) row[i] -= dot * prev[i];
        }
        double norm = 0.0;
        for (int i = 0; i < n; ++i) norm += row[i] * row[i];
        norm = std::sqrt(std::max(norm, 1e-12));
        for (int i = 0; i < n; ++i) row[i] /= norm;
    }
    w *= gain;
    return w;
}

}  // namespace

FeatureExtractor::FeatureExtractor(std::uint64_t seed, std::vector<FeatureLayerSpec> layers)
    : seed_(seed), specs_(layers) {
    Rng rng(seed);
    int cin = 3;
    for (const auto& spec : layers) {
        weights_.push_back(orthonormal_conv_init(spec.out_channels, cin, rng, 2.2));
        Tensor b = Tensor::randn({spec.out_channels}, rng, 0.15);
        biases_.push_back(std::move(b));
        channel_weights_.push_back(Tensor::full({spec.out_channels}, 1.0));
        strides_.push_back(spec.stride);
        cin = spec.out_channels;
    }
}

std::vector<ad::Ptr> FeatureExtractor::features_graph(ad::Ptr img01) const {
    // map [0,1] to the symmetric range the filters were scaled for
    ad::Ptr x = nad::add_scalar(nad::mul_scalar(img01, 2.0), -1.0);
    std::vector<ad::Ptr> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        x = nad::tanh_op(nad::conv2d(x, nad::constant(weights_[l]),
                                     nad::constant(biases_[l]), strides_[l], 1));
        // unit-normalize feature vectors across channels at each location
        auto inv_norm = nad::rsqrt(nad::channel_sum(nad::square(x)), kNormEps);
        auto xhat = nad::pixel_scale(x, inv_norm);
        out.push_back(nad::channel_scale(xhat, nad::constant(channel_weights_[l])));
    }
    return out;
}

std::vector<Tensor> FeatureExtractor::features(const Tensor& img01) const {
    auto nodes = features_graph(nad::constant(img01));
    std::vector<Tensor> out;
    out.reserve(nodes.size());
    for (const auto& n : nodes) out.push_back(n->value);
    return out;
}

ad::Ptr lpips_graph(const FeatureExtractor& fe, ad::Ptr x01, ad::Ptr y01) {
    const auto fx = fe.features_graph(x01);
    const auto fy = fe.features_graph(y01);
    ad::Ptr total;
    for (std::size_t l = 0; l < fx.size(); ++l) {
        auto term = nad::mean(nad::channel_sum(nad::square(nad::sub(fx[l], fy[l]))));
        total = total ? nad::add(total, term) : term;
    }
    return total;
}

ad::Ptr lpips_graph_fixed(const FeatureExtractor& fe, const std::vector<Tensor>& x_feats,
                          ad::Ptr y01) {
    const auto fy = fe.features_graph(y01);
    ad::Ptr total;
    for (std::size_t l = 0; l < fy.size(); ++l) {
        auto term = nad::mean(
            nad::channel_sum(nad::square(nad::sub(nad::constant(x_feats[l]), fy[l]))));
        total = total ? nad::add(total, term) : term;
    }
    return total;
}

double lpips_distance(const Image& x, const Image& y, const FeatureExtractor& fe) {
    if (!x.same_shape(y)) throw std::invalid_argument("lpips_distance: shape mismatch");
    if (x.color_space() != y.color_space())
        throw std::invalid_argument("lpips_distance: color space mismatch");
    return lpips_graph(fe, nad::constant(x.pixels()), nad::constant(y.pixels()))->value[0];
}

HeatMap lpips_heatmap(const Image& x, const Image& y, const FeatureExtractor& fe) {
    if (!x.same_shape(y)) throw std::invalid_argument("lpips_heatmap: shape mismatch");
    if (x.color_space() != y.color_space())
        throw std::invalid_argument("lpips_heatmap: color space mismatch");
    const auto fx = fe.features(x.pixels());
    const auto fy = fe.features(y.pixels());
    Tensor acc(std::vector<int>{x.height(), x.width()});
    for (std::size_t l = 0; l < fx.size(); ++l) {
        const Tensor& a = fx[l];
        const Tensor& b = fy[l];
        Tensor layer(std::vector<int>{a.dim(1), a.dim(2)});
        for (int c = 0; c < a.dim(0); ++c)
            for (int yy = 0; yy < a.dim(1); ++yy)
                for (int xx = 0; xx < a.dim(2); ++xx) {
                    const double d = a.at(c, yy, xx) - b.at(c, yy, xx);
                    layer.at(yy, xx) += d * d;
                }
        if (layer.dim(0) != x.height() || layer.dim(1) != x.width()) {
            Tensor up(std::vector<int>{x.height(), x.width()});
            kernels::resize_bilinear(layer, up);
            acc += up;
        } else {
            acc += layer;
        }
    }
    HeatMap hm;
    hm.values = std::move(acc);
    hm.method = HeatmapMethod::LPIPS;
    hm.color_space = x.color_space();
    return hm;
}

}  // namespace normscore
