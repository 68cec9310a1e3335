#include "normscore/anomaly.hpp"

#include <cmath>

#include "normscore/kernels.hpp"

namespace normscore {

HeatMap pse_heatmap(const Image& x, const Image& y) {
    if (!x.same_shape(y)) throw std::invalid_argument("pse_heatmap: shape mismatch");
    if (x.color_space() != y.color_space())
        throw std::invalid_argument("pse_heatmap: color space mismatch");
    Tensor out(std::vector<int>{x.height(), x.width()});
    for (int yy = 0; yy < x.height(); ++yy)
        for (int xx = 0; xx < x.width(); ++xx) {
            double acc = 0.0;
            for (int c = 0; c < 3; ++c) {
                const double d = x.at(c, yy, xx) - y.at(c, yy, xx);
                acc += d * d;
            }
            out.at(yy, xx) = acc;
        }
    HeatMap hm;
    hm.values = std::move(out);
    hm.method = HeatmapMethod::PSE;
    hm.color_space = x.color_space();
    return hm;
}

namespace {

Tensor luminance(const Image& img) {
    if (img.color_space() == ColorSpace::YCbCr) return img.channel(0);
    Tensor out(std::vector<int>{img.height(), img.width()});
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            out.at(y, x) = (img.at(0, y, x) + img.at(1, y, x) + img.at(2, y, x)) / 3.0;
    return out;
}

}  // namespace

HeatMap ssim_heatmap(const Image& x, const Image& y) {
    if (!x.same_shape(y)) throw std::invalid_argument("ssim_heatmap: shape mismatch");
    if (x.color_space() != y.color_space())
        throw std::invalid_argument("ssim_heatmap: color space mismatch");
    const Tensor a = luminance(x), b = luminance(y);
    const double sigma = 1.5;  // 11-tap window after the 3*sigma truncation
    const Tensor mu_a = gaussian_blur(a, sigma);
    const Tensor mu_b = gaussian_blur(b, sigma);

    Tensor aa(a.shape()), bb(a.shape()), ab(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    const Tensor m_aa = gaussian_blur(aa, sigma);
    const Tensor m_bb = gaussian_blur(bb, sigma);
    const Tensor m_ab = gaussian_blur(ab, sigma);

    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;  // unit dynamic range
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) {
        const double va = m_aa[i] - mu_a[i] * mu_a[i];
        const double vb = m_bb[i] - mu_b[i] * mu_b[i];
        const double cab = m_ab[i] - mu_a[i] * mu_b[i];
        const double s = ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cab + c2)) /
                         ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
        out[i] = std::clamp(1.0 - s, 0.0, 2.0);
    }
    HeatMap hm;
    hm.values = std::move(out);
    hm.method = HeatmapMethod::SSIM;
    hm.color_space = x.color_space();
    return hm;
}

std::pair<Image, Image> postprocess_pair(const Image& x, const Image& y,
                                         const ScoreConfig& cfg) {
    if (x.color_space() != ColorSpace::RGB || y.color_space() != ColorSpace::RGB)
        throw std::invalid_argument("postprocess_pair: expects RGB inputs");
    Image a = x, b = y;
    if (cfg.color_space == ColorSpace::YCbCr) {
        a = rgb_to_ycbcr(a);
        b = rgb_to_ycbcr(b);
    }
    if (cfg.erosion && !cfg.erode_heatmap_instead) {
        for (int c = 0; c < 3; ++c) {
            a.set_channel(c, erode3x3(a.channel(c)));
            b.set_channel(c, erode3x3(b.channel(c)));
        }
    }
    return {std::move(a), std::move(b)};
}

AnomalyScore anomaly_score(const HeatMap& hm, const Mask& mask, const ScoreConfig& cfg) {
    if (!hm.values.same_shape(mask.weights()))
        throw std::invalid_argument("anomaly_score: shape mismatch");
    const int n = mask.pixel_count();
    if (n < 1) throw std::invalid_argument("anomaly_score: empty mask");
    if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("anomaly_score: epsilon must be > 0");
    double sum = 0.0;
    for (std::size_t i = 0; i < hm.values.numel(); ++i)
        sum += hm.values[i] * mask.weights()[i];
    AnomalyScore s;
    s.residual_energy = std::sqrt(sum);
    s.N = n;
    s.config = cfg;
    s.S = -std::log(std::max(s.residual_energy / n, cfg.epsilon));
    return s;
}

std::pair<AnomalyScore, HeatMap> score_face(const Image& original, const Image& normalized,
                                            const Mask& mask, const ScoreConfig& cfg,
                                            const FeatureExtractor* fe) {
    if (!original.same_shape(normalized))
        throw std::invalid_argument("score_face: shape mismatch");
    const auto [a, b] = postprocess_pair(original, normalized, cfg);
    HeatMap hm;
    switch (cfg.heatmap_method) {
        case HeatmapMethod::PSE:
            hm = pse_heatmap(a, b);
            break;
        case HeatmapMethod::SSIM:
            hm = ssim_heatmap(a, b);
            break;
        case HeatmapMethod::LPIPS:
            if (!fe) throw std::invalid_argument("score_face: LPIPS needs an extractor");
            hm = lpips_heatmap(a, b, *fe);
            break;
    }
    if (cfg.erosion && cfg.erode_heatmap_instead) hm.values = erode3x3(hm.values);
    hm.eroded = cfg.erosion;
    return {anomaly_score(hm, mask, cfg), std::move(hm)};
}

double masked_pse_energy(const Image& a, const Image& b, const Mask& mask) {
    const HeatMap hm = pse_heatmap(a, b);
    double e = 0.0;
    for (std::size_t i = 0; i < hm.values.numel(); ++i)
        e += hm.values[i] * mask.weights()[i];
    return e;
}

}  // namespace normscore
