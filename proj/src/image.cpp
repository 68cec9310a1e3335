#include "normscore/image.hpp"

#include <cmath>

#include "normscore/kernels.hpp"

namespace normscore {

Image::Image(Tensor pixels, ColorSpace cs) : pixels_(std::move(pixels)), cs_(cs) {
    if (pixels_.rank() != 3 || pixels_.dim(0) != 3)
        throw std::invalid_argument("Image: pixels must be (3,H,W)");
    if (!pixels_.all_finite()) throw std::invalid_argument("Image: non-finite samples");
    if (cs_ == ColorSpace::RGB) {
        for (std::size_t i = 0; i < pixels_.numel(); ++i) {
            double& v = pixels_[i];
            v = std::clamp(v, 0.0, 1.0);
        }
    }
}

Image Image::solid(int height, int width, double r, double g, double b) {
    Tensor px(std::vector<int>{3, height, width});
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            px.at(0, y, x) = r;
            px.at(1, y, x) = g;
            px.at(2, y, x) = b;
        }
    return Image(std::move(px), ColorSpace::RGB);
}

Tensor Image::channel(int c) const {
    Tensor ch(std::vector<int>{height(), width()});
    for (int y = 0; y < height(); ++y)
        for (int x = 0; x < width(); ++x) ch.at(y, x) = pixels_.at(c, y, x);
    return ch;
}

void Image::set_channel(int c, const Tensor& ch) {
    for (int y = 0; y < height(); ++y)
        for (int x = 0; x < width(); ++x) pixels_.at(c, y, x) = ch.at(y, x);
}

Mask::Mask(Tensor weights) : weights_(std::move(weights)) {
    if (weights_.rank() != 2) throw std::invalid_argument("Mask: weights must be (H,W)");
    for (std::size_t i = 0; i < weights_.numel(); ++i)
        if (!(weights_[i] >= 0.0 && weights_[i] <= 1.0))
            throw std::invalid_argument("Mask: weights must lie in [0,1]");
}

int Mask::pixel_count() const {
    int n = 0;
    for (std::size_t i = 0; i < weights_.numel(); ++i)
        if (weights_[i] > 0.0) ++n;
    return n;
}

Image rgb_to_ycbcr(const Image& img) {
    if (img.color_space() != ColorSpace::RGB)
        throw std::invalid_argument("rgb_to_ycbcr: input must be RGB");
    Tensor out(std::vector<int>{3, img.height(), img.width()});
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const double r = img.at(0, y, x), g = img.at(1, y, x), b = img.at(2, y, x);
            const double yy = 16.0 + 65.481 * r + 128.553 * g + 24.966 * b;
            const double cb = 128.0 - 37.797 * r - 74.203 * g + 112.0 * b;
            const double cr = 128.0 + 112.0 * r - 93.786 * g - 18.214 * b;
            out.at(0, y, x) = yy / 255.0;
            out.at(1, y, x) = cb / 255.0;
            out.at(2, y, x) = cr / 255.0;
        }
    }
    return Image(std::move(out), ColorSpace::YCbCr);
}

Tensor erode3x3(const Tensor& channel) {
    Tensor out(channel.shape());
    kernels::erode3x3(channel, out);
    return out;
}

Tensor gaussian_blur(const Tensor& channel, double sigma) {
    Tensor out(channel.shape());
    kernels::gaussian_blur(channel, sigma, out);
    return out;
}

Image apply_mask(const Image& img, const Mask& mask) {
    if (mask.height() != img.height() || mask.width() != img.width())
        throw std::invalid_argument("apply_mask: shape mismatch");
    Tensor out = img.pixels();
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) out.at(c, y, x) *= mask.weights().at(y, x);
    return Image(std::move(out), img.color_space());
}

Tensor apply_mask(const Tensor& map, const Mask& mask) {
    if (!map.same_shape(mask.weights()))
        throw std::invalid_argument("apply_mask: shape mismatch");
    Tensor out = map;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= mask.weights()[i];
    return out;
}

}  // namespace normscore
