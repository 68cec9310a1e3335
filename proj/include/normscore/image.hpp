#pragma once

#include <stdexcept>

#include "normscore/tensor.hpp"

namespace normscore {

enum class ColorSpace { RGB, YCbCr };

// Immutable-by-convention color image. Samples are doubles in [0,1]; for
// YCbCr that is the BT.601 digital range divided by 255. The color_space tag
// is maintained by the constructors and conversion functions.
class Image {
public:
    Image() = default;
    Image(Tensor pixels, ColorSpace cs);  // pixels: (3,H,W)

    static Image solid(int height, int width, double r, double g, double b);

    int width() const { return pixels_.dim(2); }
    int height() const { return pixels_.dim(1); }
    ColorSpace color_space() const { return cs_; }

    const Tensor& pixels() const { return pixels_; }
    Tensor& pixels_mut() { return pixels_; }

    double at(int c, int y, int x) const { return pixels_.at(c, y, x); }
    void set(int c, int y, int x, double v) { pixels_.at(c, y, x) = v; }

    Tensor channel(int c) const;
    void set_channel(int c, const Tensor& ch);

    bool same_shape(const Image& o) const { return pixels_.same_shape(o.pixels_); }

private:
    Tensor pixels_{std::vector<int>{3, 1, 1}};
    ColorSpace cs_ = ColorSpace::RGB;
};

// Weight mask over an image plane; weights in [0,1].
class Mask {
public:
    Mask() = default;
    explicit Mask(Tensor weights);  // (H,W)

    int width() const { return weights_.dim(1); }
    int height() const { return weights_.dim(0); }
    const Tensor& weights() const { return weights_; }
    Tensor& weights_mut() { return weights_; }

    // Number of strictly positive weights.
    int pixel_count() const;

private:
    Tensor weights_{std::vector<int>{1, 1}};
};

// BT.601 transform; output stored divided by 255. Rejects non-RGB input.
Image rgb_to_ycbcr(const Image& img);

// 3x3 minimum filter with edge replication on a single channel.
Tensor erode3x3(const Tensor& channel);

// Separable Gaussian blur, kernel truncated at 3*sigma, edge replication.
Tensor gaussian_blur(const Tensor& channel, double sigma);

// Elementwise product with the mask weights.
Image apply_mask(const Image& img, const Mask& mask);
Tensor apply_mask(const Tensor& map, const Mask& mask);

}  // namespace normscore
