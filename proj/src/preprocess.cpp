#include "normscore/preprocess.hpp"

#include <cmath>

#include "normscore/kernels.hpp"

namespace normscore {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct InvMap {
    // output (X,Y) -> source: origin + Rot(theta) * (X,Y) / scale
    Vec2 origin;
    double cos_t, sin_t, inv_scale;
    Vec2 operator()(double X, double Y) const {
        return {origin.x + (cos_t * X - sin_t * Y) * inv_scale,
                origin.y + (sin_t * X + cos_t * Y) * inv_scale};
    }
};

}  // namespace

int target_interocular_px(int target_resolution) {
    return static_cast<int>(std::lround(target_resolution * 100.0 / 1024.0));
}

Image extend_background(const Image& img, const Mask& face_mask, double sigma) {
    const int h = img.height(), w = img.width();
    auto mirror = [](int v, int n) {
        int u = v - n;
        if (u < 0) u = -u - 1;
        if (u >= n) u = 2 * n - 1 - u;
        return u;
    };
    Tensor canvas(std::vector<int>{3, 3 * h, 3 * w});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 3 * h; ++y)
            for (int x = 0; x < 3 * w; ++x)
                canvas.at(c, y, x) = img.at(c, mirror(y, h), mirror(x, w));

    Tensor alpha(std::vector<int>{3 * h, 3 * w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) alpha.at(y + h, x + w) = face_mask.weights().at(y, x);
    alpha = gaussian_blur(alpha, sigma);

    Tensor out(std::vector<int>{3, 3 * h, 3 * w});
    for (int c = 0; c < 3; ++c) {
        Tensor ch(std::vector<int>{3 * h, 3 * w});
        for (int y = 0; y < 3 * h; ++y)
            for (int x = 0; x < 3 * w; ++x) ch.at(y, x) = canvas.at(c, y, x);
        const Tensor blurred = gaussian_blur(ch, sigma);
        for (int y = 0; y < 3 * h; ++y)
            for (int x = 0; x < 3 * w; ++x) {
                const double a = alpha.at(y, x);
                out.at(c, y, x) = a * ch.at(y, x) + (1.0 - a) * blurred.at(y, x);
            }
    }
    return Image(std::move(out), img.color_space());
}

AlignResult align_face(const Image& img, const LandmarkSet& lm, int target_resolution) {
    lm.validate(img.width(), img.height());
    const double dx = lm.eye_right.x - lm.eye_left.x;
    const double dy = lm.eye_right.y - lm.eye_left.y;
    const double dist = std::hypot(dx, dy);
    if (dist < 1e-9) throw std::invalid_argument("align_face: coincident eye landmarks");

    const int d_target = target_interocular_px(target_resolution);
    const double theta = std::atan2(dy, dx);  // eye line angle in the source
    const double scale = d_target / dist;
    const Vec2 src_mid{0.5 * (lm.eye_left.x + lm.eye_right.x),
                       0.5 * (lm.eye_left.y + lm.eye_right.y)};
    const Vec2 dst_mid{(target_resolution - 1) / 2.0, 0.40 * (target_resolution - 1)};

    AlignmentParams params;
    params.rotation_deg = -theta * 180.0 / kPi;
    params.scale = scale;
    params.target_interocular = d_target;
    params.target_resolution = target_resolution;
    // source position of output (0,0): src_mid + Rot(theta)*(-dst_mid)/scale
    const double ct = std::cos(theta), st = std::sin(theta);
    params.crop_origin = {src_mid.x + (ct * -dst_mid.x - st * -dst_mid.y) / scale,
                          src_mid.y + (st * -dst_mid.x + ct * -dst_mid.y) / scale};

    const InvMap inv{params.crop_origin, ct, st, 1.0 / scale};

    // decide whether the crop window stays inside the source canvas
    bool inside = true;
    const double r1 = target_resolution - 1.0;
    for (const auto& corner : {Vec2{0, 0}, Vec2{r1, 0}, Vec2{0, r1}, Vec2{r1, r1}}) {
        const Vec2 s = inv(corner.x, corner.y);
        if (s.x < 0.0 || s.x > img.width() - 1.0 || s.y < 0.0 || s.y > img.height() - 1.0)
            inside = false;
    }

    AlignResult res;
    res.params = params;
    res.background_extended = !inside;

    const Image* src = &img;
    Image extended;
    double off_x = 0.0, off_y = 0.0;
    if (!inside) {
        // approximate face disk from the landmarks for the alpha matte
        Tensor fm(std::vector<int>{img.height(), img.width()});
        const double a = 2.0 * dist, b = 2.5 * dist;
        const double cx = src_mid.x, cy = src_mid.y + 0.7 * dist;
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) {
                const double nx = (x - cx) / a, ny = (y - cy) / b;
                fm.at(y, x) = nx * nx + ny * ny <= 1.0 ? 1.0 : 0.0;
            }
        extended = extend_background(img, Mask(std::move(fm)), 0.04 * img.width());
        src = &extended;
        off_x = img.width();
        off_y = img.height();
    }

    Tensor out(std::vector<int>{3, target_resolution, target_resolution});
    for (int c = 0; c < 3; ++c) {
        const Tensor ch = src->channel(c);
        for (int y = 0; y < target_resolution; ++y)
            for (int x = 0; x < target_resolution; ++x) {
                const Vec2 s = inv(x, y);
                out.at(c, y, x) = kernels::sample_bilinear(ch, s.y + off_y, s.x + off_x);
            }
    }
    res.image = Image(std::move(out), img.color_space());

    auto fwd = [&](const Vec2& p) -> Vec2 {
        const double px = p.x - src_mid.x, py = p.y - src_mid.y;
        return {dst_mid.x + (ct * px + st * py) * scale,
                dst_mid.y + (-st * px + ct * py) * scale};
    };
    res.landmarks.eye_left = fwd(lm.eye_left);
    res.landmarks.eye_right = fwd(lm.eye_right);
    res.landmarks.mouth_center = fwd(lm.mouth_center);
    res.landmarks.source = lm.source;
    return res;
}

Mask warp_mask(const Mask& mask, const AlignmentParams& params) {
    const double t = -params.rotation_deg * kPi / 180.0;
    const InvMap inv{params.crop_origin, std::cos(t), std::sin(t), 1.0 / params.scale};
    const int n = params.target_resolution;
    Tensor out(std::vector<int>{n, n});
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const Vec2 s = inv(x, y);
            double v = 0.0;
            if (s.x >= 0.0 && s.x <= mask.width() - 1.0 && s.y >= 0.0 &&
                s.y <= mask.height() - 1.0)
                v = kernels::sample_bilinear(mask.weights(), s.y, s.x);
            out.at(y, x) = v >= 0.5 ? 1.0 : 0.0;
        }
    return Mask(std::move(out));
}

FaceRatioStatus check_face_ratio(const Image& img, const FaceBox& box, double lo, double hi) {
    if (box.x < 0 || box.y < 0 || box.width <= 0 || box.height <= 0 ||
        box.x + box.width > img.width() || box.y + box.height > img.height())
        throw std::invalid_argument("check_face_ratio: box outside image");
    const double frac = static_cast<double>(box.width) * box.height /
                        (static_cast<double>(img.width()) * img.height());
    if (frac > hi) return FaceRatioStatus::background_deficit;
    if (frac < lo) return FaceRatioStatus::background_excess;
    return FaceRatioStatus::ok;
}

}  // namespace normscore
