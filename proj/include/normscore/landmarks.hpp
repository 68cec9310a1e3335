#pragma once

#include <stdexcept>

namespace normscore {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

enum class LandmarkSource { synthetic_exact, external };

// Eye centers and mouth center in pixel coordinates of the host image.
struct LandmarkSet {
    Vec2 eye_left;   // eye_left.x < eye_right.x
    Vec2 eye_right;
    Vec2 mouth_center;
    LandmarkSource source = LandmarkSource::synthetic_exact;

    void validate(int width, int height) const {
        if (!(eye_left.x < eye_right.x))
            throw std::invalid_argument("LandmarkSet: eyes not ordered left<right");
        auto inside = [&](const Vec2& p) {
            return p.x >= 0 && p.x <= width - 1 && p.y >= 0 && p.y <= height - 1;
        };
        if (!inside(eye_left) || !inside(eye_right) || !inside(mouth_center))
            throw std::invalid_argument("LandmarkSet: coordinates outside image bounds");
    }
};

class Image;

// Landmark acquisition interface. The synthetic provider returns exact
// coordinates from the rendering geometry; external detectors can plug in
// behind the same call.
class LandmarkProvider {
public:
    virtual ~LandmarkProvider() = default;
    virtual LandmarkSet landmarks(const Image& img) const = 0;
};

}  // namespace normscore
