#pragma once

#include "normscore/image.hpp"

namespace normscore {

enum class HeatmapMethod { PSE, SSIM, LPIPS };

// Dense nonnegative per-pixel abnormality map plus how it was produced.
struct HeatMap {
    Tensor values;  // (H,W), nonnegative
    HeatmapMethod method = HeatmapMethod::PSE;
    ColorSpace color_space = ColorSpace::RGB;
    bool eroded = false;
};

}  // namespace normscore
