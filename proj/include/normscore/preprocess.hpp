#pragma once

#include "normscore/image.hpp"
#include "normscore/landmarks.hpp"

namespace normscore {

struct AlignmentParams {
    double rotation_deg = 0.0;  // rotation applied to the image
    double scale = 1.0;
    Vec2 crop_origin;           // source position of output pixel (0,0)
    int target_interocular = 0; // round(target_resolution * 100/1024)
    int target_resolution = 0;
};

struct AlignResult {
    Image image;
    LandmarkSet landmarks;  // transformed into the aligned frame
    AlignmentParams params;
    bool background_extended = false;
};

int target_interocular_px(int target_resolution);

// Rotates eyes horizontal, scales the interocular distance to the canonical
// value and crops a target_resolution square around the canonical eye
// position. Falls back to a mirrored, blurred background extension when the
// crop window leaves the source canvas.
AlignResult align_face(const Image& img, const LandmarkSet& lm, int target_resolution);

// Warps a mask through the same transform (out-of-canvas samples become 0)
// and re-binarizes at 0.5.
Mask warp_mask(const Mask& mask, const AlignmentParams& params);

// Triples the canvas with mirrored replicates; a blurred copy of the face
// mask acts as the alpha matte between the sharp foreground and the blurred
// surround. Output is 3H x 3W.
Image extend_background(const Image& img, const Mask& face_mask, double sigma);

enum class FaceRatioStatus { ok, background_excess, background_deficit };

struct FaceBox {
    int x = 0, y = 0, width = 0, height = 0;
};

FaceRatioStatus check_face_ratio(const Image& img, const FaceBox& box, double lo = 0.5,
                                 double hi = 0.7);

}  // namespace normscore
