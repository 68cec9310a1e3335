#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "normscore/image.hpp"
#include "normscore/landmarks.hpp"

namespace normscore {

// Parametric description of one synthetic face. All geometry is in pixel
// coordinates of the target resolution; eye centers are horizontally
// symmetric about the face midline before pose rotation is applied.
struct FaceSpec {
    std::uint64_t seed = 0;
    double face_color[3] = {0.8, 0.6, 0.5};
    double face_a = 12.0, face_b = 15.0;  // ellipse semi-axes, px
    Vec2 eye_left, eye_right;             // pre-rotation positions
    Vec2 mouth_center;
    double mouth_half_width = 4.0;  // px
    double mouth_curvature = 0.0;   // bend of the arc, fraction of half width
    double pose_rotation_deg = 0.0;        // in [-10, 10]
    double light_dir_rad = 0.0;            // gradient direction
    double light_strength = 0.0;           // in [0, 0.3]
};

// Severity-parameterized cleft-like notch. severity = 0 must render a
// pixel-identical image to the normal face; notch geometry grows
// monotonically with severity.
struct SeveritySpec {
    double severity = 0.0;          // [0,1]
    double notch_width_frac = 0.3;  // (0, 0.5], fraction of mouth width
    double notch_offset_frac = 0.0; // [-0.3, 0.3], of mouth half width
};

struct MaskSet {
    Mask mouth_nose;
    Mask face_minus_eyes;
};

struct RenderResult {
    Image image;
    LandmarkSet landmarks;
    MaskSet masks;
};

// Draws a spec with plausible proportions at the given resolution.
FaceSpec sample_face_spec(std::uint64_t seed, int resolution);

SeveritySpec sample_severity_spec(std::uint64_t seed, double severity);

// Renders the normal face. Rejects resolutions that are not a power of two
// or are below 16.
RenderResult render_normal_face(const FaceSpec& spec, int resolution);

// Renders the same face with the anomaly; identical to the normal render
// outside the mouth/nose region.
Image inject_anomaly(const FaceSpec& spec, const SeveritySpec& sev, int resolution);

struct CohortEntry {
    int id = 0;
    std::string image_path;  // relative to the manifest directory
    double severity = 0.0;
    double rating = 0.0;  // 7 - 6*severity
    std::string mask_mouth_path;
    std::string mask_face_path;
    Vec2 eye_left, eye_right;
};

struct CohortManifest {
    std::string dir;  // directory holding manifest.csv and the images
    std::vector<CohortEntry> entries;
};

// Renders n anomalous faces with severities evenly spaced over [0.05, 0.95],
// writes PNGs, masks and manifest.csv into dir, and returns the manifest.
CohortManifest generate_eval_cohort(int n, std::uint64_t seed, int resolution,
                                    const std::string& dir);

CohortManifest load_cohort(const std::string& manifest_path);

}  // namespace normscore
