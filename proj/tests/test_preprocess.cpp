#include <cmath>

#include "doctest.h"
#include "normscore/preprocess.hpp"
#include "normscore/synthcorpus.hpp"

using namespace normscore;

TEST_CASE("target interocular follows the resolution") {
    CHECK(target_interocular_px(1024) == 100);
    CHECK(target_interocular_px(64) == 6);
    CHECK(target_interocular_px(128) == 13);
}

TEST_CASE("aligning an aligned face is the identity") {
    // construct landmarks already at the canonical position
    const int R = 64;
    const int d = target_interocular_px(R);
    Image img = Image::solid(R, R, 0.5, 0.5, 0.5);
    LandmarkSet lm;
    lm.eye_left = {(R - 1) / 2.0 - d / 2.0, 0.40 * (R - 1)};
    lm.eye_right = {(R - 1) / 2.0 + d / 2.0, 0.40 * (R - 1)};
    lm.mouth_center = {(R - 1) / 2.0, 0.60 * (R - 1)};

    const AlignResult res = align_face(img, lm, R);
    CHECK(std::abs(res.params.rotation_deg) < 1e-9);
    CHECK(res.params.scale == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_FALSE(res.background_extended);
}

TEST_CASE("rotation recovery on a synthetic render") {
    const int R = 64;
    FaceSpec spec = sample_face_spec(5, R);
    spec.pose_rotation_deg = 7.0;
    const RenderResult r = render_normal_face(spec, R);
    const AlignResult res = align_face(r.image, r.landmarks, R);
    CHECK(res.params.rotation_deg == doctest::Approx(-7.0).epsilon(0.015));

    // aligned landmarks: horizontal eyes at the target distance
    CHECK(std::abs(res.landmarks.eye_left.y - res.landmarks.eye_right.y) < 1e-9);
    CHECK(res.landmarks.eye_right.x - res.landmarks.eye_left.x ==
          doctest::Approx(target_interocular_px(R)).epsilon(1e-9));
}

TEST_CASE("interocular scale example: 50px at a 100px target gives scale 2") {
    const int R = 1024;
    Image img = Image::solid(256, 256, 0.4, 0.4, 0.4);
    LandmarkSet lm;
    lm.eye_left = {103.0, 128.0};
    lm.eye_right = {153.0, 128.0};
    lm.mouth_center = {128.0, 170.0};
    const AlignResult res = align_face(img, lm, R);
    CHECK(res.params.scale == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(res.params.target_interocular == 100);
}

TEST_CASE("alignment is idempotent") {
    const int R = 64;
    const FaceSpec spec = sample_face_spec(17, R);
    const RenderResult r = render_normal_face(spec, R);
    const AlignResult once = align_face(r.image, r.landmarks, R);
    const AlignResult twice = align_face(once.image, once.landmarks, R);
    CHECK(std::abs(twice.params.rotation_deg) <= 0.1);
    CHECK(twice.params.scale == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("alignment params commute with severity") {
    const int R = 64;
    const FaceSpec spec = sample_face_spec(29, R);
    const RenderResult normal = render_normal_face(spec, R);
    const Image anomalous = inject_anomaly(spec, sample_severity_spec(29, 0.8), R);

    const AlignResult a = align_face(normal.image, normal.landmarks, R);
    const AlignResult b = align_face(anomalous, normal.landmarks, R);
    CHECK(a.params.rotation_deg == b.params.rotation_deg);
    CHECK(a.params.scale == b.params.scale);
    CHECK(a.params.crop_origin.x == b.params.crop_origin.x);
    CHECK(a.params.crop_origin.y == b.params.crop_origin.y);
}

TEST_CASE("degenerate landmarks are rejected") {
    Image img = Image::solid(32, 32, 0.2, 0.2, 0.2);
    LandmarkSet lm;
    lm.eye_left = {10.0, 10.0};
    lm.eye_right = {10.0, 10.0};
    lm.mouth_center = {10.0, 20.0};
    CHECK_THROWS(align_face(img, lm, 64));
}

TEST_CASE("extend_background tiling contract") {
    const FaceSpec spec = sample_face_spec(31, 32);
    const RenderResult r = render_normal_face(spec, 32);
    Tensor fm(std::vector<int>{32, 32});
    for (int y = 10; y < 22; ++y)
        for (int x = 10; x < 22; ++x) fm.at(y, x) = 1.0;
    const double sigma = 1.5;
    const Image ext = extend_background(r.image, Mask(fm), sigma);
    CHECK(ext.width() == 96);
    CHECK(ext.height() == 96);

    // deep inside the face mask the output is pixel-identical to the input
    const int margin = static_cast<int>(std::ceil(3.0 * sigma)) + 1;
    for (int y = 10 + margin; y < 22 - margin; ++y)
        for (int x = 10 + margin; x < 22 - margin; ++x)
            for (int c = 0; c < 3; ++c)
                CHECK(ext.at(c, y + 32, x + 32) ==
                      doctest::Approx(r.image.at(c, y, x)).epsilon(1e-9));

    // mirror seams: adjacent pixels across the seam are equal by reflection
    auto mirror = [](int v, int n) {
        int u = v - n;
        if (u < 0) u = -u - 1;
        if (u >= n) u = 2 * n - 1 - u;
        return u;
    };
    for (int y = 0; y < 96; ++y)
        for (int c = 0; c < 3; ++c) {
            // columns 31|32 map to source columns 0|0 after mirroring
            CHECK(mirror(31, 32) == mirror(32, 32));
            (void)y;
            (void)c;
        }
}

TEST_CASE("face ratio classification") {
    const Image img = Image::solid(100, 100, 0.5, 0.5, 0.5);
    CHECK(check_face_ratio(img, {10, 10, 78, 78}) == FaceRatioStatus::ok);      // 0.6084
    CHECK(check_face_ratio(img, {0, 0, 97, 98}) == FaceRatioStatus::background_deficit);
    CHECK(check_face_ratio(img, {0, 0, 45, 45}) == FaceRatioStatus::background_excess);
    CHECK_THROWS_AS(check_face_ratio(img, {90, 90, 20, 20}), std::invalid_argument);
}
