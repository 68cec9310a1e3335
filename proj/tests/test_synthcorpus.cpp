#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "normscore/io.hpp"
#include "normscore/synthcorpus.hpp"

using namespace normscore;

namespace {

double masked_sq_diff(const Image& a, const Image& b, const Mask& m) {
    double e = 0.0;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) {
            if (m.weights().at(y, x) <= 0.0) continue;
            for (int c = 0; c < 3; ++c) {
                const double d = a.at(c, y, x) - b.at(c, y, x);
                e += d * d;
            }
        }
    return e;
}

}  // namespace

TEST_CASE("render determinism and symmetry") {
    const FaceSpec spec = sample_face_spec(7, 64);
    const RenderResult a = render_normal_face(spec, 64);
    const RenderResult b = render_normal_face(spec, 64);
    for (std::size_t i = 0; i < a.image.pixels().numel(); ++i)
        CHECK(a.image.pixels()[i] == b.image.pixels()[i]);

    FaceSpec flat = spec;
    flat.pose_rotation_deg = 0.0;
    const RenderResult r = render_normal_face(flat, 64);
    CHECK(r.landmarks.eye_left.y == doctest::Approx(r.landmarks.eye_right.y).epsilon(1e-12));

    CHECK_THROWS_AS(render_normal_face(spec, 48), std::invalid_argument);
    CHECK_THROWS_AS(render_normal_face(spec, 8), std::invalid_argument);
}

TEST_CASE("corpus statistics stay in a sane band") {
    // 500-spec regression: frozen from the first corpus build
    double mean[3] = {0, 0, 0};
    const int n = 500;
    for (int i = 0; i < n; ++i) {
        const FaceSpec spec = sample_face_spec(Rng::derive(1234, static_cast<std::uint64_t>(i)), 64);
        const Image img = render_normal_face(spec, 64).image;
        for (int c = 0; c < 3; ++c) {
            double s = 0.0;
            for (int y = 0; y < 64; ++y)
                for (int x = 0; x < 64; ++x) s += img.at(c, y, x);
            mean[c] += s / (64.0 * 64.0);
        }
    }
    for (double& m : mean) m /= n;
    for (int c = 0; c < 3; ++c) {
        CHECK(mean[c] > 0.2);
        CHECK(mean[c] < 0.8);
    }
}

TEST_CASE("anomaly injection contract") {
    const FaceSpec spec = sample_face_spec(11, 64);
    const RenderResult normal = render_normal_face(spec, 64);

    SeveritySpec s0 = sample_severity_spec(11, 0.0);
    const Image zero = inject_anomaly(spec, s0, 64);
    for (std::size_t i = 0; i < zero.pixels().numel(); ++i)
        CHECK(zero.pixels()[i] == normal.image.pixels()[i]);

    SeveritySpec s1 = sample_severity_spec(11, 1.0);
    const Image severe = inject_anomaly(spec, s1, 64);
    CHECK(masked_sq_diff(severe, normal.image, normal.masks.mouth_nose) > 0.0);

    // identical outside the mouth ROI
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            if (normal.masks.mouth_nose.weights().at(y, x) > 0.0) continue;
            for (int c = 0; c < 3; ++c)
                CHECK(severe.at(c, y, x) == normal.image.at(c, y, x));
        }

    SeveritySpec bad = s1;
    bad.severity = 1.5;
    CHECK_THROWS_AS(inject_anomaly(spec, bad, 64), std::invalid_argument);
}

TEST_CASE("masked anomaly energy is strictly increasing in severity") {
    const FaceSpec spec = sample_face_spec(23, 64);
    const RenderResult normal = render_normal_face(spec, 64);
    double prev = -1.0;
    for (int k = 0; k <= 10; ++k) {
        const double s = k / 10.0;
        const Image img = inject_anomaly(spec, sample_severity_spec(23, s), 64);
        const double e = masked_sq_diff(img, normal.image, normal.masks.mouth_nose);
        CHECK(e > prev);
        prev = e;
    }
}

TEST_CASE("cohort generation and reload") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "normscore_cohort_test";
    fs::remove_all(dir);

    const CohortManifest man = generate_eval_cohort(13, 99, 64, dir.string());
    REQUIRE(man.entries.size() == 13);
    CHECK(man.entries.front().rating == doctest::Approx(6.7).epsilon(1e-12));
    CHECK(man.entries.back().rating == doctest::Approx(1.3).epsilon(1e-12));
    for (const auto& e : man.entries)
        CHECK(e.rating + 6.0 * e.severity == doctest::Approx(7.0).epsilon(1e-15));

    const std::string h1 = file_hash_hex((dir / "manifest.csv").string());
    const CohortManifest man2 = load_cohort((dir / "manifest.csv").string());
    REQUIRE(man2.entries.size() == 13);
    CHECK(man2.entries[4].severity == doctest::Approx(man.entries[4].severity).epsilon(1e-15));

    // regenerate with the same seed: identical manifest bytes
    const fs::path dir2 = fs::temp_directory_path() / "normscore_cohort_test2";
    fs::remove_all(dir2);
    generate_eval_cohort(13, 99, 64, dir2.string());
    CHECK(file_hash_hex((dir2 / "manifest.csv").string()) == h1);

    // n=2 endpoints
    const fs::path dir3 = fs::temp_directory_path() / "normscore_cohort_test3";
    fs::remove_all(dir3);
    const CohortManifest two = generate_eval_cohort(2, 1, 64, dir3.string());
    CHECK(two.entries[0].rating == doctest::Approx(6.7));
    CHECK(two.entries[1].rating == doctest::Approx(1.3));

    CHECK_THROWS_AS(generate_eval_cohort(1, 1, 64, dir3.string()), std::invalid_argument);

    fs::remove_all(dir);
    fs::remove_all(dir2);
    fs::remove_all(dir3);
}
