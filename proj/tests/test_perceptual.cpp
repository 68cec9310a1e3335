#include <cmath>

#include "doctest.h"
#include "normscore/perceptual.hpp"
#include "normscore/rng.hpp"
#include "normscore/synthcorpus.hpp"

using namespace normscore;
namespace nad = normscore::ad;

namespace {

Image random_image(int n, std::uint64_t seed) {
    Rng rng(seed);
    Tensor px(std::vector<int>{3, n, n});
    for (std::size_t i = 0; i < px.numel(); ++i) px[i] = rng.uniform();
    return Image(std::move(px), ColorSpace::RGB);
}

Image shifted(const Image& img, int dx) {
    Tensor px(img.pixels().shape());
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
                px.at(c, y, x) = img.at(c, y, std::clamp(x - dx, 0, img.width() - 1));
    return Image(std::move(px), ColorSpace::RGB);
}

}  // namespace

TEST_CASE("lpips identity, symmetry, nonnegativity") {
    const FeatureExtractor fe(77);
    const Image x = random_image(32, 1);
    const Image y = random_image(32, 2);
    CHECK(lpips_distance(x, x, fe) == doctest::Approx(0.0).epsilon(1e-12));
    const double dxy = lpips_distance(x, y, fe);
    const double dyx = lpips_distance(y, x, fe);
    CHECK(dxy > 0.0);
    CHECK(dxy == doctest::Approx(dyx).epsilon(1e-9));
}

TEST_CASE("identical seeds give identical features") {
    const FeatureExtractor a(5), b(5), c(6);
    const Image x = random_image(32, 3);
    const Image y = random_image(32, 4);
    CHECK(lpips_distance(x, y, a) == lpips_distance(x, y, b));
    CHECK(lpips_distance(x, y, a) != lpips_distance(x, y, c));
}

TEST_CASE("lpips gradient matches finite differences") {
    const FeatureExtractor fe(8);
    const Image y = random_image(16, 5);
    auto f = [&](nad::Ptr x) { return lpips_graph(fe, x, nad::constant(y.pixels())); };
    CHECK(nad::gradcheck(f, random_image(16, 6).pixels(), 10, 400) < 1e-3);

    // frozen-feature variant must agree with the full graph
    const Image x = random_image(16, 7);
    const double full = lpips_distance(x, y, fe);
    const double fixed =
        lpips_graph_fixed(fe, fe.features(x.pixels()), nad::constant(y.pixels()))->value[0];
    CHECK(full == doctest::Approx(fixed).epsilon(1e-12));
}

TEST_CASE("heatmap localizes a quadrant difference") {
    const FeatureExtractor fe(9);
    const FaceSpec spec = sample_face_spec(31, 64);
    const Image base = render_normal_face(spec, 64).image;
    Image changed = base;
    Rng rng(10);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            for (int c = 0; c < 3; ++c)
                changed.pixels_mut().at(c, y, x) =
                    std::clamp(base.at(c, y, x) + 0.35 + 0.1 * rng.uniform(), 0.0, 1.0);

    const HeatMap hm = lpips_heatmap(base, changed, fe);
    REQUIRE(hm.values.dim(0) == 64);
    double inside = 0.0, total = 0.0;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            CHECK(hm.values.at(y, x) >= 0.0);
            total += hm.values.at(y, x);
            if (y < 36 && x < 36) inside += hm.values.at(y, x);  // quadrant + upsampling halo
        }
    CHECK(inside / total >= 0.8);
}

TEST_CASE("identical images give an all-zero heatmap") {
    const FeatureExtractor fe(11);
    const Image x = random_image(32, 12);
    const HeatMap hm = lpips_heatmap(x, x, fe);
    CHECK(hm.values.max() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("heatmap spatial mean approximates the distance") {
    const FeatureExtractor fe(13);
    const FaceSpec spec = sample_face_spec(37, 64);
    const Image a = render_normal_face(spec, 64).image;
    const Image b = inject_anomaly(spec, sample_severity_spec(37, 0.9), 64);
    const double d = lpips_distance(a, b, fe);
    const HeatMap hm = lpips_heatmap(a, b, fe);
    CHECK(hm.values.mean() == doctest::Approx(d).epsilon(0.05));
}

TEST_CASE("translation sensitivity stays graded") {
    const FeatureExtractor fe(14);
    const Image x = render_normal_face(sample_face_spec(41, 64), 64).image;
    const double d1 = lpips_distance(x, shifted(x, 1), fe);
    const double d8 = lpips_distance(x, shifted(x, 8), fe);
    CHECK(d1 < 0.5 * d8);
}

TEST_CASE("shape and color space mismatches rejected") {
    const FeatureExtractor fe(15);
    CHECK_THROWS_AS(lpips_distance(random_image(16, 1), random_image(32, 2), fe),
                    std::invalid_argument);
    const Image x = random_image(16, 3);
    CHECK_THROWS_AS(lpips_distance(x, rgb_to_ycbcr(x), fe), std::invalid_argument);
}
