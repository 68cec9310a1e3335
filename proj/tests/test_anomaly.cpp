#include <cmath>

#include "doctest.h"
#include "normscore/anomaly.hpp"
#include "normscore/rng.hpp"
#include "normscore/synthcorpus.hpp"

using namespace normscore;

namespace {

Image random_image(int n, std::uint64_t seed) {
    Rng rng(seed);
    Tensor px(std::vector<int>{3, n, n});
    for (std::size_t i = 0; i < px.numel(); ++i) px[i] = rng.uniform();
    return Image(std::move(px), ColorSpace::RGB);
}

}  // namespace

TEST_CASE("pse heatmap reference cases") {
    const Image x = random_image(8, 1);
    const HeatMap zero = pse_heatmap(x, x);
    CHECK(zero.values.max() == 0.0);

    Image y = Image::solid(8, 8, 0.0, 0.0, 0.0);
    Image x0 = Image::solid(8, 8, 0.0, 0.0, 0.0);
    y.set(1, 3, 4, 1.0);
    const HeatMap one = pse_heatmap(x0, y);
    for (int yy = 0; yy < 8; ++yy)
        for (int xx = 0; xx < 8; ++xx)
            CHECK(one.values.at(yy, xx) == (yy == 3 && xx == 4 ? 1.0 : 0.0));

    // uniform 0.3 offset in one channel -> 0.09 everywhere
    Image a = Image::solid(8, 8, 0.5, 0.5, 0.5);
    Image b = Image::solid(8, 8, 0.2, 0.5, 0.5);
    const HeatMap u = pse_heatmap(a, b);
    for (std::size_t i = 0; i < u.values.numel(); ++i)
        CHECK(u.values[i] == doctest::Approx(0.09).epsilon(1e-12));

    // symmetry under swap, exactly
    const Image p = random_image(8, 2), q = random_image(8, 3);
    const HeatMap pq = pse_heatmap(p, q), qp = pse_heatmap(q, p);
    for (std::size_t i = 0; i < pq.values.numel(); ++i) CHECK(pq.values[i] == qp.values[i]);

    CHECK_THROWS_AS(pse_heatmap(p, rgb_to_ycbcr(q)), std::invalid_argument);
}

TEST_CASE("ssim heatmap sanity") {
    const FaceSpec spec = sample_face_spec(51, 64);
    const Image x = render_normal_face(spec, 64).image;
    const HeatMap same = ssim_heatmap(x, x);
    CHECK(same.values.max() == doctest::Approx(0.0).epsilon(1e-9));

    Tensor inv(x.pixels().shape());
    for (std::size_t i = 0; i < inv.numel(); ++i) inv[i] = 1.0 - x.pixels()[i];
    const HeatMap flipped = ssim_heatmap(x, Image(std::move(inv), ColorSpace::RGB));
    CHECK(flipped.values.mean() > 0.5);

    const HeatMap rnd = ssim_heatmap(random_image(32, 4), random_image(32, 5));
    CHECK(rnd.values.all_finite());
    CHECK(rnd.values.min() >= 0.0);
    CHECK(rnd.values.max() <= 2.0);
}

TEST_CASE("postprocess_pair configurations") {
    const Image x = random_image(16, 6), y = random_image(16, 7);

    ScoreConfig base;
    const auto [bx, by] = postprocess_pair(x, y, base);
    for (std::size_t i = 0; i < x.pixels().numel(); ++i) {
        CHECK(bx.pixels()[i] == x.pixels()[i]);
        CHECK(by.pixels()[i] == y.pixels()[i]);
    }

    ScoreConfig both;
    both.color_space = ColorSpace::YCbCr;
    both.erosion = true;
    const auto [cx, cy] = postprocess_pair(x, x, both);
    for (std::size_t i = 0; i < cx.pixels().numel(); ++i)
        CHECK(cx.pixels()[i] == cy.pixels()[i]);
    CHECK(cx.color_space() == ColorSpace::YCbCr);

    // erosion kills isolated salt pixels
    Image clean = Image::solid(16, 16, 0.4, 0.4, 0.4);
    Image salted = clean;
    salted.set(0, 4, 4, 1.0);
    salted.set(1, 9, 12, 1.0);
    ScoreConfig erode_only;
    erode_only.erosion = true;
    const auto [ex, ey] = postprocess_pair(clean, salted, erode_only);
    const HeatMap hm = pse_heatmap(ex, ey);
    CHECK(hm.values.max() == 0.0);
}

TEST_CASE("anomaly score arithmetic") {
    ScoreConfig cfg;
    // 100 masked pixels at 0.01 -> energy sqrt(1) = 1, S = ln(100)
    Tensor hm_v(std::vector<int>{10, 10});
    for (std::size_t i = 0; i < hm_v.numel(); ++i) hm_v[i] = 0.01;
    HeatMap hm{hm_v, HeatmapMethod::PSE, ColorSpace::RGB, false};
    const Mask full(Tensor::full({10, 10}, 1.0));
    const AnomalyScore s = anomaly_score(hm, full, cfg);
    CHECK(s.N == 100);
    CHECK(s.residual_energy == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.S == doctest::Approx(std::log(100.0)).epsilon(1e-9));
    CHECK(s.S == doctest::Approx(4.6052).epsilon(1e-4));

    // doubling the heatmap lowers S by exactly ln(sqrt(2))
    Tensor hm2 = hm_v;
    hm2 *= 2.0;
    const AnomalyScore s2 = anomaly_score({hm2, HeatmapMethod::PSE, ColorSpace::RGB, false},
                                          full, cfg);
    CHECK(s.S - s2.S == doctest::Approx(std::log(std::sqrt(2.0))).epsilon(1e-9));

    // zero heatmap: epsilon ceiling
    const AnomalyScore sz = anomaly_score(
        {Tensor(std::vector<int>{10, 10}), HeatmapMethod::PSE, ColorSpace::RGB, false}, full,
        cfg);
    CHECK(sz.S == doctest::Approx(-std::log(cfg.epsilon)).epsilon(1e-9));

    const Mask empty(Tensor(std::vector<int>{10, 10}));
    CHECK_THROWS_AS(anomaly_score(hm, empty, cfg), std::invalid_argument);
}

TEST_CASE("score anti-monotone in the residual and local to the mask") {
    ScoreConfig cfg;
    Rng rng(8);
    Tensor base(std::vector<int>{12, 12});
    for (std::size_t i = 0; i < base.numel(); ++i) base[i] = rng.uniform();
    Tensor bigger = base;
    bigger.at(5, 5) += 0.5;

    Tensor mw(std::vector<int>{12, 12});
    for (int y = 3; y < 9; ++y)
        for (int x = 3; x < 9; ++x) mw.at(y, x) = 1.0;
    const Mask m(mw);

    const double s1 =
        anomaly_score({bigger, HeatmapMethod::PSE, ColorSpace::RGB, false}, m, cfg).S;
    const double s2 =
        anomaly_score({base, HeatmapMethod::PSE, ColorSpace::RGB, false}, m, cfg).S;
    CHECK(s1 <= s2);

    // modifying outside the mask leaves S unchanged exactly
    Tensor outside = base;
    outside.at(0, 0) += 5.0;
    const double s3 =
        anomaly_score({outside, HeatmapMethod::PSE, ColorSpace::RGB, false}, m, cfg).S;
    CHECK(s3 == s2);
}

TEST_CASE("score_face composes the chain") {
    const FaceSpec spec = sample_face_spec(61, 64);
    const RenderResult r = render_normal_face(spec, 64);
    const Image anomalous = inject_anomaly(spec, sample_severity_spec(61, 0.9), 64);

    ScoreConfig cfg;
    cfg.color_space = ColorSpace::YCbCr;
    cfg.erosion = true;

    const auto [same_score, same_hm] =
        score_face(r.image, r.image, r.masks.mouth_nose, cfg);
    CHECK(same_score.S == doctest::Approx(-std::log(cfg.epsilon)).epsilon(1e-9));

    const auto [score, hm] = score_face(anomalous, r.image, r.masks.mouth_nose, cfg);
    CHECK(score.S < same_score.S);
    CHECK(hm.values.min() >= 0.0);
    CHECK(hm.eroded);

    // higher severity scores lower under the same config
    const Image mild = inject_anomaly(spec, sample_severity_spec(61, 0.1), 64);
    const auto [mild_score, mild_hm] = score_face(mild, r.image, r.masks.mouth_nose, cfg);
    CHECK(score.S < mild_score.S);
}
