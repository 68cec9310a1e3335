#include <cmath>

#include "doctest.h"
#include "normscore/kernels.hpp"
#include "normscore/rng.hpp"

using namespace normscore;

namespace {

Tensor random_tensor(std::vector<int> shape, std::uint64_t seed) {
    Rng rng(seed);
    return Tensor::randn(std::move(shape), rng);
}

bool bit_equal(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) return false;
    for (std::size_t i = 0; i < a.numel(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

}  // namespace

TEST_CASE("conv2d omp matches serial bitwise") {
    for (int stride : {1, 2}) {
        const Tensor in = random_tensor({5, 17, 13}, 42 + stride);
        const Tensor w = random_tensor({7, 5, 3, 3}, 43);
        const Tensor b = random_tensor({7}, 44);
        const int ho = (17 + 2 - 3) / stride + 1, wo = (13 + 2 - 3) / stride + 1;
        Tensor out_p(std::vector<int>{7, ho, wo}), out_s(std::vector<int>{7, ho, wo});
        kernels::conv2d_forward(in, w, &b, stride, 1, out_p);
        kernels::conv2d_forward_serial(in, w, &b, stride, 1, out_s);
        CHECK(bit_equal(out_p, out_s));

        const Tensor dout = random_tensor({7, ho, wo}, 45);
        Tensor din_p(in.shape()), din_s(in.shape());
        kernels::conv2d_backward_input(dout, w, stride, 1, din_p);
        kernels::conv2d_backward_input_serial(dout, w, stride, 1, din_s);
        CHECK(bit_equal(din_p, din_s));

        Tensor dw_p(w.shape()), dw_s(w.shape()), db_p(b.shape()), db_s(b.shape());
        kernels::conv2d_backward_weight(in, dout, stride, 1, dw_p, &db_p);
        kernels::conv2d_backward_weight_serial(in, dout, stride, 1, dw_s, &db_s);
        CHECK(bit_equal(dw_p, dw_s));
        CHECK(bit_equal(db_p, db_s));
    }
}

TEST_CASE("conv2d matches direct summation oracle") {
    const Tensor in = random_tensor({2, 6, 6}, 7);
    const Tensor w = random_tensor({3, 2, 3, 3}, 8);
    Tensor out(std::vector<int>{3, 6, 6});
    kernels::conv2d_forward(in, w, nullptr, 1, 1, out);
    for (int o = 0; o < 3; ++o)
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 6; ++x) {
                double acc = 0.0;
                for (int i = 0; i < 2; ++i)
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            const int yy = y + ky - 1, xx = x + kx - 1;
                            if (yy < 0 || yy >= 6 || xx < 0 || xx >= 6) continue;
                            acc += in.at(i, yy, xx) * w[((static_cast<std::size_t>(o) * 2 + i) * 3 + ky) * 3 + kx];
                        }
                CHECK(out.at(o, y, x) == doctest::Approx(acc).epsilon(1e-12));
            }
}

TEST_CASE("linear omp matches serial and oracle") {
    const Tensor x = random_tensor({33}, 1);
    const Tensor w = random_tensor({21, 33}, 2);
    const Tensor b = random_tensor({21}, 3);
    Tensor y_p(std::vector<int>{21}), y_s(std::vector<int>{21});
    kernels::linear_forward(x, w, &b, y_p);
    kernels::linear_forward_serial(x, w, &b, y_s);
    CHECK(bit_equal(y_p, y_s));
    double acc = b[4];
    for (int i = 0; i < 33; ++i) acc += w[static_cast<std::size_t>(4) * 33 + i] * x[static_cast<std::size_t>(i)];
    CHECK(y_p[4] == doctest::Approx(acc).epsilon(1e-12));

    const Tensor dy = random_tensor({21}, 4);
    Tensor dx_p(std::vector<int>{33}), dx_s(std::vector<int>{33});
    kernels::linear_backward_input(dy, w, dx_p);
    kernels::linear_backward_input_serial(dy, w, dx_s);
    CHECK(bit_equal(dx_p, dx_s));
}

TEST_CASE("upsample2x backward is the exact transpose of forward") {
    // <dout, U(in)> must equal <U^T(dout), in> for any pair
    const Tensor in = random_tensor({2, 9, 7}, 10);
    const Tensor dout = random_tensor({2, 18, 14}, 11);
    Tensor up(std::vector<int>{2, 18, 14});
    kernels::upsample2x_forward(in, up);
    Tensor down(in.shape());
    kernels::upsample2x_backward(dout, down);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < dout.numel(); ++i) lhs += dout[i] * up[i];
    for (std::size_t i = 0; i < in.numel(); ++i) rhs += down[i] * in[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));

    Tensor up_s(std::vector<int>{2, 18, 14});
    kernels::upsample2x_forward_serial(in, up_s);
    CHECK(bit_equal(up, up_s));
    Tensor down_s(in.shape());
    kernels::upsample2x_backward_serial(dout, down_s);
    CHECK(bit_equal(down, down_s));
}

TEST_CASE("gaussian blur: constant invariance, max bound, serial equality") {
    const Tensor c = Tensor::full({12, 12}, 0.37);
    Tensor out(c.shape());
    kernels::gaussian_blur(c, 1.3, out);
    for (std::size_t i = 0; i < out.numel(); ++i) CHECK(out[i] == doctest::Approx(0.37).epsilon(1e-12));

    const Tensor r = random_tensor({20, 16}, 5);
    Tensor b1(r.shape()), b2(r.shape());
    kernels::gaussian_blur(r, 2.0, b1);
    kernels::gaussian_blur_serial(r, 2.0, b2);
    CHECK(bit_equal(b1, b2));
    CHECK(b1.max() <= r.max() + 1e-12);
    CHECK(b1.min() >= r.min() - 1e-12);

    CHECK_THROWS_AS(kernels::gaussian_blur(r, 0.0, b1), std::invalid_argument);
}

TEST_CASE("gaussian blur impulse center equals kernel center weight") {
    // sigma=1 kernel, radius 3: center weight of the normalized 1-D kernel squared
    double taps[7], sum = 0.0;
    for (int i = -3; i <= 3; ++i) {
        taps[i + 3] = std::exp(-0.5 * i * i);
        sum += taps[i + 3];
    }
    const double w0 = taps[3] / sum;
    Tensor img(std::vector<int>{15, 15});
    img.at(7, 7) = 1.0;
    Tensor out(img.shape());
    kernels::gaussian_blur(img, 1.0, out);
    CHECK(out.at(7, 7) == doctest::Approx(w0 * w0).epsilon(1e-12));
}

TEST_CASE("erode3x3 reference cases") {
    Tensor c = Tensor::full({5, 5}, 0.6);
    Tensor out(c.shape());
    kernels::erode3x3(c, out);
    for (std::size_t i = 0; i < out.numel(); ++i) CHECK(out[i] == 0.6);

    // single bright pixel disappears
    Tensor s(std::vector<int>{5, 5});
    s.at(2, 2) = 1.0;
    kernels::erode3x3(s, out);
    CHECK(out.max() == 0.0);

    // 3x3 block of ones centered in 5x5: only the center survives
    Tensor blk(std::vector<int>{5, 5});
    for (int y = 1; y <= 3; ++y)
        for (int x = 1; x <= 3; ++x) blk.at(y, x) = 1.0;
    kernels::erode3x3(blk, out);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) CHECK(out.at(y, x) == (y == 2 && x == 2 ? 1.0 : 0.0));

    const Tensor r = random_tensor({9, 11}, 3);
    Tensor e1(r.shape()), e2(r.shape());
    kernels::erode3x3(r, e1);
    kernels::erode3x3_serial(r, e2);
    CHECK(bit_equal(e1, e2));
    // anti-extensive
    for (std::size_t i = 0; i < r.numel(); ++i) CHECK(e1[i] <= r[i]);
}

TEST_CASE("avgpool2x2 with x2 gain preserves mean of constants") {
    Tensor c = Tensor::full({8, 8}, 1.5);
    Tensor out(std::vector<int>{4, 4});
    kernels::avgpool2x2_forward(c, 2.0, out);
    for (std::size_t i = 0; i < out.numel(); ++i) CHECK(out[i] == doctest::Approx(3.0));
}
