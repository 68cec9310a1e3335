#include "normscore/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace normscore::kernels {

namespace {

void check_conv_shapes(const Tensor& in, const Tensor& w, const Tensor* bias, int stride,
                       int pad, const Tensor& out) {
    if (in.rank() != 3 || w.rank() != 4 || out.rank() != 3)
        throw std::invalid_argument("conv2d: rank mismatch");
    const int cin = in.dim(0), h = in.dim(1), wd = in.dim(2);
    const int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    if (w.dim(1) != cin) throw std::invalid_argument("conv2d: channel mismatch");
    const int ho = (h + 2 * pad - kh) / stride + 1;
    const int wo = (wd + 2 * pad - kw) / stride + 1;
    if (out.dim(0) != cout || out.dim(1) != ho || out.dim(2) != wo)
        throw std::invalid_argument("conv2d: bad output shape");
    if (bias && (bias->rank() != 1 || bias->dim(0) != cout))
        throw std::invalid_argument("conv2d: bad bias shape");
}

// One output row of the convolution; shared by serial and OpenMP variants so
// both produce identical floating-point results.
inline void conv_row(const Tensor& in, const Tensor& w, const Tensor* bias, int stride,
                     int pad, Tensor& out, int o, int yo) {
    const int cin = in.dim(0), h = in.dim(1), wd = in.dim(2);
    const int kh = w.dim(2), kw = w.dim(3);
    const int wo = out.dim(2);
    double* orow = out.data() + (static_cast<std::size_t>(o) * out.dim(1) + yo) * wo;
    const double b = bias ? (*bias)[static_cast<std::size_t>(o)] : 0.0;
    for (int xo = 0; xo < wo; ++xo) orow[xo] = b;
    for (int i = 0; i < cin; ++i) {
        for (int ky = 0; ky < kh; ++ky) {
            const int yi = yo * stride + ky - pad;
            if (yi < 0 || yi >= h) continue;
            const double* irow = in.data() + (static_cast<std::size_t>(i) * h + yi) * wd;
            const double* wrow =
                w.data() + ((static_cast<std::size_t>(o) * cin + i) * kh + ky) * kw;
            for (int kx = 0; kx < kw; ++kx) {
                const double wv = wrow[kx];
                const int x0 = std::max(0, (pad - kx + stride - 1) / stride);
                const int x1 = std::min(wo, (wd - 1 - kx + pad) / stride + 1);
                const double* ip = irow + x0 * stride + kx - pad;
                if (stride == 1) {
                    for (int xo = x0; xo < x1; ++xo) orow[xo] += wv * ip[xo - x0];
                } else {
                    for (int xo = x0; xo < x1; ++xo) orow[xo] += wv * ip[(xo - x0) * stride];
                }
            }
        }
    }
}

}  // namespace

void conv2d_forward_serial(const Tensor& in, const Tensor& w, const Tensor* bias, int stride,
                           int pad, Tensor& out) {
    check_conv_shapes(in, w, bias, stride, pad, out);
    const int cout = out.dim(0), ho = out.dim(1);
    for (int o = 0; o < cout; ++o)
        for (int yo = 0; yo < ho; ++yo) conv_row(in, w, bias, stride, pad, out, o, yo);
}

void conv2d_forward(const Tensor& in, const Tensor& w, const Tensor* bias, int stride,
                    int pad, Tensor& out) {
    check_conv_shapes(in, w, bias, stride, pad, out);
    const int cout = out.dim(0), ho = out.dim(1);
    const long long work = static_cast<long long>(w.numel()) * out.dim(1) * out.dim(2);
#pragma omp parallel for collapse(2) schedule(static) if (work >= 262144)
    for (int o = 0; o < cout; ++o)
        for (int yo = 0; yo < ho; ++yo) conv_row(in, w, bias, stride, pad, out, o, yo);
}

namespace {

inline void conv_bwd_input_row(const Tensor& dout, const Tensor& w, int stride, int pad,
                               Tensor& din, int i, int yi) {
    const int cout = dout.dim(0), ho = dout.dim(1), wo = dout.dim(2);
    const int cin = din.dim(0), wd = din.dim(2);
    const int kh = w.dim(2), kw = w.dim(3);
    double* drow = din.data() + (static_cast<std::size_t>(i) * din.dim(1) + yi) * wd;
    for (int x = 0; x < wd; ++x) drow[x] = 0.0;
    for (int o = 0; o < cout; ++o) {
        for (int ky = 0; ky < kh; ++ky) {
            const int ynum = yi + pad - ky;
            if (ynum < 0 || ynum % stride != 0) continue;
            const int yo = ynum / stride;
            if (yo >= ho) continue;
            const double* dorow = dout.data() + (static_cast<std::size_t>(o) * ho + yo) * wo;
            const double* wrow =
                w.data() + ((static_cast<std::size_t>(o) * cin + i) * kh + ky) * kw;
            for (int kx = 0; kx < kw; ++kx) {
                const double wv = wrow[kx];
                // xi = xo*stride + kx - pad for xo in [x0, x1)
                const int x0 = std::max(0, (pad - kx + stride - 1) / stride);
                const int x1 = std::min(wo, (wd - 1 - kx + pad) / stride + 1);
                double* dp = drow + x0 * stride + kx - pad;
                if (stride == 1) {
                    for (int xo = x0; xo < x1; ++xo) dp[xo - x0] += wv * dorow[xo];
                } else {
                    for (int xo = x0; xo < x1; ++xo)
                        dp[(xo - x0) * stride] += wv * dorow[xo];
                }
            }
        }
    }
}

}  // namespace

void conv2d_backward_input_serial(const Tensor& dout, const Tensor& w, int stride, int pad,
                                  Tensor& din) {
    const int cin = din.dim(0), h = din.dim(1);
    for (int i = 0; i < cin; ++i)
        for (int yi = 0; yi < h; ++yi) conv_bwd_input_row(dout, w, stride, pad, din, i, yi);
}

void conv2d_backward_input(const Tensor& dout, const Tensor& w, int stride, int pad,
                           Tensor& din) {
    const int cin = din.dim(0), h = din.dim(1);
    const long long work = static_cast<long long>(w.numel()) * dout.dim(1) * dout.dim(2);
#pragma omp parallel for collapse(2) schedule(static) if (work >= 262144)
    for (int i = 0; i < cin; ++i)
        for (int yi = 0; yi < h; ++yi) conv_bwd_input_row(dout, w, stride, pad, din, i, yi);
}

namespace {

inline double conv_bwd_weight_one(const Tensor& in, const Tensor& dout, int stride, int pad,
                                  int o, int i, int ky, int kx) {
    const int h = in.dim(1), wd = in.dim(2);
    const int ho = dout.dim(1), wo = dout.dim(2);
    const int x0 = std::max(0, (pad - kx + stride - 1) / stride);
    const int x1 = std::min(wo, (wd - 1 - kx + pad) / stride + 1);
    // fixed 8-lane accumulation: SIMD-friendly and order-deterministic
    double lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    double tail = 0.0;
    for (int yo = 0; yo < ho; ++yo) {
        const int yi = yo * stride + ky - pad;
        if (yi < 0 || yi >= h) continue;
        const double* irow = in.data() + (static_cast<std::size_t>(i) * h + yi) * wd;
        const double* dorow = dout.data() + (static_cast<std::size_t>(o) * ho + yo) * wo;
        const double* ip = irow + x0 * stride + kx - pad;
        const int n = x1 - x0;
        if (stride == 1) {
            const double* dp = dorow + x0;
            int k = 0;
            for (; k + 8 <= n; k += 8)
                for (int j = 0; j < 8; ++j) lanes[j] += ip[k + j] * dp[k + j];
            for (; k < n; ++k) tail += ip[k] * dp[k];
        } else {
            for (int k = 0; k < n; ++k) tail += ip[k * stride] * dorow[x0 + k];
        }
    }
    double acc = tail;
    for (int j = 0; j < 8; ++j) acc += lanes[j];
    return acc;
}

}  // namespace

void conv2d_backward_weight_serial(const Tensor& in, const Tensor& dout, int stride, int pad,
                                   Tensor& dw, Tensor* dbias) {
    const int cout = dw.dim(0), cin = dw.dim(1), kh = dw.dim(2), kw = dw.dim(3);
    for (int o = 0; o < cout; ++o)
        for (int i = 0; i < cin; ++i)
            for (int ky = 0; ky < kh; ++ky)
                for (int kx = 0; kx < kw; ++kx)
                    dw[((static_cast<std::size_t>(o) * cin + i) * kh + ky) * kw + kx] =
                        conv_bwd_weight_one(in, dout, stride, pad, o, i, ky, kx);
    if (dbias) {
        const int ho = dout.dim(1), wo = dout.dim(2);
        for (int o = 0; o < cout; ++o) {
            double acc = 0.0;
            const double* p = dout.data() + static_cast<std::size_t>(o) * ho * wo;
            for (int k = 0; k < ho * wo; ++k) acc += p[k];
            (*dbias)[static_cast<std::size_t>(o)] = acc;
        }
    }
}

void conv2d_backward_weight(const Tensor& in, const Tensor& dout, int stride, int pad,
                            Tensor& dw, Tensor* dbias) {
    const int cout = dw.dim(0), cin = dw.dim(1), kh = dw.dim(2), kw = dw.dim(3);
    const long long work = static_cast<long long>(dw.numel()) * dout.dim(1) * dout.dim(2);
#pragma omp parallel for collapse(2) schedule(static) if (work >= 262144)
    for (int o = 0; o < cout; ++o)
        for (int i = 0; i < cin; ++i)
            for (int ky = 0; ky < kh; ++ky)
                for (int kx = 0; kx < kw; ++kx)
                    dw[((static_cast<std::size_t>(o) * cin + i) * kh + ky) * kw + kx] =
                        conv_bwd_weight_one(in, dout, stride, pad, o, i, ky, kx);
    if (dbias) {
        const int ho = dout.dim(1), wo = dout.dim(2);
#pragma omp parallel for schedule(static)
        for (int o = 0; o < cout; ++o) {
            double acc = 0.0;
            const double* p = dout.data() + static_cast<std::size_t>(o) * ho * wo;
            for (int k = 0; k < ho * wo; ++k) acc += p[k];
            (*dbias)[static_cast<std::size_t>(o)] = acc;
        }
    }
}

void linear_forward_serial(const Tensor& x, const Tensor& w, const Tensor* bias, Tensor& y) {
    const int out = w.dim(0), in = w.dim(1);
    for (int o = 0; o < out; ++o) {
        double acc = bias ? (*bias)[static_cast<std::size_t>(o)] : 0.0;
        const double* wrow = w.data() + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) acc += wrow[i] * x[static_cast<std::size_t>(i)];
        y[static_cast<std::size_t>(o)] = acc;
    }
}

void linear_forward(const Tensor& x, const Tensor& w, const Tensor* bias, Tensor& y) {
    const int out = w.dim(0), in = w.dim(1);
#pragma omp parallel for schedule(static)
    for (int o = 0; o < out; ++o) {
        double acc = bias ? (*bias)[static_cast<std::size_t>(o)] : 0.0;
        const double* wrow = w.data() + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) acc += wrow[i] * x[static_cast<std::size_t>(i)];
        y[static_cast<std::size_t>(o)] = acc;
    }
}

void linear_backward_input_serial(const Tensor& dy, const Tensor& w, Tensor& dx) {
    const int out = w.dim(0), in = w.dim(1);
    for (int i = 0; i < in; ++i) {
        double acc = 0.0;
        for (int o = 0; o < out; ++o)
            acc += w[static_cast<std::size_t>(o) * in + i] * dy[static_cast<std::size_t>(o)];
        dx[static_cast<std::size_t>(i)] = acc;
    }
}

void linear_backward_input(const Tensor& dy, const Tensor& w, Tensor& dx) {
    const int out = w.dim(0), in = w.dim(1);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < in; ++i) {
        double acc = 0.0;
        for (int o = 0; o < out; ++o)
            acc += w[static_cast<std::size_t>(o) * in + i] * dy[static_cast<std::size_t>(o)];
        dx[static_cast<std::size_t>(i)] = acc;
    }
}

void linear_backward_weight(const Tensor& x, const Tensor& dy, Tensor& dw, Tensor* dbias) {
    const int out = dw.dim(0), in = dw.dim(1);
#pragma omp parallel for schedule(static)
    for (int o = 0; o < out; ++o) {
        const double g = dy[static_cast<std::size_t>(o)];
        double* row = dw.data() + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) row[i] = g * x[static_cast<std::size_t>(i)];
        if (dbias) (*dbias)[static_cast<std::size_t>(o)] = g;
    }
}

namespace {

// 2x bilinear upsample with half-pixel centers: src = (dst + 0.5)/2 - 0.5.
inline void up2_coeffs(int fd, int n, int& i0, int& i1, double& w1) {
    const double s = 0.5 * (fd + 0.5) - 0.5;
    double fl = std::floor(s);
    i0 = static_cast<int>(fl);
    i1 = i0 + 1;
    w1 = s - fl;
    if (i0 < 0) i0 = 0;
    if (i1 > n - 1) i1 = n - 1;
}

inline void upsample_row(const Tensor& in, Tensor& out, int c, int fy) {
    const int h = in.dim(1), w = in.dim(2);
    const int wo = out.dim(2);
    int y0, y1;
    double wy;
    up2_coeffs(fy, h, y0, y1, wy);
    const double* r0 = in.data() + (static_cast<std::size_t>(c) * h + y0) * w;
    const double* r1 = in.data() + (static_cast<std::size_t>(c) * h + y1) * w;
    double* orow = out.data() + (static_cast<std::size_t>(c) * out.dim(1) + fy) * wo;
    for (int fx = 0; fx < wo; ++fx) {
        int x0, x1;
        double wx;
        up2_coeffs(fx, w, x0, x1, wx);
        const double top = r0[x0] * (1.0 - wx) + r0[x1] * wx;
        const double bot = r1[x0] * (1.0 - wx) + r1[x1] * wx;
        orow[fx] = top * (1.0 - wy) + bot * wy;
    }
}

}  // namespace

void upsample2x_forward_serial(const Tensor& in, Tensor& out) {
    const int c = in.dim(0), ho = out.dim(1);
    for (int ch = 0; ch < c; ++ch)
        for (int fy = 0; fy < ho; ++fy) upsample_row(in, out, ch, fy);
}

void upsample2x_forward(const Tensor& in, Tensor& out) {
    const int c = in.dim(0), ho = out.dim(1);
    const long long work = static_cast<long long>(out.numel());
#pragma omp parallel for collapse(2) schedule(static) if (work >= 16384)
    for (int ch = 0; ch < c; ++ch)
        for (int fy = 0; fy < ho; ++fy) upsample_row(in, out, ch, fy);
}

namespace {

// Transpose of upsample_row: for each coarse pixel, gather the fine pixels it
// contributed to. A fine pixel fd references coarse indices via up2_coeffs,
// so coarse y receives from fine fy in [2y-2, 2y+3].
inline void upsample_bwd_row(const Tensor& dout, Tensor& din, int c, int y) {
    const int h = din.dim(1), w = din.dim(2);
    const int hf = dout.dim(1), wf = dout.dim(2);
    double* drow = din.data() + (static_cast<std::size_t>(c) * h + y) * w;
    for (int x = 0; x < w; ++x) drow[x] = 0.0;
    for (int fy = std::max(0, 2 * y - 2); fy < std::min(hf, 2 * y + 4); ++fy) {
        int y0, y1;
        double wy;
        up2_coeffs(fy, h, y0, y1, wy);
        double cy = 0.0;
        if (y0 == y) cy += 1.0 - wy;
        if (y1 == y) cy += wy;
        if (cy == 0.0) continue;
        const double* dorow = dout.data() + (static_cast<std::size_t>(c) * hf + fy) * wf;
        for (int x = 0; x < w; ++x) {
            for (int fx = std::max(0, 2 * x - 2); fx < std::min(wf, 2 * x + 4); ++fx) {
                int x0, x1;
                double wx;
                up2_coeffs(fx, w, x0, x1, wx);
                double cx = 0.0;
                if (x0 == x) cx += 1.0 - wx;
                if (x1 == x) cx += wx;
                if (cx != 0.0) drow[x] += cy * cx * dorow[fx];
            }
        }
    }
}

}  // namespace

void upsample2x_backward_serial(const Tensor& dout, Tensor& din) {
    const int c = din.dim(0), h = din.dim(1);
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y) upsample_bwd_row(dout, din, ch, y);
}

void upsample2x_backward(const Tensor& dout, Tensor& din) {
    const int c = din.dim(0), h = din.dim(1);
    const long long work = static_cast<long long>(dout.numel());
#pragma omp parallel for collapse(2) schedule(static) if (work >= 16384)
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y) upsample_bwd_row(dout, din, ch, y);
}

void avgpool2x2_forward(const Tensor& in, double gain, Tensor& out) {
    const int ho = out.dim(0), wo = out.dim(1), w = in.dim(1);
    const double k = gain * 0.25;
#pragma omp parallel for schedule(static)
    for (int y = 0; y < ho; ++y) {
        const double* r0 = in.data() + static_cast<std::size_t>(2 * y) * w;
        const double* r1 = r0 + w;
        double* orow = out.data() + static_cast<std::size_t>(y) * wo;
        for (int x = 0; x < wo; ++x)
            orow[x] = k * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
    }
}

void avgpool2x2_backward(const Tensor& dout, double gain, Tensor& din) {
    const int h = din.dim(0), w = din.dim(1), wo = dout.dim(1);
    const double k = gain * 0.25;
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        const double* dorow = dout.data() + static_cast<std::size_t>(y / 2) * wo;
        double* drow = din.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) drow[x] = k * dorow[x / 2];
    }
}

namespace {

std::vector<double> gauss_taps(double sigma, int& radius) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_blur: sigma must be positive");
    radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

inline int reflect_clamp(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

inline void blur_h_row(const Tensor& in, Tensor& tmp, const std::vector<double>& k, int radius,
                       int y) {
    const int w = in.dim(1);
    const double* irow = in.data() + static_cast<std::size_t>(y) * w;
    double* trow = tmp.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
            acc += k[static_cast<std::size_t>(i + radius)] * irow[reflect_clamp(x + i, w)];
        trow[x] = acc;
    }
}

inline void blur_v_row(const Tensor& tmp, Tensor& out, const std::vector<double>& k, int radius,
                       int y) {
    const int h = tmp.dim(0), w = tmp.dim(1);
    double* orow = out.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
            acc += k[static_cast<std::size_t>(i + radius)] *
                   tmp[static_cast<std::size_t>(reflect_clamp(y + i, h)) * w + x];
        orow[x] = acc;
    }
}

}  // namespace

void gaussian_blur_serial(const Tensor& in, double sigma, Tensor& out) {
    int radius;
    const auto k = gauss_taps(sigma, radius);
    const int h = in.dim(0);
    Tensor tmp(std::vector<int>{h, in.dim(1)});
    for (int y = 0; y < h; ++y) blur_h_row(in, tmp, k, radius, y);
    for (int y = 0; y < h; ++y) blur_v_row(tmp, out, k, radius, y);
}

void gaussian_blur(const Tensor& in, double sigma, Tensor& out) {
    int radius;
    const auto k = gauss_taps(sigma, radius);
    const int h = in.dim(0);
    Tensor tmp(std::vector<int>{h, in.dim(1)});
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) blur_h_row(in, tmp, k, radius, y);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) blur_v_row(tmp, out, k, radius, y);
}

namespace {

inline void erode_row(const Tensor& in, Tensor& out, int y) {
    const int h = in.dim(0), w = in.dim(1);
    double* orow = out.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
        double m = in.at(y, x);
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                m = std::min(m, in.at(reflect_clamp(y + dy, h), reflect_clamp(x + dx, w)));
        orow[x] = m;
    }
}

}  // namespace

void erode3x3_serial(const Tensor& in, Tensor& out) {
    if (in.dim(0) < 3 || in.dim(1) < 3)
        throw std::invalid_argument("erode3x3: needs at least 3x3 input");
    for (int y = 0; y < in.dim(0); ++y) erode_row(in, out, y);
}

void erode3x3(const Tensor& in, Tensor& out) {
    if (in.dim(0) < 3 || in.dim(1) < 3)
        throw std::invalid_argument("erode3x3: needs at least 3x3 input");
#pragma omp parallel for schedule(static)
    for (int y = 0; y < in.dim(0); ++y) erode_row(in, out, y);
}

double sample_bilinear(const Tensor& ch, double y, double x) {
    const int h = ch.dim(0), w = ch.dim(1);
    const double fy = std::floor(y), fx = std::floor(x);
    const int y0 = reflect_clamp(static_cast<int>(fy), h);
    const int y1 = reflect_clamp(static_cast<int>(fy) + 1, h);
    const int x0 = reflect_clamp(static_cast<int>(fx), w);
    const int x1 = reflect_clamp(static_cast<int>(fx) + 1, w);
    const double wy = y - fy, wx = x - fx;
    const double top = ch.at(y0, x0) * (1.0 - wx) + ch.at(y0, x1) * wx;
    const double bot = ch.at(y1, x0) * (1.0 - wx) + ch.at(y1, x1) * wx;
    return top * (1.0 - wy) + bot * wy;
}

void resize_bilinear(const Tensor& in, Tensor& out) {
    const int ho = out.dim(0), wo = out.dim(1);
    const double sy = static_cast<double>(in.dim(0)) / ho;
    const double sx = static_cast<double>(in.dim(1)) / wo;
#pragma omp parallel for schedule(static)
    for (int y = 0; y < ho; ++y) {
        double* orow = out.data() + static_cast<std::size_t>(y) * wo;
        for (int x = 0; x < wo; ++x)
            orow[x] = sample_bilinear(in, (y + 0.5) * sy - 0.5, (x + 0.5) * sx - 0.5);
    }
}

}  // namespace normscore::kernels
