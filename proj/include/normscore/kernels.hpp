#pragma once

#include "normscore/tensor.hpp"

// Dense numeric kernels behind the networks and image ops. Every kernel has
// an OpenMP variant (the default entry point) and a serial reference used by
// the equivalence tests and the benchmark. The OpenMP variants parallelize
// over independent output elements only, so they produce bit-identical
// results to the serial versions at any thread count.
namespace normscore::kernels {

// ---- convolution ----
// in: (Cin,H,W), w: (Cout,Cin,kh,kw), bias: (Cout) or null, out: (Cout,Ho,Wo)
// Ho = (H + 2*pad - kh)/stride + 1.
void conv2d_forward(const Tensor& in, const Tensor& w, const Tensor* bias, int stride,
                    int pad, Tensor& out);
void conv2d_forward_serial(const Tensor& in, const Tensor& w, const Tensor* bias, int stride,
                           int pad, Tensor& out);

// din: (Cin,H,W) from dout: (Cout,Ho,Wo)
void conv2d_backward_input(const Tensor& dout, const Tensor& w, int stride, int pad,
                           Tensor& din);
void conv2d_backward_input_serial(const Tensor& dout, const Tensor& w, int stride, int pad,
                                  Tensor& din);

// dw: (Cout,Cin,kh,kw), dbias: (Cout) or null; accumulates into zeroed outputs.
void conv2d_backward_weight(const Tensor& in, const Tensor& dout, int stride, int pad,
                            Tensor& dw, Tensor* dbias);
void conv2d_backward_weight_serial(const Tensor& in, const Tensor& dout, int stride, int pad,
                                   Tensor& dw, Tensor* dbias);

// ---- fully connected ----
// x: (In), w: (Out,In), bias: (Out) or null, y: (Out)
void linear_forward(const Tensor& x, const Tensor& w, const Tensor* bias, Tensor& y);
void linear_forward_serial(const Tensor& x, const Tensor& w, const Tensor* bias, Tensor& y);
void linear_backward_input(const Tensor& dy, const Tensor& w, Tensor& dx);
void linear_backward_input_serial(const Tensor& dy, const Tensor& w, Tensor& dx);
void linear_backward_weight(const Tensor& x, const Tensor& dy, Tensor& dw, Tensor* dbias);

// ---- resampling ----
// Bilinear 2x upsample, half-pixel centers. in: (C,H,W), out: (C,2H,2W)
void upsample2x_forward(const Tensor& in, Tensor& out);
void upsample2x_forward_serial(const Tensor& in, Tensor& out);
// Exact transpose of the forward weights. dout: (C,2H,2W), din: (C,H,W)
void upsample2x_backward(const Tensor& dout, Tensor& din);
void upsample2x_backward_serial(const Tensor& dout, Tensor& din);

// 2x2 average pooling with a gain factor. in: (H,W) even sides, out: (H/2,W/2)
void avgpool2x2_forward(const Tensor& in, double gain, Tensor& out);
void avgpool2x2_backward(const Tensor& dout, double gain, Tensor& din);

// ---- image-space kernels (no autodiff needed) ----
// Separable Gaussian blur over a single channel, kernel truncated at 3*sigma,
// edge replication. in/out: (H,W).
void gaussian_blur(const Tensor& in, double sigma, Tensor& out);
void gaussian_blur_serial(const Tensor& in, double sigma, Tensor& out);

// 3x3 minimum filter with edge replication. in/out: (H,W).
void erode3x3(const Tensor& in, Tensor& out);
void erode3x3_serial(const Tensor& in, Tensor& out);

// Bilinear sample with edge replication from a single channel.
double sample_bilinear(const Tensor& ch, double y, double x);

// General bilinear resize of a single channel to (Ho,Wo), half-pixel centers.
void resize_bilinear(const Tensor& in, Tensor& out);

}  // namespace normscore::kernels
