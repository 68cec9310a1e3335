#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "normscore/tensor.hpp"

// Minimal reverse-mode autodiff over Tensor. A forward pass builds a graph of
// shared_ptr<Node>; backward(root) topologically sorts it and accumulates
// gradients. Graph construction is single-threaded; the heavy math inside each
// op runs through the OpenMP kernels. Gradient accumulation follows the fixed
// construction order, so results are deterministic at any thread count.
namespace normscore::ad {

struct Node;
using Ptr = std::shared_ptr<Node>;

struct Node {
    Tensor value;
    Tensor grad;  // allocated lazily, same shape as value
    bool requires_grad = false;
    bool grad_ready = false;
    std::vector<Ptr> parents;
    std::function<void(Node&)> backward_fn;

    Tensor& ensure_grad();
    // Adds g into this node's gradient if anything upstream needs it.
    void accumulate(const Tensor& g);
};

// Leaf wrapping a value. requires_grad marks optimization targets.
Ptr leaf(Tensor value, bool requires_grad = false);
Ptr constant(Tensor value);

// Runs reverse-mode accumulation from a scalar root (numel == 1).
void backward(const Ptr& root);

// ---- elementwise ----
Ptr add(Ptr a, Ptr b);
Ptr sub(Ptr a, Ptr b);
Ptr mul(Ptr a, Ptr b);
Ptr add_scalar(Ptr a, double c);
Ptr mul_scalar(Ptr a, double c);
Ptr square(Ptr a);
Ptr sqrt_op(Ptr a);
Ptr rsqrt(Ptr a, double eps);  // 1/sqrt(a + eps)
Ptr tanh_op(Ptr a);
Ptr leaky_relu(Ptr a, double slope);
Ptr softplus(Ptr a);

// ---- reductions ----
Ptr sum(Ptr a);   // -> {1}
Ptr mean(Ptr a);  // -> {1}

// ---- linear algebra / networks ----
Ptr linear(Ptr x, Ptr w, Ptr b);  // b may be nullptr
Ptr conv2d(Ptr x, Ptr w, Ptr b, int stride, int pad);
Ptr upsample2x(Ptr x);

// ---- broadcasts over (C,H,W) ----
Ptr channel_scale(Ptr x, Ptr s);          // x[c,h,w] * s[c]
Ptr channel_bias(Ptr x, Ptr b);           // x[c,h,w] + b[c]
Ptr conv_epilogue(Ptr x, Ptr n, Ptr g, Ptr b, double slope);  // lrelu(x+g*n+b)
Ptr pixel_scale(Ptr x, Ptr p);            // x[c,h,w] * p[h,w]
Ptr channel_sum(Ptr x);                   // -> {H,W}
Ptr noise_add(Ptr x, Ptr n, Ptr g);       // x[c,h,w] + g*n[h,w], g: {1}
Ptr sum_last2(Ptr w);                     // (Co,Ci,kh,kw) -> {Co,Ci}

// ---- 2-D map ops (noise regularizer) ----
Ptr shift2d_wrap(Ptr x, int dy, int dx);     // x[(y-dy) mod H, (x-dx) mod W]
Ptr avgpool2x2_gain(Ptr x, double gain);     // {H,W} -> {H/2,W/2}

// ---- shape / scalar plumbing ----
Ptr scale_by_scalar(Ptr x, Ptr s);  // s has numel 1
Ptr flatten(Ptr x);                 // any shape -> 1-D

// Central-difference gradient check helper: returns max relative error of
// analytic d f / d x against finite differences over `probes` random entries.
double gradcheck(const std::function<Ptr(Ptr)>& f, const Tensor& x0, int probes,
                 std::uint64_t seed, double h = 1e-4);

}  // namespace normscore::ad
