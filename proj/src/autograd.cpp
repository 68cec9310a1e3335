#include "normscore/autograd.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "normscore/kernels.hpp"
#include "normscore/rng.hpp"

namespace normscore::ad {

namespace {
// Elementwise loops go parallel only when the tensor is big enough to pay
// for the dispatch; the work split is per-element, so results are identical
// at any thread count.
constexpr std::size_t kParallelCutoff = 16384;
}  // namespace

#define NS_ELEMENTWISE_FOR(n)                                                       \
    const std::size_t ns_count_ = (n);                                             \
    _Pragma("omp parallel for schedule(static) if (ns_count_ >= kParallelCutoff)") \
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(ns_count_); ++i)

Tensor& Node::ensure_grad() {
    if (!grad_ready) {
        grad = Tensor::zeros(value.shape());
        grad_ready = true;
    }
    return grad;
}

void Node::accumulate(const Tensor& g) {
    ensure_grad() += g;
}

namespace {

bool needs_grad(const std::vector<Ptr>& parents) {
    for (const auto& p : parents)
        if (p->requires_grad) return true;
    return false;
}

Ptr make_node(Tensor value, std::vector<Ptr> parents, std::function<void(Node&)> bwd) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    n->requires_grad = needs_grad(n->parents);
    if (n->requires_grad) n->backward_fn = std::move(bwd);
    return n;
}

void topo_visit(const Ptr& n, std::unordered_set<Node*>& seen, std::vector<Ptr>& order) {
    if (!n->requires_grad || seen.count(n.get())) return;
    seen.insert(n.get());
    for (const auto& p : n->parents) topo_visit(p, seen, order);
    order.push_back(n);
}

}  // namespace

Ptr leaf(Tensor value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return n;
}

Ptr constant(Tensor value) { return leaf(std::move(value), false); }

void backward(const Ptr& root) {
    if (root->value.numel() != 1)
        throw std::invalid_argument("backward: root must be a scalar node");
    std::unordered_set<Node*> seen;
    std::vector<Ptr> order;
    topo_visit(root, seen, order);
    root->ensure_grad()[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node& n = **it;
        if (n.backward_fn && n.grad_ready) n.backward_fn(n);
    }
}

// ---------------------------------------------------------------- elementwise

Ptr add(Ptr a, Ptr b) {
    if (!a->value.same_shape(b->value)) throw std::invalid_argument("add: shape mismatch");
    Tensor v = a->value;
    v += b->value;
    return make_node(std::move(v), {a, b}, [](Node& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->accumulate(n.grad);
        if (n.parents[1]->requires_grad) n.parents[1]->accumulate(n.grad);
    });
}

Ptr sub(Ptr a, Ptr b) {
    if (!a->value.same_shape(b->value)) throw std::invalid_argument("sub: shape mismatch");
    Tensor v = a->value;
    v -= b->value;
    return make_node(std::move(v), {a, b}, [](Node& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->accumulate(n.grad);
        if (n.parents[1]->requires_grad) {
            Tensor g = n.grad;
            g *= -1.0;
            n.parents[1]->accumulate(g);
        }
    });
}

Ptr mul(Ptr a, Ptr b) {
    if (!a->value.same_shape(b->value)) throw std::invalid_argument("mul: shape mismatch");
    const std::size_t n_el = a->value.numel();
    Tensor v(a->value.shape());
    NS_ELEMENTWISE_FOR(n_el) v[i] = a->value[i] * b->value[i];
    return make_node(std::move(v), {a, b}, [n_el](Node& n) {
        if (n.parents[0]->requires_grad) {
            Tensor g(n.grad.shape());
            NS_ELEMENTWISE_FOR(n_el) g[i] = n.grad[i] * n.parents[1]->value[i];
            n.parents[0]->accumulate(g);
        }
        if (n.parents[1]->requires_grad) {
            Tensor g(n.grad.shape());
            NS_ELEMENTWISE_FOR(n_el) g[i] = n.grad[i] * n.parents[0]->value[i];
            n.parents[1]->accumulate(g);
        }
    });
}

Ptr add_scalar(Ptr a, double c) {
    Tensor v = a->value;
    for (std::size_t i = 0; i < v.numel(); ++i) v[i] += c;
    return make_node(std::move(v), {a},
                     [](Node& n) { n.parents[0]->accumulate(n.grad); });
}

Ptr mul_scalar(Ptr a, double c) {
    Tensor v = a->value;
    v *= c;
    return make_node(std::move(v), {a}, [c](Node& n) {
        Tensor g = n.grad;
        g *= c;
        n.parents[0]->accumulate(g);
    });
}

namespace {

template <typename F, typename DF>
Ptr unary(Ptr a, F f, DF df) {
    const std::size_t n_el = a->value.numel();
    Tensor v(a->value.shape());
    NS_ELEMENTWISE_FOR(n_el) v[i] = f(a->value[i]);
    return make_node(std::move(v), {a}, [df, n_el](Node& n) {
        Tensor g(n.grad.shape());
        NS_ELEMENTWISE_FOR(n_el) g[i] = n.grad[i] * df(n.parents[0]->value[i], n.value[i]);
        n.parents[0]->accumulate(g);
    });
}

}  // namespace

Ptr square(Ptr a) {
    return unary(a, [](double x) { return x * x; },
                 [](double x, double) { return 2.0 * x; });
}

Ptr sqrt_op(Ptr a) {
    return unary(a, [](double x) { return std::sqrt(x); },
                 [](double, double y) { return 0.5 / y; });
}

Ptr rsqrt(Ptr a, double eps) {
    return unary(a, [eps](double x) { return 1.0 / std::sqrt(x + eps); },
                 [eps](double x, double y) { return -0.5 * y / (x + eps); });
}

Ptr tanh_op(Ptr a) {
    return unary(a, [](double x) { return std::tanh(x); },
                 [](double, double y) { return 1.0 - y * y; });
}

Ptr leaky_relu(Ptr a, double slope) {
    return unary(a, [slope](double x) { return x >= 0.0 ? x : slope * x; },
                 [slope](double x, double) { return x >= 0.0 ? 1.0 : slope; });
}

Ptr softplus(Ptr a) {
    // log(1+e^x), evaluated stably on both tails
    return unary(a,
                 [](double x) { return x > 30.0 ? x : std::log1p(std::exp(std::min(x, 30.0))); },
                 [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

// ---------------------------------------------------------------- reductions

Ptr sum(Ptr a) {
    Tensor v(std::vector<int>{1});
    v[0] = a->value.sum();
    return make_node(std::move(v), {a}, [](Node& n) {
        Tensor g = Tensor::full(n.parents[0]->value.shape(), n.grad[0]);
        n.parents[0]->accumulate(g);
    });
}

Ptr mean(Ptr a) {
    const double inv = 1.0 / static_cast<double>(a->value.numel());
    Tensor v(std::vector<int>{1});
    v[0] = a->value.sum() * inv;
    return make_node(std::move(v), {a}, [inv](Node& n) {
        Tensor g = Tensor::full(n.parents[0]->value.shape(), n.grad[0] * inv);
        n.parents[0]->accumulate(g);
    });
}

// ---------------------------------------------------------------- networks

Ptr linear(Ptr x, Ptr w, Ptr b) {
    Tensor v(std::vector<int>{w->value.dim(0)});
    kernels::linear_forward(x->value, w->value, b ? &b->value : nullptr, v);
    std::vector<Ptr> parents{x, w};
    if (b) parents.push_back(b);
    const bool has_bias = b != nullptr;
    return make_node(std::move(v), std::move(parents), [has_bias](Node& n) {
        const Ptr& x = n.parents[0];
        const Ptr& w = n.parents[1];
        if (x->requires_grad) {
            Tensor dx(x->value.shape());
            kernels::linear_backward_input(n.grad, w->value, dx);
            x->accumulate(dx);
        }
        if (w->requires_grad || (has_bias && n.parents[2]->requires_grad)) {
            Tensor dw(w->value.shape());
            Tensor db = has_bias ? Tensor(n.parents[2]->value.shape()) : Tensor();
            kernels::linear_backward_weight(x->value, n.grad, dw, has_bias ? &db : nullptr);
            if (w->requires_grad) w->accumulate(dw);
            if (has_bias && n.parents[2]->requires_grad) n.parents[2]->accumulate(db);
        }
    });
}

Ptr conv2d(Ptr x, Ptr w, Ptr b, int stride, int pad) {
    const int h = x->value.dim(1), wd = x->value.dim(2);
    const int kh = w->value.dim(2), kw = w->value.dim(3);
    const int ho = (h + 2 * pad - kh) / stride + 1;
    const int wo = (wd + 2 * pad - kw) / stride + 1;
    Tensor v(std::vector<int>{w->value.dim(0), ho, wo});
    kernels::conv2d_forward(x->value, w->value, b ? &b->value : nullptr, stride, pad, v);
    std::vector<Ptr> parents{x, w};
    if (b) parents.push_back(b);
    const bool has_bias = b != nullptr;
    return make_node(std::move(v), std::move(parents), [stride, pad, has_bias](Node& n) {
        const Ptr& x = n.parents[0];
        const Ptr& w = n.parents[1];
        if (x->requires_grad) {
            Tensor dx(x->value.shape());
            kernels::conv2d_backward_input(n.grad, w->value, stride, pad, dx);
            x->accumulate(dx);
        }
        if (w->requires_grad || (has_bias && n.parents[2]->requires_grad)) {
            Tensor dw(w->value.shape());
            Tensor db = has_bias ? Tensor(n.parents[2]->value.shape()) : Tensor();
            kernels::conv2d_backward_weight(x->value, n.grad, stride, pad, dw,
                                            has_bias ? &db : nullptr);
            if (w->requires_grad) w->accumulate(dw);
            if (has_bias && n.parents[2]->requires_grad) n.parents[2]->accumulate(db);
        }
    });
}

Ptr upsample2x(Ptr x) {
    Tensor v(std::vector<int>{x->value.dim(0), 2 * x->value.dim(1), 2 * x->value.dim(2)});
    kernels::upsample2x_forward(x->value, v);
    return make_node(std::move(v), {x}, [](Node& n) {
        Tensor dx(n.parents[0]->value.shape());
        kernels::upsample2x_backward(n.grad, dx);
        n.parents[0]->accumulate(dx);
    });
}

// ---------------------------------------------------------------- broadcasts

Ptr channel_scale(Ptr x, Ptr s) {
    const int c = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
    if (s->value.dim(0) != c) throw std::invalid_argument("channel_scale: shape mismatch");
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    const std::size_t n_el = x->value.numel();
    Tensor v(x->value.shape());
    NS_ELEMENTWISE_FOR(n_el) v[i] = x->value[i] * s->value[static_cast<std::size_t>(i) / hw];
    return make_node(std::move(v), {x, s}, [c, hw, n_el](Node& n) {
        const Ptr& x = n.parents[0];
        const Ptr& s = n.parents[1];
        if (x->requires_grad) {
            Tensor g(x->value.shape());
            NS_ELEMENTWISE_FOR(n_el)
            g[i] = n.grad[i] * s->value[static_cast<std::size_t>(i) / hw];
            x->accumulate(g);
        }
        if (s->requires_grad) {
            Tensor g(s->value.shape());
#pragma omp parallel for schedule(static) if (n_el >= kParallelCutoff)
            for (int ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                const std::size_t base = static_cast<std::size_t>(ch) * hw;
                for (std::size_t k = 0; k < hw; ++k) acc += n.grad[base + k] * x->value[base + k];
                g[static_cast<std::size_t>(ch)] = acc;
            }
            s->accumulate(g);
        }
    });
}

// Fused synthesis epilogue: lrelu(x + g*n + b). One node instead of three in
// the per-layer hot path.
Ptr conv_epilogue(Ptr x, Ptr n_map, Ptr g, Ptr b, double slope) {
    const int c = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
    if (n_map->value.dim(0) != h || n_map->value.dim(1) != w)
        throw std::invalid_argument("conv_epilogue: noise shape mismatch");
    if (b->value.dim(0) != c) throw std::invalid_argument("conv_epilogue: bias shape mismatch");
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    const std::size_t n_el = x->value.numel();
    const double gain = g->value[0];
    Tensor v(x->value.shape());
    NS_ELEMENTWISE_FOR(n_el) {
        const std::size_t ch = static_cast<std::size_t>(i) / hw;
        const double pre = x->value[i] + gain * n_map->value[static_cast<std::size_t>(i) % hw] +
                           b->value[ch];
        v[i] = pre >= 0.0 ? pre : slope * pre;
    }
    return make_node(std::move(v), {x, n_map, g, b}, [c, hw, n_el, slope](Node& n) {
        const Ptr& x = n.parents[0];
        const Ptr& nm = n.parents[1];
        const Ptr& g = n.parents[2];
        const Ptr& b = n.parents[3];
        // dpre shares x's shape; lrelu preserves sign, so n.value carries it
        Tensor dpre(x->value.shape());
        NS_ELEMENTWISE_FOR(n_el)
        dpre[i] = n.grad[i] * (n.value[i] >= 0.0 ? 1.0 : slope);
        if (x->requires_grad) x->accumulate(dpre);
        if (nm->requires_grad || g->requires_grad) {
            Tensor chansum(nm->value.shape());
#pragma omp parallel for schedule(static) if (n_el >= kParallelCutoff)
            for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(hw); ++k) {
                double acc = 0.0;
                for (int ch = 0; ch < c; ++ch)
                    acc += dpre[static_cast<std::size_t>(ch) * hw + static_cast<std::size_t>(k)];
                chansum[static_cast<std::size_t>(k)] = acc;
            }
            if (nm->requires_grad) {
                Tensor gn = chansum;
                gn *= g->value[0];
                nm->accumulate(gn);
            }
            if (g->requires_grad) {
                double acc = 0.0;
                for (std::size_t k = 0; k < hw; ++k)
                    acc += chansum[k] * nm->value[k];
                Tensor gg(std::vector<int>{1});
                gg[0] = acc;
                g->accumulate(gg);
            }
        }
        if (b->requires_grad) {
            Tensor gb(b->value.shape());
            for (int ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                const std::size_t base = static_cast<std::size_t>(ch) * hw;
                for (std::size_t k = 0; k < hw; ++k) acc += dpre[base + k];
                gb[static_cast<std::size_t>(ch)] = acc;
            }
            b->accumulate(gb);
        }
    });
}

Ptr channel_bias(Ptr x, Ptr b) {
    const int c = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
    if (b->value.dim(0) != c) throw std::invalid_argument("channel_bias: shape mismatch");
    Tensor v = x->value;
    for (int ch = 0; ch < c; ++ch) {
        const double bv = b->value[static_cast<std::size_t>(ch)];
        const std::size_t base = static_cast<std::size_t>(ch) * h * w;
        for (int k = 0; k < h * w; ++k) v[base + k] += bv;
    }
    return make_node(std::move(v), {x, b}, [c, h, w](Node& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->accumulate(n.grad);
        if (n.parents[1]->requires_grad) {
            Tensor g(n.parents[1]->value.shape());
            for (int ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                const std::size_t base = static_cast<std::size_t>(ch) * h * w;
                for (int k = 0; k < h * w; ++k) acc += n.grad[base + k];
                g[static_cast<std::size_t>(ch)] = acc;
            }
            n.parents[1]->accumulate(g);
        }
    });
}

Ptr pixel_scale(Ptr x, Ptr p) {
    const int c = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
    if (p->value.dim(0) != h || p->value.dim(1) != w)
        throw std::invalid_argument("pixel_scale: shape mismatch");
    Tensor v(x->value.shape());
    for (int ch = 0; ch < c; ++ch)
        for (int k = 0; k < h * w; ++k)
            v[static_cast<std::size_t>(ch) * h * w + k] =
                x->value[static_cast<std::size_t>(ch) * h * w + k] * p->value[static_cast<std::size_t>(k)];
    return make_node(std::move(v), {x, p}, [c, h, w](Node& n) {
        const Ptr& x = n.parents[0];
        const Ptr& p = n.parents[1];
        if (x->requires_grad) {
            Tensor g(x->value.shape());
            for (int ch = 0; ch < c; ++ch)
                for (int k = 0; k < h * w; ++k)
                    g[static_cast<std::size_t>(ch) * h * w + k] =
                        n.grad[static_cast<std::size_t>(ch) * h * w + k] * p->value[static_cast<std::size_t>(k)];
            x->accumulate(g);
        }
        if (p->requires_grad) {
            Tensor g(p->value.shape());
            for (int k = 0; k < h * w; ++k) {
                double acc = 0.0;
                for (int ch = 0; ch < c; ++ch)
                    acc += n.grad[static_cast<std::size_t>(ch) * h * w + k] *
                           x->value[static_cast<std::size_t>(ch) * h * w + k];
                g[static_cast<std::size_t>(k)] = acc;
            }
            p->accumulate(g);
        }
    });
}

Ptr channel_sum(Ptr x) {
    const int c = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
    Tensor v(std::vector<int>{h, w});
    for (int ch = 0; ch < c; ++ch)
        for (int k = 0; k < h * w; ++k)
            v[static_cast<std::size_t>(k)] += x->value[static_cast<std::size_t>(ch) * h * w + k];
    return make_node(std::move(v), {x}, [c, h, w](Node& n) {
        Tensor g(n.parents[0]->value.shape());
        for (int ch = 0; ch < c; ++ch)
            for (int k = 0; k < h * w; ++k)
                g[static_cast<std::size_t>(ch) * h * w + k] = n.grad[static_cast<std::size_t>(k)];
        n.parents[0]->accumulate(g);
    });
}

Ptr noise_add(Ptr x, Ptr n_map, Ptr g) {
    const int c = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
    if (n_map->value.dim(0) != h || n_map->value.dim(1) != w)
        throw std::invalid_argument("noise_add: noise shape mismatch");
    const double gain = g->value[0];
    Tensor v = x->value;
    for (int ch = 0; ch < c; ++ch)
        for (int k = 0; k < h * w; ++k)
            v[static_cast<std::size_t>(ch) * h * w + k] += gain * n_map->value[static_cast<std::size_t>(k)];
    return make_node(std::move(v), {x, n_map, g}, [c, h, w](Node& n) {
        const Ptr& x = n.parents[0];
        const Ptr& nm = n.parents[1];
        const Ptr& g = n.parents[2];
        if (x->requires_grad) x->accumulate(n.grad);
        if (nm->requires_grad || g->requires_grad) {
            Tensor chansum(std::vector<int>{h, w});
            for (int ch = 0; ch < c; ++ch)
                for (int k = 0; k < h * w; ++k)
                    chansum[static_cast<std::size_t>(k)] += n.grad[static_cast<std::size_t>(ch) * h * w + k];
            if (nm->requires_grad) {
                Tensor gn = chansum;
                gn *= g->value[0];
                nm->accumulate(gn);
            }
            if (g->requires_grad) {
                double acc = 0.0;
                for (int k = 0; k < h * w; ++k)
                    acc += chansum[static_cast<std::size_t>(k)] * nm->value[static_cast<std::size_t>(k)];
                Tensor gg(std::vector<int>{1});
                gg[0] = acc;
                g->accumulate(gg);
            }
        }
    });
}

Ptr sum_last2(Ptr w) {
    const int co = w->value.dim(0), ci = w->value.dim(1);
    const int kk = w->value.dim(2) * w->value.dim(3);
    Tensor v(std::vector<int>{co, ci});
    for (int i = 0; i < co * ci; ++i) {
        double acc = 0.0;
        const double* p = w->value.data() + static_cast<std::size_t>(i) * kk;
        for (int k = 0; k < kk; ++k) acc += p[k];
        v[static_cast<std::size_t>(i)] = acc;
    }
    return make_node(std::move(v), {w}, [co, ci, kk](Node& n) {
        Tensor g(n.parents[0]->value.shape());
        for (int i = 0; i < co * ci; ++i)
            for (int k = 0; k < kk; ++k)
                g[static_cast<std::size_t>(i) * kk + k] = n.grad[static_cast<std::size_t>(i)];
        n.parents[0]->accumulate(g);
    });
}

// ---------------------------------------------------------------- 2-D maps

Ptr shift2d_wrap(Ptr x, int dy, int dx) {
    const int h = x->value.dim(0), w = x->value.dim(1);
    Tensor v(x->value.shape());
    for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx)
            v.at(y, xx) = x->value.at(((y - dy) % h + h) % h, ((xx - dx) % w + w) % w);
    return make_node(std::move(v), {x}, [h, w, dy, dx](Node& n) {
        Tensor g(n.parents[0]->value.shape());
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx)
                g.at(((y - dy) % h + h) % h, ((xx - dx) % w + w) % w) += n.grad.at(y, xx);
        n.parents[0]->accumulate(g);
    });
}

Ptr avgpool2x2_gain(Ptr x, double gain) {
    const int h = x->value.dim(0), w = x->value.dim(1);
    if (h % 2 || w % 2) throw std::invalid_argument("avgpool2x2: odd side");
    Tensor v(std::vector<int>{h / 2, w / 2});
    kernels::avgpool2x2_forward(x->value, gain, v);
    return make_node(std::move(v), {x}, [gain](Node& n) {
        Tensor g(n.parents[0]->value.shape());
        kernels::avgpool2x2_backward(n.grad, gain, g);
        n.parents[0]->accumulate(g);
    });
}

// ------------------------------------------------------------ shape / scalar

Ptr scale_by_scalar(Ptr x, Ptr s) {
    if (s->value.numel() != 1) throw std::invalid_argument("scale_by_scalar: s must be scalar");
    Tensor v = x->value;
    v *= s->value[0];
    return make_node(std::move(v), {x, s}, [](Node& n) {
        const Ptr& x = n.parents[0];
        const Ptr& s = n.parents[1];
        if (x->requires_grad) {
            Tensor g = n.grad;
            g *= s->value[0];
            x->accumulate(g);
        }
        if (s->requires_grad) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n.grad.numel(); ++i) acc += n.grad[i] * x->value[i];
            Tensor gs(std::vector<int>{1});
            gs[0] = acc;
            s->accumulate(gs);
        }
    });
}

Ptr flatten(Ptr x) {
    Tensor v(std::vector<int>{static_cast<int>(x->value.numel())});
    for (std::size_t i = 0; i < v.numel(); ++i) v[i] = x->value[i];
    return make_node(std::move(v), {x}, [](Node& n) {
        Tensor g(n.parents[0]->value.shape());
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] = n.grad[i];
        n.parents[0]->accumulate(g);
    });
}

// ---------------------------------------------------------------- gradcheck

double gradcheck(const std::function<Ptr(Ptr)>& f, const Tensor& x0, int probes,
                 std::uint64_t seed, double h) {
    Ptr x = leaf(x0, true);
    Ptr y = f(x);
    backward(y);
    const Tensor analytic = x->grad;

    Rng rng(seed);
    double worst = 0.0;
    for (int p = 0; p < probes; ++p) {
        const std::size_t idx = rng.next_u64() % x0.numel();
        Tensor xp = x0, xm = x0;
        xp[idx] += h;
        xm[idx] -= h;
        const double fp = f(leaf(xp, false))->value[0];
        const double fm = f(leaf(xm, false))->value[0];
        const double fd = (fp - fm) / (2.0 * h);
        const double an = analytic[idx];
        // absolute floor keeps fp roundoff from dominating near-zero entries
        const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
        worst = std::max(worst, std::abs(fd - an) / denom);
    }
    return worst;
}

}  // namespace normscore::ad
