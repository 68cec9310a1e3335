#include "normscore/adaptation.hpp"

#include <cmath>
#include <fstream>

#include "normscore/optim.hpp"

namespace normscore {

namespace nad = ad;

ad::Ptr combined_loss_graph(const FeatureExtractor& fe, const std::vector<Tensor>& x_feats,
                            const Tensor& x_pixels, ad::Ptr y01, ad::Ptr* lpips_out,
                            ad::Ptr* l2_out) {
    auto lp = lpips_graph_fixed(fe, x_feats, y01);
    auto l2 = nad::mean(nad::square(nad::sub(nad::constant(x_pixels), y01)));
    if (lpips_out) *lpips_out = lp;
    if (l2_out) *l2_out = l2;
    return nad::add(lp, l2);
}

CombinedLoss combined_loss(const Image& x, const Image& x_prime, const FeatureExtractor& fe) {
    if (!x.same_shape(x_prime)) throw std::invalid_argument("combined_loss: shape mismatch");
    ad::Ptr lp, l2;
    auto total = combined_loss_graph(fe, fe.features(x.pixels()), x.pixels(),
                                     nad::constant(x_prime.pixels()), &lp, &l2);
    return CombinedLoss{total->value[0], lp->value[0], l2->value[0]};
}

namespace {

double masked_sq_err(const Tensor& a, const Tensor& b, const Mask& roi) {
    double e = 0.0;
    const int h = a.dim(1), w = a.dim(2);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double m = roi.weights().at(y, x);
            if (m <= 0.0) continue;
            for (int c = 0; c < 3; ++c) {
                const double d = a.at(c, y, x) - b.at(c, y, x);
                e += m * d * d;
            }
        }
    return e;
}

}  // namespace

AdaptationResult adapt(const GeneratorModel& G, const LatentVector& w,
                       const NoiseMapSet& noise, const Image& target,
                       const FeatureExtractor& fe, const AdaptationConfig& cfg,
                       const Mask* roi) {
    if (cfg.iterations < 0) throw std::invalid_argument("adapt: iterations must be >= 0");
    if (w.space != LatentSpace::W)
        throw std::invalid_argument("adapt: latent must be in W space");

    AdaptationResult res;
    res.adapted = G;  // private copy; the source model stays untouched

    const std::vector<Tensor> target_feats = fe.features(target.pixels());
    const Tensor w_frozen = w.values;
    std::vector<Tensor> noise_frozen = noise.maps;

    Adam adam(cfg.step_size, 0.9, 0.999);
    std::vector<Tensor*> params = res.adapted.synthesis_params();

    auto wants_snapshot = [&](int iteration) {
        for (int want : cfg.snapshot_iterations)
            if (want == iteration) return true;
        return false;
    };

    for (int it = 0; it < cfg.iterations; ++it) {
        const GeneratorNodes nodes = lift_generator(res.adapted, false, true);
        std::vector<ad::Ptr> noise_nodes;
        for (const Tensor& m : noise_frozen) noise_nodes.push_back(nad::constant(m));
        auto img = synthesize_graph(nodes, nad::constant(w_frozen), noise_nodes);

        ad::Ptr lp, l2;
        auto total =
            combined_loss_graph(fe, target_feats, target.pixels(), img, &lp, &l2);
        if (!std::isfinite(total->value[0]))
            throw std::runtime_error("adapt: non-finite loss at iteration " +
                                     std::to_string(it));
        res.trace.push_back({lp->value[0], l2->value[0]});
        if (cfg.track_anomaly_reconstruction && roi)
            res.roi_pse_trace.push_back(masked_sq_err(target.pixels(), img->value, *roi));

        nad::backward(total);
        const auto param_nodes = nodes.synthesis_param_nodes();
        std::vector<const Tensor*> grads;
        grads.reserve(param_nodes.size());
        for (const auto& pn : param_nodes) grads.push_back(&pn->ensure_grad());
        adam.step(params, grads);

        const int done = it + 1;
        if (wants_snapshot(done)) {
            // snapshot reflects the state after `done` update steps
            LatentVector wl{w_frozen, LatentSpace::W};
            NoiseMapSet nm{noise_frozen};
            res.snapshots.push_back({done, synthesize(res.adapted, wl, nm)});
        }
    }

    LatentVector wl{w_frozen, LatentSpace::W};
    NoiseMapSet nm{noise_frozen};
    res.normalized = synthesize(res.adapted, wl, nm);
    return res;
}

void write_adaptation_trace(const std::string& path, const AdaptationResult& res) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write trace " + path);
    f << "iter,lpips,l2,total";
    const bool roi = !res.roi_pse_trace.empty();
    if (roi) f << ",roi_pse";
    f << '\n';
    for (std::size_t i = 0; i < res.trace.size(); ++i) {
        f << i << ',' << res.trace[i].lpips << ',' << res.trace[i].l2 << ','
          << res.trace[i].total();
        if (roi) f << ',' << res.roi_pse_trace[i];
        f << '\n';
    }
}

}  // namespace normscore
