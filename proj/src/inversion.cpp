#include "normscore/inversion.hpp"

#include <cmath>
#include <fstream>

#include "normscore/optim.hpp"
#include "normscore/rng.hpp"

namespace normscore {

namespace nad = ad;

LatentVector compute_mean_latent(const GeneratorModel& G, int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("compute_mean_latent: n must be >= 1");
    Tensor acc(std::vector<int>{G.latent_dim});
    for (int i = 0; i < n; ++i) {
        const LatentVector z = sample_latent(G, Rng::derive(seed, static_cast<std::uint64_t>(i)));
        acc += map_latent(G, z).values;
    }
    acc *= 1.0 / n;
    return LatentVector{std::move(acc), LatentSpace::W};
}

ad::Ptr noise_regularization_graph(const std::vector<ad::Ptr>& maps) {
    ad::Ptr total;
    auto add_term = [&](ad::Ptr t) { total = total ? nad::add(total, t) : t; };
    for (const auto& m : maps) {
        ad::Ptr cur = m;
        while (cur->value.dim(0) >= 8 && cur->value.dim(1) >= 8) {
            const double inv_r2 =
                1.0 / (static_cast<double>(cur->value.dim(0)) * cur->value.dim(1));
            auto h = nad::mul_scalar(nad::sum(nad::mul(cur, nad::shift2d_wrap(cur, 0, 1))),
                                     inv_r2);
            auto v = nad::mul_scalar(nad::sum(nad::mul(cur, nad::shift2d_wrap(cur, 1, 0))),
                                     inv_r2);
            add_term(nad::add(nad::square(h), nad::square(v)));
            if (cur->value.dim(0) / 2 < 8) break;
            cur = nad::avgpool2x2_gain(cur, 2.0);
        }
    }
    if (!total) {
        Tensor z(std::vector<int>{1});
        total = nad::constant(std::move(z));
    }
    return total;
}

double noise_regularization(const NoiseMapSet& noise) {
    std::vector<ad::Ptr> nodes;
    nodes.reserve(noise.maps.size());
    for (const Tensor& m : noise.maps) nodes.push_back(nad::constant(m));
    return noise_regularization_graph(nodes)->value[0];
}

namespace {

// StyleGAN2-projector style schedule: cosine rampdown with a linear rampup.
double lr_ramp(double t, double rampup, double rampdown) {
    double ramp = std::min(1.0, (1.0 - t) / rampdown);
    ramp = 0.5 - 0.5 * std::cos(ramp * 3.14159265358979323846);
    return ramp * std::min(1.0, t / rampup);
}

}  // namespace

InversionResult invert(const GeneratorModel& G, const FeatureExtractor& fe,
                       const Image& target, const InversionConfig& cfg) {
    if (cfg.iterations < 1) throw std::invalid_argument("invert: iterations must be >= 1");
    if (cfg.alpha < 0.0) throw std::invalid_argument("invert: alpha must be >= 0");
    if (target.height() != G.resolution || target.width() != G.resolution)
        throw std::invalid_argument("invert: target not at generator resolution");

    // frozen target features; only the generated side changes per iteration
    const std::vector<Tensor> target_feats = fe.features(target.pixels());

    Tensor w = compute_mean_latent(G, cfg.mean_latent_samples, Rng::derive(cfg.seed, 1)).values;
    NoiseMapSet noise = random_noise(G, Rng::derive(cfg.seed, 2));
    normalize_noise(noise);

    std::vector<Tensor*> params{&w};
    for (Tensor& m : noise.maps) params.push_back(&m);
    Adam adam(cfg.step_size, 0.9, 0.999);

    const GeneratorNodes gnodes = lift_generator(G, false, false);

    InversionResult res;
    res.best_total_loss = 0.0;
    Tensor best_w = w;
    std::vector<Tensor> best_noise = noise.maps;
    bool have_best = false;

    for (int it = 0; it < cfg.iterations; ++it) {
        auto w_node = nad::leaf(w, true);
        std::vector<ad::Ptr> noise_nodes;
        noise_nodes.reserve(noise.maps.size());
        for (Tensor& m : noise.maps) noise_nodes.push_back(nad::leaf(m, true));

        auto img = synthesize_graph(gnodes, w_node, noise_nodes);
        auto image_loss = lpips_graph_fixed(fe, target_feats, img);
        auto reg = noise_regularization_graph(noise_nodes);
        auto total = nad::add(image_loss, nad::mul_scalar(reg, cfg.alpha));

        const double img_l = image_loss->value[0];
        const double reg_l = reg->value[0];
        const double tot_l = total->value[0];
        if (!std::isfinite(tot_l))
            throw std::runtime_error("invert: non-finite loss at iteration " +
                                     std::to_string(it));
        res.trace.push_back({img_l, reg_l});
        if (it == 0) res.initial_image_loss = img_l;
        if (!have_best || tot_l < res.best_total_loss) {
            res.best_total_loss = tot_l;
            best_w = w;
            best_noise = noise.maps;
            have_best = true;
        }

        nad::backward(total);

        std::vector<const Tensor*> grads;
        grads.push_back(&w_node->ensure_grad());
        for (auto& nn : noise_nodes) grads.push_back(&nn->ensure_grad());
        const double t = static_cast<double>(it) / cfg.iterations;
        adam.step(params, grads, lr_ramp(t, cfg.rampup_frac, cfg.rampdown_frac));
        normalize_noise(noise);
    }

    res.w = LatentVector{std::move(best_w), LatentSpace::W};
    res.noise.maps = std::move(best_noise);
    res.final_image = synthesize(G, res.w, res.noise);
    return res;
}

void write_inversion_trace(const std::string& path, const InversionResult& res,
                           double alpha) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write trace " + path);
    f << "iter,image_loss,reg_loss,total\n";
    for (std::size_t i = 0; i < res.trace.size(); ++i) {
        const auto& row = res.trace[i];
        f << i << ',' << row.image_loss << ',' << row.reg_loss << ','
          << row.image_loss + alpha * row.reg_loss << '\n';
    }
}

namespace {
constexpr char kInvMagic[] = "NSINV1\n";
}

void save_inversion(const InversionResult& res, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write inversion result " + path);
    f.write(kInvMagic, 7);
    const std::uint32_t dim = static_cast<std::uint32_t>(res.w.values.dim(0));
    const std::uint32_t nmaps = static_cast<std::uint32_t>(res.noise.maps.size());
    f.write(reinterpret_cast<const char*>(&dim), 4);
    f.write(reinterpret_cast<const char*>(&nmaps), 4);
    f.write(reinterpret_cast<const char*>(res.w.values.data()),
            static_cast<std::streamsize>(dim * sizeof(double)));
    for (const Tensor& m : res.noise.maps) {
        const std::uint32_t side = static_cast<std::uint32_t>(m.dim(0));
        f.write(reinterpret_cast<const char*>(&side), 4);
        f.write(reinterpret_cast<const char*>(m.data()),
                static_cast<std::streamsize>(m.numel() * sizeof(double)));
    }
    if (!f) throw std::runtime_error("short inversion write " + path);
}

void load_inversion(const std::string& path, LatentVector& w, NoiseMapSet& noise) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open inversion result " + path);
    char magic[7];
    f.read(magic, 7);
    if (!f || std::string(magic, 7) != std::string(kInvMagic, 7))
        throw std::runtime_error("not an inversion result: " + path);
    std::uint32_t dim = 0, nmaps = 0;
    f.read(reinterpret_cast<char*>(&dim), 4);
    f.read(reinterpret_cast<char*>(&nmaps), 4);
    Tensor wv(std::vector<int>{static_cast<int>(dim)});
    f.read(reinterpret_cast<char*>(wv.data()), static_cast<std::streamsize>(dim * sizeof(double)));
    w = LatentVector{std::move(wv), LatentSpace::W};
    noise.maps.clear();
    for (std::uint32_t i = 0; i < nmaps; ++i) {
        std::uint32_t side = 0;
        f.read(reinterpret_cast<char*>(&side), 4);
        Tensor m(std::vector<int>{static_cast<int>(side), static_cast<int>(side)});
        f.read(reinterpret_cast<char*>(m.data()),
               static_cast<std::streamsize>(m.numel() * sizeof(double)));
        noise.maps.push_back(std::move(m));
    }
    if (!f) throw std::runtime_error("truncated inversion result " + path);
}

}  // namespace normscore
