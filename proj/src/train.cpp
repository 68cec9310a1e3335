#include "normscore/train.hpp"

#include <cmath>
#include <fstream>

#include "normscore/optim.hpp"
#include "normscore/rng.hpp"

namespace normscore {

namespace nad = ad;

namespace {

struct DiscLayer {
    Tensor weight, bias;
    int stride = 2;
};

struct Discriminator {
    std::vector<DiscLayer> convs;
    Tensor fc_weight, fc_bias;

    static Discriminator create(int resolution, std::uint64_t seed) {
        Discriminator d;
        Rng rng(seed);
        int cin = 3, res = resolution;
        const int chans[] = {16, 24, 32, 48, 48, 48};
        int li = 0;
        // stride-1 stem, then stride-2 stages down to 4x4
        d.convs.push_back({Tensor::randn({chans[0], cin, 3, 3}, rng, 1.0 / std::sqrt(9.0 * cin)),
                           Tensor::zeros({chans[0]}), 1});
        cin = chans[0];
        while (res > 4) {
            ++li;
            const int cout = chans[std::min(li, 5)];
            d.convs.push_back(
                {Tensor::randn({cout, cin, 3, 3}, rng, 1.0 / std::sqrt(9.0 * cin)),
                 Tensor::zeros({cout}), 2});
            cin = cout;
            res /= 2;
        }
        d.fc_weight = Tensor::randn({1, cin * 16}, rng, 1.0 / std::sqrt(cin * 16.0));
        d.fc_bias = Tensor::zeros({1});
        return d;
    }

    std::vector<Tensor*> params() {
        std::vector<Tensor*> out;
        for (auto& l : convs) {
            out.push_back(&l.weight);
            out.push_back(&l.bias);
        }
        out.push_back(&fc_weight);
        out.push_back(&fc_bias);
        return out;
    }
};

struct DiscNodes {
    std::vector<std::pair<ad::Ptr, ad::Ptr>> convs;  // weight, bias
    std::vector<int> strides;
    ad::Ptr fc_w, fc_b;

    std::vector<ad::Ptr> param_nodes() const {
        std::vector<ad::Ptr> out;
        for (const auto& [w, b] : convs) {
            out.push_back(w);
            out.push_back(b);
        }
        out.push_back(fc_w);
        out.push_back(fc_b);
        return out;
    }
};

DiscNodes lift_disc(Discriminator& D, bool grad) {
    DiscNodes n;
    for (auto& l : D.convs) {
        n.convs.emplace_back(nad::leaf(l.weight, grad), nad::leaf(l.bias, grad));
        n.strides.push_back(l.stride);
    }
    n.fc_w = nad::leaf(D.fc_weight, grad);
    n.fc_b = nad::leaf(D.fc_bias, grad);
    return n;
}

// img01 -> logit
ad::Ptr disc_graph(const DiscNodes& n, ad::Ptr img01) {
    ad::Ptr x = nad::add_scalar(nad::mul_scalar(img01, 2.0), -1.0);
    for (std::size_t i = 0; i < n.convs.size(); ++i)
        x = nad::leaky_relu(
            nad::conv2d(x, n.convs[i].first, n.convs[i].second, n.strides[i], 1), 0.2);
    return nad::linear(nad::flatten(x), n.fc_w, n.fc_b);
}

void accumulate_grads(const std::vector<ad::Ptr>& nodes, std::vector<Tensor>& acc) {
    if (acc.empty())
        for (const auto& p : nodes) acc.push_back(Tensor::zeros(p->value.shape()));
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i]->grad_ready) acc[i] += nodes[i]->grad;
}

double image_pixel_std(const Tensor& px) {
    const double mu = px.mean();
    double var = 0.0;
    for (std::size_t i = 0; i < px.numel(); ++i) var += (px[i] - mu) * (px[i] - mu);
    return std::sqrt(var / static_cast<double>(px.numel()));
}

}  // namespace

GeneratorModel train_generator(const std::vector<Image>& corpus, int latent_dim,
                               const TrainConfig& cfg,
                               std::vector<TrainMetricsRow>* metrics) {
    if (corpus.size() < 200)
        throw std::invalid_argument("train_generator: corpus must hold >= 200 images");
    const int res = corpus.front().height();
    for (const Image& im : corpus)
        if (im.height() != res || im.width() != res)
            throw std::invalid_argument("train_generator: corpus images differ in size");

    GeneratorModel G = GeneratorModel::create(res, latent_dim, Rng::derive(cfg.seed, 1));
    Discriminator D = Discriminator::create(res, Rng::derive(cfg.seed, 2));
    GeneratorModel ema = G;

    Adam adam_g(cfg.lr, cfg.adam_beta1, cfg.adam_beta2);
    Adam adam_d(cfg.lr, cfg.adam_beta1, cfg.adam_beta2);
    Rng rng(Rng::derive(cfg.seed, 3));

    const auto g_params = G.all_params();
    const auto d_params = D.params();
    auto ema_params = ema.all_params();

    std::uint64_t noise_ctr = 0;
    auto fresh_fake = [&](bool /*unused*/) {
        const LatentVector z = sample_latent(G, rng.next_u64());
        const LatentVector w = map_latent(G, z);
        NoiseMapSet nm = random_noise(G, Rng::derive(cfg.seed, 1000000 + noise_ctr++));
        return std::pair<LatentVector, NoiseMapSet>(w, std::move(nm));
    };

    for (int step = 0; step < cfg.steps; ++step) {
        // ---- discriminator step ----
        std::vector<Tensor> d_grads;
        double d_loss_sum = 0.0, pen_sum = 0.0;
        const bool with_penalty = cfg.penalty_gamma > 0.0 && step % cfg.penalty_interval == 0;
        for (int b = 0; b < cfg.batch; ++b) {
            const Image& real = corpus[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<int>(corpus.size()) - 1))];
            auto [w, nm] = fresh_fake(true);
            const Image fake = synthesize(G, w, nm);

            DiscNodes dn = lift_disc(D, true);
            auto real_node = nad::constant(real.pixels());
            auto d_real = disc_graph(dn, real_node);
            auto d_fake = disc_graph(dn, nad::constant(fake.pixels()));
            auto loss = nad::add(nad::softplus(nad::mul_scalar(d_real, -1.0)),
                                 nad::softplus(d_fake));
            if (with_penalty) {
                // directional finite-difference gradient penalty at the real
                Tensor dir = Tensor::randn(real.pixels().shape(), rng);
                double nrm = 0.0;
                for (std::size_t i = 0; i < dir.numel(); ++i) nrm += dir[i] * dir[i];
                dir *= 1.0 / std::sqrt(std::max(nrm, 1e-12));
                Tensor shifted = real.pixels();
                for (std::size_t i = 0; i < shifted.numel(); ++i)
                    shifted[i] += cfg.penalty_delta * dir[i];
                auto d_shift = disc_graph(dn, nad::constant(shifted));
                auto diff = nad::mul_scalar(nad::sub(d_shift, d_real), 1.0 / cfg.penalty_delta);
                auto pen = nad::mul_scalar(nad::square(diff), cfg.penalty_gamma);
                pen_sum += pen->value[0];
                loss = nad::add(loss, pen);
            }
            d_loss_sum += loss->value[0];
            nad::backward(loss);
            accumulate_grads(dn.param_nodes(), d_grads);
        }
        if (!std::isfinite(d_loss_sum))
            throw std::runtime_error("train_generator: discriminator loss diverged at step " +
                                     std::to_string(step));
        for (Tensor& g : d_grads) g *= 1.0 / cfg.batch;
        {
            std::vector<const Tensor*> gp;
            for (const Tensor& g : d_grads) gp.push_back(&g);
            adam_d.step(d_params, gp);
        }

        // ---- generator step ----
        std::vector<Tensor> g_grads;
        double g_loss_sum = 0.0, std_sum = 0.0;
        for (int b = 0; b < cfg.batch; ++b) {
            GeneratorNodes gn = lift_generator(G, true, true);
            DiscNodes dn = lift_disc(D, false);
            const LatentVector z = sample_latent(G, rng.next_u64());
            auto w = mapping_graph(gn, nad::constant(z.values));
            NoiseMapSet nm = random_noise(G, Rng::derive(cfg.seed, 2000000 + noise_ctr++));
            std::vector<ad::Ptr> noise_nodes;
            for (const Tensor& m : nm.maps) noise_nodes.push_back(nad::constant(m));
            auto img = synthesize_graph(gn, w, noise_nodes);
            auto loss = nad::softplus(nad::mul_scalar(disc_graph(dn, img), -1.0));
            g_loss_sum += loss->value[0];
            std_sum += image_pixel_std(img->value);
            nad::backward(loss);
            accumulate_grads(gn.all_param_nodes(), g_grads);
        }
        if (!std::isfinite(g_loss_sum))
            throw std::runtime_error("train_generator: generator loss diverged at step " +
                                     std::to_string(step));
        for (Tensor& g : g_grads) g *= 1.0 / cfg.batch;
        {
            std::vector<const Tensor*> gp;
            for (const Tensor& g : g_grads) gp.push_back(&g);
            adam_g.step(g_params, gp);
        }

        // EMA of the generator weights
        auto g_now = G.all_params();
        for (std::size_t i = 0; i < ema_params.size(); ++i) {
            Tensor& e = *ema_params[i];
            const Tensor& p = *g_now[i];
            for (std::size_t k = 0; k < e.numel(); ++k)
                e[k] = cfg.ema_decay * e[k] + (1.0 - cfg.ema_decay) * p[k];
        }

        if (metrics && (step % cfg.log_interval == 0 || step == cfg.steps - 1))
            metrics->push_back({step, d_loss_sum / cfg.batch, g_loss_sum / cfg.batch,
                                pen_sum / cfg.batch, std_sum / cfg.batch});
    }
    return ema;
}

void write_train_log(const std::string& path, const std::vector<TrainMetricsRow>& rows) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write train log " + path);
    f << "step,d_loss,g_loss,penalty,fake_pixel_std\n";
    for (const auto& r : rows)
        f << r.step << ',' << r.d_loss << ',' << r.g_loss << ',' << r.penalty << ','
          << r.fake_pixel_std << '\n';
}

}  // namespace normscore
