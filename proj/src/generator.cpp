#include "normscore/generator.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "normscore/rng.hpp"

namespace normscore {

namespace nad = ad;
using json = nlohmann::json;

namespace {

int ilog2(int v) {
    int k = 0;
    while (v > 1) {
        v >>= 1;
        ++k;
    }
    return k;
}

bool power_of_two(int v) { return v >= 1 && (v & (v - 1)) == 0; }

StyledConv make_conv(int cout, int cin, int latent_dim, Rng& rng) {
    StyledConv c;
    c.weight = Tensor::randn({cout, cin, 3, 3}, rng, 1.0 / std::sqrt(9.0 * cin));
    c.bias = Tensor::zeros({cout});
    c.style_weight = Tensor::randn({cin, latent_dim}, rng, 1.0 / std::sqrt(latent_dim));
    c.style_bias = Tensor::zeros({cin});
    c.noise_gain = Tensor::full({1}, 0.05);
    return c;
}

}  // namespace

int noise_input_count(int resolution) {
    if (!power_of_two(resolution) || resolution < 4)
        throw std::invalid_argument("noise_input_count: bad resolution");
    return 2 * (ilog2(resolution) - 1);
}

int GeneratorModel::channels_for(int res) {
    if (res <= 8) return 48;
    if (res == 16) return 32;
    if (res == 32) return 24;
    return 16;
}

GeneratorModel GeneratorModel::create(int resolution, int latent_dim, std::uint64_t seed) {
    if (!power_of_two(resolution) || resolution < 16)
        throw std::invalid_argument("GeneratorModel: resolution must be a power of two >= 16");
    GeneratorModel g;
    g.resolution = resolution;
    g.latent_dim = latent_dim;
    Rng rng(seed);
    for (int i = 0; i < g.n_mapping; ++i) {
        MappingLayer l;
        l.weight = Tensor::randn({latent_dim, latent_dim}, rng, 1.0 / std::sqrt(latent_dim));
        l.bias = Tensor::zeros({latent_dim});
        g.mapping.push_back(std::move(l));
    }
    g.const_input = Tensor::randn({channels_for(4), 4, 4}, rng);
    int cin = channels_for(4);
    for (int res = 4; res <= resolution; res *= 2) {
        SynthLevel lvl;
        lvl.res = res;
        const int cout = channels_for(res);
        lvl.conv0 = make_conv(cout, cin, latent_dim, rng);
        lvl.conv1 = make_conv(cout, cout, latent_dim, rng);
        cin = cout;
        g.levels.push_back(std::move(lvl));
    }
    g.torgb_weight = Tensor::randn({3, cin, 1, 1}, rng, 1.0 / std::sqrt(cin));
    g.torgb_bias = Tensor::zeros({3});
    return g;
}

std::vector<int> GeneratorModel::resolutions() const {
    std::vector<int> r;
    for (const auto& l : levels) r.push_back(l.res);
    return r;
}

std::vector<int> GeneratorModel::noise_shapes() const {
    std::vector<int> s;
    for (const auto& l : levels) {
        s.push_back(l.res);
        s.push_back(l.res);
    }
    return s;
}

std::vector<std::pair<std::string, Tensor*>> GeneratorModel::named_params() {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (std::size_t i = 0; i < mapping.size(); ++i) {
        out.emplace_back("mapping." + std::to_string(i) + ".weight", &mapping[i].weight);
        out.emplace_back("mapping." + std::to_string(i) + ".bias", &mapping[i].bias);
    }
    out.emplace_back("synthesis.const", &const_input);
    for (auto& lvl : levels) {
        const std::string base = "synthesis.L" + std::to_string(lvl.res) + ".conv";
        StyledConv* convs[2] = {&lvl.conv0, &lvl.conv1};
        for (int c = 0; c < 2; ++c) {
            const std::string p = base + std::to_string(c) + ".";
            out.emplace_back(p + "weight", &convs[c]->weight);
            out.emplace_back(p + "bias", &convs[c]->bias);
            out.emplace_back(p + "style_weight", &convs[c]->style_weight);
            out.emplace_back(p + "style_bias", &convs[c]->style_bias);
            out.emplace_back(p + "noise_gain", &convs[c]->noise_gain);
        }
    }
    out.emplace_back("torgb.weight", &torgb_weight);
    out.emplace_back("torgb.bias", &torgb_bias);
    return out;
}

std::vector<std::pair<std::string, const Tensor*>> GeneratorModel::named_params() const {
    auto mut = const_cast<GeneratorModel*>(this)->named_params();
    std::vector<std::pair<std::string, const Tensor*>> out;
    out.reserve(mut.size());
    for (auto& [n, t] : mut) out.emplace_back(n, t);
    return out;
}

std::vector<Tensor*> GeneratorModel::all_params() {
    std::vector<Tensor*> out;
    for (auto& [n, t] : named_params()) out.push_back(t);
    return out;
}

std::vector<Tensor*> GeneratorModel::synthesis_params() {
    std::vector<Tensor*> out;
    for (auto& [n, t] : named_params())
        if (n.rfind("mapping.", 0) != 0) out.push_back(t);
    return out;
}

bool GeneratorModel::all_finite() const {
    for (const auto& [n, t] : named_params())
        if (!t->all_finite()) return false;
    return true;
}

std::vector<ad::Ptr> GeneratorNodes::synthesis_param_nodes() const {
    std::vector<ad::Ptr> out;
    out.push_back(const_input);
    for (const auto& lvl : levels)
        for (const auto& c : lvl) {
            out.push_back(c.weight);
            out.push_back(c.bias);
            out.push_back(c.style_weight);
            out.push_back(c.style_bias);
            out.push_back(c.noise_gain);
        }
    out.push_back(torgb_weight);
    out.push_back(torgb_bias);
    return out;
}

std::vector<ad::Ptr> GeneratorNodes::all_param_nodes() const {
    std::vector<ad::Ptr> out;
    for (std::size_t i = 0; i < map_w.size(); ++i) {
        out.push_back(map_w[i]);
        out.push_back(map_b[i]);
    }
    auto synth = synthesis_param_nodes();
    out.insert(out.end(), synth.begin(), synth.end());
    return out;
}

GeneratorNodes lift_generator(const GeneratorModel& G, bool mapping_grad,
                              bool synthesis_grad) {
    GeneratorNodes n;
    for (const auto& l : G.mapping) {
        n.map_w.push_back(nad::leaf(l.weight, mapping_grad));
        n.map_b.push_back(nad::leaf(l.bias, mapping_grad));
    }
    n.const_input = nad::leaf(G.const_input, synthesis_grad);
    for (const auto& lvl : G.levels) {
        std::array<GeneratorNodes::ConvNodes, 2> pair;
        const StyledConv* convs[2] = {&lvl.conv0, &lvl.conv1};
        for (int c = 0; c < 2; ++c) {
            pair[c].weight = nad::leaf(convs[c]->weight, synthesis_grad);
            pair[c].bias = nad::leaf(convs[c]->bias, synthesis_grad);
            pair[c].style_weight = nad::leaf(convs[c]->style_weight, synthesis_grad);
            pair[c].style_bias = nad::leaf(convs[c]->style_bias, synthesis_grad);
            pair[c].noise_gain = nad::leaf(convs[c]->noise_gain, synthesis_grad);
        }
        n.levels.push_back(pair);
    }
    n.torgb_weight = nad::leaf(G.torgb_weight, synthesis_grad);
    n.torgb_bias = nad::leaf(G.torgb_bias, synthesis_grad);
    return n;
}

ad::Ptr mapping_graph(const GeneratorNodes& nodes, ad::Ptr z) {
    // pixel norm keeps the latent scale fixed
    auto r = nad::rsqrt(nad::mean(nad::square(z)), 1e-8);
    auto x = nad::scale_by_scalar(z, r);
    for (std::size_t i = 0; i < nodes.map_w.size(); ++i)
        x = nad::leaky_relu(nad::linear(x, nodes.map_w[i], nodes.map_b[i]), 0.2);
    return x;
}

namespace {

ad::Ptr styled_conv_graph(ad::Ptr x, ad::Ptr w, const GeneratorNodes::ConvNodes& c,
                          ad::Ptr noise) {
    auto s = nad::add_scalar(nad::linear(w, c.style_weight, c.style_bias), 1.0);
    // modulate, convolve, demodulate
    auto xm = nad::channel_scale(x, s);
    auto y = nad::conv2d(xm, c.weight, nullptr, 1, 1);
    auto q = nad::sum_last2(nad::square(c.weight));
    auto t = nad::linear(nad::square(s), q, nullptr);
    y = nad::channel_scale(y, nad::rsqrt(t, 1e-8));
    return nad::conv_epilogue(y, noise, c.noise_gain, c.bias, 0.2);
}

}  // namespace

ad::Ptr synthesize_graph(const GeneratorNodes& nodes, ad::Ptr w,
                         const std::vector<ad::Ptr>& noise) {
    if (noise.size() != nodes.levels.size() * 2)
        throw std::invalid_argument("synthesize: noise map count mismatch");
    ad::Ptr x = nodes.const_input;
    for (std::size_t i = 0; i < nodes.levels.size(); ++i) {
        if (i > 0) x = nad::upsample2x(x);
        x = styled_conv_graph(x, w, nodes.levels[i][0], noise[2 * i]);
        x = styled_conv_graph(x, w, nodes.levels[i][1], noise[2 * i + 1]);
    }
    auto rgb = nad::conv2d(x, nodes.torgb_weight, nodes.torgb_bias, 1, 0);
    return nad::add_scalar(nad::mul_scalar(nad::tanh_op(rgb), 0.5), 0.5);
}

LatentVector sample_latent(const GeneratorModel& G, std::uint64_t seed) {
    Rng rng(seed);
    return LatentVector{Tensor::randn({G.latent_dim}, rng), LatentSpace::Z};
}

LatentVector map_latent(const GeneratorModel& G, const LatentVector& z) {
    if (z.space != LatentSpace::Z)
        throw std::invalid_argument("map_latent: input must be in Z space");
    if (z.values.dim(0) != G.latent_dim)
        throw std::invalid_argument("map_latent: latent dimension mismatch");
    const GeneratorNodes nodes = lift_generator(G, false, false);
    auto w = mapping_graph(nodes, nad::constant(z.values));
    return LatentVector{w->value, LatentSpace::W};
}

NoiseMapSet random_noise(const GeneratorModel& G, std::uint64_t seed) {
    Rng rng(seed);
    NoiseMapSet n;
    for (int s : G.noise_shapes()) n.maps.push_back(Tensor::randn({s, s}, rng));
    return n;
}

void normalize_noise(NoiseMapSet& noise) {
    for (Tensor& m : noise.maps) {
        const double mu = m.mean();
        double var = 0.0;
        for (std::size_t i = 0; i < m.numel(); ++i) var += (m[i] - mu) * (m[i] - mu);
        var /= static_cast<double>(m.numel());
        const double inv = 1.0 / std::sqrt(std::max(var, 1e-12));
        for (std::size_t i = 0; i < m.numel(); ++i) m[i] = (m[i] - mu) * inv;
    }
}

Image synthesize(const GeneratorModel& G, const LatentVector& w, const NoiseMapSet& noise) {
    if (w.space != LatentSpace::W)
        throw std::invalid_argument("synthesize: latent must be in W space");
    const auto shapes = G.noise_shapes();
    if (noise.maps.size() != shapes.size())
        throw std::invalid_argument("synthesize: noise map count mismatch");
    for (std::size_t i = 0; i < shapes.size(); ++i)
        if (noise.maps[i].dim(0) != shapes[i] || noise.maps[i].dim(1) != shapes[i])
            throw std::invalid_argument("synthesize: noise map shape mismatch");
    const GeneratorNodes nodes = lift_generator(G, false, false);
    std::vector<ad::Ptr> nn;
    for (const Tensor& m : noise.maps) nn.push_back(nad::constant(m));
    auto img = synthesize_graph(nodes, nad::constant(w.values), nn);
    return Image(img->value, ColorSpace::RGB);
}

// ---------------------------------------------------------------- checkpoint

namespace {
constexpr char kMagic[] = "NSGEN1\n";
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(const GeneratorModel& G, const std::string& path) {
    json header;
    header["resolution"] = G.resolution;
    header["latent_dim"] = G.latent_dim;
    header["n_mapping"] = G.n_mapping;
    json tensors = json::array();
    for (const auto& [name, t] : G.named_params()) {
        json e;
        e["name"] = name;
        e["shape"] = t->shape();
        tensors.push_back(e);
    }
    header["tensors"] = tensors;
    const std::string h = header.dump();

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write checkpoint " + path);
    f.write(kMagic, 7);
    f.write(reinterpret_cast<const char*>(&kVersion), 4);
    const std::uint64_t hlen = h.size();
    f.write(reinterpret_cast<const char*>(&hlen), 8);
    f.write(h.data(), static_cast<std::streamsize>(h.size()));
    for (const auto& [name, t] : G.named_params())
        f.write(reinterpret_cast<const char*>(t->data()),
                static_cast<std::streamsize>(t->numel() * sizeof(double)));
    if (!f) throw std::runtime_error("short checkpoint write " + path);
}

GeneratorModel load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint " + path);
    char magic[7];
    f.read(magic, 7);
    if (!f || std::string(magic, 7) != std::string(kMagic, 7))
        throw std::runtime_error("not a generator checkpoint: " + path);
    std::uint32_t version = 0;
    f.read(reinterpret_cast<char*>(&version), 4);
    if (version != kVersion)
        throw std::runtime_error("unsupported checkpoint version in " + path);
    std::uint64_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), 8);
    std::string h(hlen, '\0');
    f.read(h.data(), static_cast<std::streamsize>(hlen));
    const json header = json::parse(h);

    GeneratorModel g = GeneratorModel::create(header["resolution"].get<int>(),
                                              header["latent_dim"].get<int>(), 0);
    auto params = g.named_params();
    const json& tensors = header["tensors"];
    if (tensors.size() != params.size())
        throw std::runtime_error("checkpoint tensor count mismatch in " + path);
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (tensors[i]["name"].get<std::string>() != params[i].first)
            throw std::runtime_error("checkpoint tensor order mismatch at " + params[i].first);
        const auto shape = tensors[i]["shape"].get<std::vector<int>>();
        if (shape != params[i].second->shape())
            throw std::runtime_error("checkpoint shape mismatch at " + params[i].first);
        f.read(reinterpret_cast<char*>(params[i].second->data()),
               static_cast<std::streamsize>(params[i].second->numel() * sizeof(double)));
    }
    if (!f) throw std::runtime_error("truncated checkpoint " + path);
    return g;
}

}  // namespace normscore
