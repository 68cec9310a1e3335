#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "normscore/generator.hpp"
#include "normscore/rng.hpp"

using namespace normscore;
namespace nad = normscore::ad;

TEST_CASE("noise input count law") {
    CHECK(noise_input_count(16) == 6);
    CHECK(noise_input_count(32) == 8);
    CHECK(noise_input_count(64) == 10);
    CHECK(noise_input_count(1024) == 18);
}

TEST_CASE("model construction and shapes") {
    const GeneratorModel G = GeneratorModel::create(64, 64, 1);
    CHECK(G.resolutions() == std::vector<int>{4, 8, 16, 32, 64});
    CHECK(static_cast<int>(G.noise_shapes().size()) == noise_input_count(64));
    CHECK(G.all_finite());
    CHECK_THROWS_AS(GeneratorModel::create(48, 64, 1), std::invalid_argument);
}

TEST_CASE("sample_latent determinism and statistics") {
    const GeneratorModel G = GeneratorModel::create(16, 32, 2);
    const LatentVector a = sample_latent(G, 7);
    const LatentVector b = sample_latent(G, 7);
    CHECK(a.space == LatentSpace::Z);
    CHECK(a.values.dim(0) == 32);
    for (std::size_t i = 0; i < a.values.numel(); ++i) CHECK(a.values[i] == b.values[i]);

    // CLT bound on the per-coordinate mean of many draws
    const int n = 10000;
    Tensor mean(std::vector<int>{32});
    for (int i = 0; i < n; ++i)
        mean += sample_latent(G, Rng::derive(3, static_cast<std::uint64_t>(i))).values;
    mean *= 1.0 / n;
    for (std::size_t i = 0; i < mean.numel(); ++i) CHECK(std::abs(mean[i]) < 4.0 / std::sqrt(n));
}

TEST_CASE("map_latent contract") {
    const GeneratorModel G = GeneratorModel::create(16, 32, 3);
    const LatentVector z0 = sample_latent(G, 0);
    const LatentVector z1 = sample_latent(G, 1);
    const LatentVector w0 = map_latent(G, z0);
    const LatentVector w0b = map_latent(G, z0);
    CHECK(w0.space == LatentSpace::W);
    for (std::size_t i = 0; i < w0.values.numel(); ++i) CHECK(w0.values[i] == w0b.values[i]);

    const LatentVector w1 = map_latent(G, z1);
    double diff = 0.0;
    for (std::size_t i = 0; i < w0.values.numel(); ++i)
        diff += std::abs(w0.values[i] - w1.values[i]);
    CHECK(diff > 0.0);

    CHECK_THROWS_AS(map_latent(G, w0), std::invalid_argument);

    for (int s = 0; s < 1000; ++s) {
        const LatentVector w = map_latent(G, sample_latent(G, static_cast<std::uint64_t>(s)));
        REQUIRE(w.values.all_finite());
    }
}

TEST_CASE("synthesize determinism, range and noise sensitivity") {
    const GeneratorModel G = GeneratorModel::create(16, 32, 4);
    const LatentVector w = map_latent(G, sample_latent(G, 5));
    NoiseMapSet n0 = random_noise(G, 6);

    const Image a = synthesize(G, w, n0);
    const Image b = synthesize(G, w, n0);
    CHECK(a.height() == 16);
    for (std::size_t i = 0; i < a.pixels().numel(); ++i) CHECK(a.pixels()[i] == b.pixels()[i]);
    CHECK(a.pixels().min() >= 0.0);
    CHECK(a.pixels().max() <= 1.0);

    NoiseMapSet zeros;
    for (int s : G.noise_shapes()) zeros.maps.push_back(Tensor::zeros({s, s}));
    const Image c = synthesize(G, w, zeros);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.pixels().numel(); ++i)
        diff += std::abs(a.pixels()[i] - c.pixels()[i]);
    CHECK(diff > 0.0);

    NoiseMapSet bad = n0;
    bad.maps.pop_back();
    CHECK_THROWS_AS(synthesize(G, w, bad), std::invalid_argument);
    CHECK_THROWS_AS(synthesize(G, sample_latent(G, 1), n0), std::invalid_argument);
}

TEST_CASE("synthesize gradient wrt w matches finite differences") {
    const GeneratorModel G = GeneratorModel::create(16, 16, 7);
    const NoiseMapSet noise = random_noise(G, 8);
    const GeneratorNodes nodes = lift_generator(G, false, false);
    std::vector<nad::Ptr> nn;
    for (const Tensor& m : noise.maps) nn.push_back(nad::constant(m));

    const Tensor w0 = map_latent(G, sample_latent(G, 9)).values;
    auto f = [&](nad::Ptr w) { return nad::mean(synthesize_graph(nodes, w, nn)); };
    CHECK(nad::gradcheck(f, w0, 20, 200) < 1e-3);
}

TEST_CASE("synthesize gradient wrt every noise map matches finite differences") {
    const GeneratorModel G = GeneratorModel::create(16, 16, 10);
    const NoiseMapSet noise = random_noise(G, 11);
    const GeneratorNodes nodes = lift_generator(G, false, false);
    const Tensor w0 = map_latent(G, sample_latent(G, 12)).values;

    for (std::size_t target = 0; target < noise.maps.size(); ++target) {
        auto f = [&](nad::Ptr nm) {
            std::vector<nad::Ptr> nn;
            for (std::size_t i = 0; i < noise.maps.size(); ++i)
                nn.push_back(i == target ? nm : nad::constant(noise.maps[i]));
            return nad::mean(synthesize_graph(nodes, nad::constant(w0), nn));
        };
        CHECK(nad::gradcheck(f, noise.maps[target], 4, 300 + target) < 1e-3);
    }
}

TEST_CASE("checkpoint round trip reproduces outputs") {
    namespace fs = std::filesystem;
    const GeneratorModel G = GeneratorModel::create(16, 32, 13);
    const fs::path dir = fs::temp_directory_path() / "normscore_ckpt_test";
    fs::create_directories(dir);
    const std::string path = (dir / "g.ckpt").string();
    save_checkpoint(G, path);
    const GeneratorModel H = load_checkpoint(path);
    CHECK(H.resolution == G.resolution);
    CHECK(H.latent_dim == G.latent_dim);

    for (int probe = 0; probe < 10; ++probe) {
        const LatentVector w =
            map_latent(G, sample_latent(G, 100 + static_cast<std::uint64_t>(probe)));
        const NoiseMapSet n = random_noise(G, 200 + static_cast<std::uint64_t>(probe));
        const Image a = synthesize(G, w, n);
        const Image b = synthesize(H, w, n);
        for (std::size_t i = 0; i < a.pixels().numel(); ++i)
            CHECK(a.pixels()[i] == b.pixels()[i]);
    }
    fs::remove_all(dir);
}

TEST_CASE("normalize_noise hits zero mean unit variance") {
    const GeneratorModel G = GeneratorModel::create(32, 16, 14);
    NoiseMapSet n = random_noise(G, 15);
    for (Tensor& m : n.maps) m *= 3.7;
    normalize_noise(n);
    for (const Tensor& m : n.maps) {
        CHECK(std::abs(m.mean()) < 1e-9);
        double var = 0.0;
        for (std::size_t i = 0; i < m.numel(); ++i) var += m[i] * m[i];
        var /= static_cast<double>(m.numel());
        CHECK(std::abs(var - 1.0) < 1e-9);
    }
}
