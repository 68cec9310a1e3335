#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "normscore/autograd.hpp"
#include "normscore/image.hpp"

namespace normscore {

enum class LatentSpace { Z, W };

struct LatentVector {
    Tensor values;  // (latent_dim)
    LatentSpace space = LatentSpace::Z;
};

// Per-resolution noise maps injected during synthesis; the optimization
// target of the inversion loop alongside w.
struct NoiseMapSet {
    std::vector<Tensor> maps;  // maps[2i], maps[2i+1] are res_i x res_i
};

struct MappingLayer {
    Tensor weight, bias;
};

// One style-modulated 3x3 convolution: weights are scaled per input channel
// by an affine function of w, demodulated per output channel, and a scaled
// single-channel noise map plus bias is added before the activation.
struct StyledConv {
    Tensor weight;        // (Cout,Cin,3,3)
    Tensor bias;          // (Cout)
    Tensor style_weight;  // (Cin,latent_dim)
    Tensor style_bias;    // (Cin)
    Tensor noise_gain;    // (1)
};

struct SynthLevel {
    int res = 4;
    StyledConv conv0, conv1;
};

// Number of noise inputs at a given output resolution: 2*(log2(R)-1).
int noise_input_count(int resolution);

class GeneratorModel {
public:
    static GeneratorModel create(int resolution, int latent_dim, std::uint64_t seed);

    int resolution = 64;
    int latent_dim = 64;
    int n_mapping = 3;

    std::vector<MappingLayer> mapping;
    Tensor const_input;  // (C0,4,4)
    std::vector<SynthLevel> levels;
    Tensor torgb_weight;  // (3,Clast,1,1)
    Tensor torgb_bias;    // (3)

    std::vector<int> resolutions() const;
    std::vector<int> noise_shapes() const;  // side length per noise input
    static int channels_for(int res);

    // Stable enumeration used by the checkpoint format and the optimizers.
    std::vector<std::pair<std::string, Tensor*>> named_params();
    std::vector<std::pair<std::string, const Tensor*>> named_params() const;
    std::vector<Tensor*> all_params();
    std::vector<Tensor*> synthesis_params();  // everything but the mapping net

    bool all_finite() const;
};

// Autograd view of the generator parameters. Mapping and synthesis grads are
// toggled separately: inversion needs neither, adaptation only synthesis,
// adversarial training both.
struct GeneratorNodes {
    std::vector<ad::Ptr> map_w, map_b;
    ad::Ptr const_input;
    struct ConvNodes {
        ad::Ptr weight, bias, style_weight, style_bias, noise_gain;
    };
    std::vector<std::array<ConvNodes, 2>> levels;
    ad::Ptr torgb_weight, torgb_bias;

    std::vector<ad::Ptr> synthesis_param_nodes() const;
    std::vector<ad::Ptr> all_param_nodes() const;
};

GeneratorNodes lift_generator(const GeneratorModel& G, bool mapping_grad,
                              bool synthesis_grad);

// z -> w forward pass (pixel-norm then the mapping MLP).
ad::Ptr mapping_graph(const GeneratorNodes& nodes, ad::Ptr z);

// (w, noise) -> image node in [0,1], shape (3,R,R).
ad::Ptr synthesize_graph(const GeneratorNodes& nodes, ad::Ptr w,
                         const std::vector<ad::Ptr>& noise);

// ---- convenience entry points (no gradients) ----
LatentVector sample_latent(const GeneratorModel& G, std::uint64_t seed);
LatentVector map_latent(const GeneratorModel& G, const LatentVector& z);
NoiseMapSet random_noise(const GeneratorModel& G, std::uint64_t seed);
// Renormalizes each map to zero mean, unit variance.
void normalize_noise(NoiseMapSet& noise);
Image synthesize(const GeneratorModel& G, const LatentVector& w, const NoiseMapSet& noise);

// ---- checkpoint container ----
// Versioned binary: magic "NSGEN1\n", a JSON header with the architecture
// hyperparameters and the tensor index, then raw little-endian doubles.
void save_checkpoint(const GeneratorModel& G, const std::string& path);
GeneratorModel load_checkpoint(const std::string& path);

}  // namespace normscore
