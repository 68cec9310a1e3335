#pragma once

#include <cstdint>
#include <string>

#include "normscore/adaptation.hpp"
#include "normscore/inversion.hpp"
#include "normscore/train.hpp"

namespace normscore {

// Everything a run needs, serializable so a run directory fully describes
// the work it holds. The documented JSON schema lives in the README.
struct RunConfig {
    int resolution = 64;
    std::uint64_t seed = 7;
    int latent_dim = 64;

    int corpus_train_n = 500;
    int cohort_n = 13;

    std::uint64_t extractor_seed = 1234;

    TrainConfig train;
    InversionConfig inversion;
    AdaptationConfig adaptation;

    std::string output_dir;  // empty: NORMSCORE_RUN_DIR, else ./runs

    static RunConfig defaults();
    static RunConfig from_file(const std::string& path);
    std::string to_json() const;
    void save(const std::string& path) const;
};

// Creates <root>/<stamp>_<label>/ and repoints <root>/latest. The root comes
// from cfg.output_dir, the NORMSCORE_RUN_DIR environment variable, or ./runs.
std::string make_run_dir(const RunConfig& cfg, const std::string& label);

}  // namespace normscore
