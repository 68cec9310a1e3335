#include "normscore/runconfig.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace normscore {

using json = nlohmann::json;

RunConfig RunConfig::defaults() { return RunConfig{}; }

namespace {

json to_json_obj(const RunConfig& c) {
    json j;
    j["resolution"] = c.resolution;
    j["seed"] = c.seed;
    j["latent_dim"] = c.latent_dim;
    j["corpus"] = {{"train_n", c.corpus_train_n}, {"cohort_n", c.cohort_n}};
    j["extractor_seed"] = c.extractor_seed;
    j["train"] = {{"steps", c.train.steps},
                  {"batch", c.train.batch},
                  {"lr", c.train.lr},
                  {"adam_beta1", c.train.adam_beta1},
                  {"adam_beta2", c.train.adam_beta2},
                  {"penalty_gamma", c.train.penalty_gamma},
                  {"penalty_delta", c.train.penalty_delta},
                  {"penalty_interval", c.train.penalty_interval},
                  {"ema_decay", c.train.ema_decay},
                  {"log_interval", c.train.log_interval}};
    j["inversion"] = {{"mean_latent_samples", c.inversion.mean_latent_samples},
                      {"iterations", c.inversion.iterations},
                      {"alpha", c.inversion.alpha},
                      {"step_size", c.inversion.step_size},
                      {"rampup_frac", c.inversion.rampup_frac},
                      {"rampdown_frac", c.inversion.rampdown_frac}};
    j["adaptation"] = {{"iterations", c.adaptation.iterations},
                       {"step_size", c.adaptation.step_size}};
    j["output_dir"] = c.output_dir;
    return j;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config " + path);
    json j;
    try {
        f >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config parse error in " + path + ": " + e.what());
    }
    RunConfig c;
    maybe(j, "resolution", c.resolution);
    maybe(j, "seed", c.seed);
    maybe(j, "latent_dim", c.latent_dim);
    if (j.contains("corpus")) {
        maybe(j["corpus"], "train_n", c.corpus_train_n);
        maybe(j["corpus"], "cohort_n", c.cohort_n);
    }
    maybe(j, "extractor_seed", c.extractor_seed);
    if (j.contains("train")) {
        const json& t = j["train"];
        maybe(t, "steps", c.train.steps);
        maybe(t, "batch", c.train.batch);
        maybe(t, "lr", c.train.lr);
        maybe(t, "adam_beta1", c.train.adam_beta1);
        maybe(t, "adam_beta2", c.train.adam_beta2);
        maybe(t, "penalty_gamma", c.train.penalty_gamma);
        maybe(t, "penalty_delta", c.train.penalty_delta);
        maybe(t, "penalty_interval", c.train.penalty_interval);
        maybe(t, "ema_decay", c.train.ema_decay);
        maybe(t, "log_interval", c.train.log_interval);
    }
    if (j.contains("inversion")) {
        const json& t = j["inversion"];
        maybe(t, "mean_latent_samples", c.inversion.mean_latent_samples);
        maybe(t, "iterations", c.inversion.iterations);
        maybe(t, "alpha", c.inversion.alpha);
        maybe(t, "step_size", c.inversion.step_size);
        maybe(t, "rampup_frac", c.inversion.rampup_frac);
        maybe(t, "rampdown_frac", c.inversion.rampdown_frac);
    }
    if (j.contains("adaptation")) {
        const json& t = j["adaptation"];
        maybe(t, "iterations", c.adaptation.iterations);
        maybe(t, "step_size", c.adaptation.step_size);
    }
    maybe(j, "output_dir", c.output_dir);
    return c;
}

std::string RunConfig::to_json() const { return to_json_obj(*this).dump(2) + "\n"; }

void RunConfig::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write config " + path);
    f << to_json();
}

std::string make_run_dir(const RunConfig& cfg, const std::string& label) {
    namespace fs = std::filesystem;
    std::string root = cfg.output_dir;
    if (root.empty()) {
        const char* env = std::getenv("NORMSCORE_RUN_DIR");
        root = env && *env ? env : "runs";
    }
    fs::create_directories(root);

    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", std::gmtime(&tt));
    std::string dir = root + "/" + stamp + "_" + label;
    // disambiguate rapid successive runs
    int suffix = 1;
    std::string candidate = dir;
    while (fs::exists(candidate)) candidate = dir + "-" + std::to_string(suffix++);
    fs::create_directories(candidate);

    std::error_code ec;
    const fs::path link = fs::path(root) / "latest";
    fs::remove(link, ec);
    fs::create_symlink(fs::path(candidate).filename(), link, ec);
    return candidate;
}

}  // namespace normscore
