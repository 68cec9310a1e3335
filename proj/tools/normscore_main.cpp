// normscore: single entry point for corpus generation, generator training,
// face normalization and anomaly scoring. Subcommand pipelines write their
// artifacts into timestamped run directories (see README).
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "normscore/evaluation.hpp"
#include "normscore/io.hpp"
#include "normscore/pipeline.hpp"
#include "normscore/runconfig.hpp"

using namespace normscore;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

RunConfig resolve_config(const CommonOpts& o) {
    RunConfig cfg = o.config_path.empty() ? RunConfig::defaults()
                                          : RunConfig::from_file(o.config_path);
    if (o.seed_set) cfg.seed = o.seed;
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "JSON config file; defaults otherwise");
    cmd->add_option("--seed", o.seed, "override the config seed")
        ->each([&o](const std::string&) { o.seed_set = true; });
}

Image load_aligned_input(const std::string& path, const std::string& eyes_csv,
                         int resolution) {
    Image img = read_png(path);
    if (!eyes_csv.empty()) {
        double lx, ly, rx, ry;
        if (std::sscanf(eyes_csv.c_str(), "%lf,%lf,%lf,%lf", &lx, &ly, &rx, &ry) != 4)
            throw std::invalid_argument("--eyes expects lx,ly,rx,ry");
        LandmarkSet lm;
        lm.eye_left = {lx, ly};
        lm.eye_right = {rx, ry};
        lm.mouth_center = {0.5 * (lx + rx), 0.5 * (ly + ry) + 1.5 * (rx - lx)};
        return align_face(img, lm, resolution).image;
    }
    if (img.height() != resolution || img.width() != resolution)
        throw std::invalid_argument(
            "input image is not at the generator resolution; pass --eyes to align");
    return img;
}

ScoreConfig score_config_from_flags(bool ycbcr, bool erosion, const std::string& method) {
    ScoreConfig cfg;
    cfg.color_space = ycbcr ? ColorSpace::YCbCr : ColorSpace::RGB;
    cfg.erosion = erosion;
    if (method == "pse")
        cfg.heatmap_method = HeatmapMethod::PSE;
    else if (method == "ssim")
        cfg.heatmap_method = HeatmapMethod::SSIM;
    else if (method == "lpips")
        cfg.heatmap_method = HeatmapMethod::LPIPS;
    else
        throw std::invalid_argument("unknown heatmap method: " + method);
    return cfg;
}

void write_heatmap_outputs(const HeatMap& hm, const std::string& png_path) {
    Tensor display = hm.values;
    const double mx = display.max();
    if (mx > 0.0) display *= 1.0 / mx;
    write_png_gray(png_path, display);
    const std::string npy = png_path.substr(0, png_path.rfind('.')) + ".npy";
    write_npy(npy, hm.values);
}

int run_gen_corpus(const CommonOpts& common, int n_override, int train_n_override,
                   const std::string& out) {
    RunConfig cfg = resolve_config(common);
    if (n_override > 0) cfg.cohort_n = n_override;
    if (train_n_override >= 0) cfg.corpus_train_n = train_n_override;
    const std::string dir = out.empty() ? make_run_dir(cfg, "corpus") : out;
    fs::create_directories(dir);
    cfg.save(dir + "/config.json");

    generate_eval_cohort(cfg.cohort_n, cfg.seed, cfg.resolution, dir + "/cohort");
    if (cfg.corpus_train_n > 0)
        build_training_corpus(cfg.corpus_train_n, cfg.seed, cfg.resolution, dir + "/train");
    std::cout << "corpus written to " << dir << "\n";
    return 0;
}

int run_train(const CommonOpts& common, const std::string& corpus_dir,
              const std::string& out_ckpt) {
    RunConfig cfg = resolve_config(common);
    const auto corpus = load_training_corpus(corpus_dir);
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    std::vector<TrainMetricsRow> log;
    const GeneratorModel G = train_generator(corpus, cfg.latent_dim, tc, &log);
    save_checkpoint(G, out_ckpt);
    write_train_log(out_ckpt + ".train_log.csv", log);
    std::cout << "checkpoint written to " << out_ckpt << " (hash "
              << file_hash_hex(out_ckpt) << ")\n";
    return 0;
}

int run_invert(const CommonOpts& common, const std::string& image_path,
               const std::string& eyes, const std::string& ckpt, const std::string& out) {
    RunConfig cfg = resolve_config(common);
    const GeneratorModel G = load_checkpoint(ckpt);
    const FeatureExtractor fe(cfg.extractor_seed);
    const Image target = load_aligned_input(image_path, eyes, G.resolution);

    InversionConfig ic = cfg.inversion;
    ic.seed = cfg.seed;
    const InversionResult res = invert(G, fe, target, ic);

    const std::string dir = out.empty() ? make_run_dir(cfg, "invert") : out;
    fs::create_directories(dir);
    cfg.save(dir + "/config.json");
    save_inversion(res, dir + "/result.inv");
    write_inversion_trace(dir + "/trace.csv", res, ic.alpha);
    write_png(dir + "/target_aligned.png", target);
    write_png(dir + "/inverted.png", res.final_image);
    std::cout << "inversion written to " << dir << " (final image loss "
              << res.trace.back().image_loss << ")\n";
    return 0;
}

int run_adapt(const CommonOpts& common, const std::string& image_path,
              const std::string& eyes, const std::string& ckpt,
              const std::string& inversion_path, const std::string& snapshots,
              const std::string& out) {
    RunConfig cfg = resolve_config(common);
    const GeneratorModel G = load_checkpoint(ckpt);
    const FeatureExtractor fe(cfg.extractor_seed);
    const Image target = load_aligned_input(image_path, eyes, G.resolution);

    LatentVector w;
    NoiseMapSet noise;
    load_inversion(inversion_path, w, noise);

    AdaptationConfig ac = cfg.adaptation;
    ac.seed = cfg.seed;
    if (!snapshots.empty()) {
        std::stringstream ss(snapshots);
        std::string tok;
        while (std::getline(ss, tok, ',')) ac.snapshot_iterations.push_back(std::stoi(tok));
    }
    const AdaptationResult res = adapt(G, w, noise, target, fe, ac);

    const std::string dir = out.empty() ? make_run_dir(cfg, "adapt") : out;
    fs::create_directories(dir);
    cfg.save(dir + "/config.json");
    write_png(dir + "/normalized.png", res.normalized);
    write_adaptation_trace(dir + "/trace.csv", res);
    for (const auto& snap : res.snapshots) {
        char name[64];
        std::snprintf(name, sizeof(name), "snapshot_%04d.png", snap.iteration);
        write_png(dir + "/" + name, snap.image);
    }
    std::cout << "adaptation written to " << dir << "\n";
    return 0;
}

int run_score(const CommonOpts& common, const std::string& image_path,
              const std::string& normalized_path, const std::string& mask_path,
              const std::string& ckpt, const std::string& eyes, bool ycbcr, bool erosion,
              const std::string& method, const std::string& out) {
    RunConfig cfg = resolve_config(common);
    const ScoreConfig sc = score_config_from_flags(ycbcr, erosion, method);
    const FeatureExtractor fe(cfg.extractor_seed);

    Image original(Tensor(std::vector<int>{3, 1, 1}), ColorSpace::RGB);
    Image normalized = original;
    if (!normalized_path.empty()) {
        original = load_aligned_input(image_path, eyes, cfg.resolution);
        normalized = read_png(normalized_path);
    } else {
        if (ckpt.empty())
            throw std::invalid_argument("score: pass --normalized or --checkpoint");
        const GeneratorModel G = load_checkpoint(ckpt);
        original = load_aligned_input(image_path, eyes, G.resolution);
        InversionConfig ic = cfg.inversion;
        ic.seed = cfg.seed;
        const InversionResult inv = invert(G, fe, original, ic);
        AdaptationConfig ac = cfg.adaptation;
        ac.seed = cfg.seed;
        normalized = adapt(G, inv.w, inv.noise, original, fe, ac).normalized;
    }
    const Mask mask{read_png_gray(mask_path)};

    const auto [score, hm] = score_face(original, normalized, mask, sc, &fe);

    const std::string dir = out.empty() ? make_run_dir(cfg, "score") : out;
    fs::create_directories(dir);
    write_heatmap_outputs(hm, dir + "/heatmap.png");
    std::printf("S=%.6f\n", score.S);
    std::ofstream rec(dir + "/score.csv", std::ios::app);
    rec << "S,residual_energy,N\n"
        << score.S << ',' << score.residual_energy << ',' << score.N << '\n';
    return 0;
}

int run_heatmap(const CommonOpts& common, const std::string& image_path,
                const std::string& normalized_path, bool ycbcr, bool erosion,
                const std::string& method, const std::string& out_png) {
    RunConfig cfg = resolve_config(common);
    const ScoreConfig sc = score_config_from_flags(ycbcr, erosion, method);
    const FeatureExtractor fe(cfg.extractor_seed);
    const Image a = read_png(image_path);
    const Image b = read_png(normalized_path);
    const auto [pa, pb] = postprocess_pair(a, b, sc);
    HeatMap hm;
    switch (sc.heatmap_method) {
        case HeatmapMethod::PSE: hm = pse_heatmap(pa, pb); break;
        case HeatmapMethod::SSIM: hm = ssim_heatmap(pa, pb); break;
        case HeatmapMethod::LPIPS: hm = lpips_heatmap(pa, pb, fe); break;
    }
    write_heatmap_outputs(hm, out_png);
    std::cout << "heatmap written to " << out_png << "\n";
    return 0;
}

int run_ablate(const CommonOpts& common, const std::string& cohort_dir,
               const std::string& ckpt, const std::string& ratings_path,
               const std::string& out) {
    RunConfig cfg = resolve_config(common);
    const GeneratorModel G = load_checkpoint(ckpt);
    const FeatureExtractor fe(cfg.extractor_seed);

    std::string manifest = cohort_dir;
    if (fs::is_directory(manifest)) manifest += "/manifest.csv";
    const CohortManifest cohort = load_cohort(manifest);

    std::map<int, double> external;
    AblationOptions opt;
    opt.inversion = cfg.inversion;
    opt.adaptation = cfg.adaptation;
    opt.seed = cfg.seed;
    if (!ratings_path.empty()) {
        external = load_ratings(ratings_path);
        opt.external_ratings = &external;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const AblationTable table = run_ablation(cohort, G, fe, opt);
    const double total_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::string dir = out.empty() ? make_run_dir(cfg, "ablate") : out;
    fs::create_directories(dir);
    cfg.save(dir + "/config.json");
    {
        std::ofstream f(dir + "/ablation.csv", std::ios::binary);
        f << ablation_csv(table);
    }
    json report;
    report["checkpoint_hash"] = file_hash_hex(ckpt);
    report["seed"] = cfg.seed;
    report["extractor_seed"] = cfg.extractor_seed;
    report["total_seconds"] = total_s;
    report["warnings"] = table.warnings;
    json faces = json::array();
    for (const auto& r : table.records) {
        json e;
        e["id"] = r.id;
        e["severity"] = r.severity;
        e["rating"] = r.rating;
        e["wall_seconds"] = r.wall_seconds;
        e["failed"] = r.failed;
        if (r.failed) e["error"] = r.error;
        e["scores"] = r.scores;
        faces.push_back(e);
    }
    report["faces"] = faces;
    {
        std::ofstream f(dir + "/report.json", std::ios::binary);
        f << report.dump(2) << "\n";
    }
    for (const auto& w : table.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << ablation_csv(table);
    std::cout << "ablation written to " << dir << " in " << total_s << "s\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"generative-normalization anomaly scoring pipeline"};
    app.require_subcommand(1);

    CommonOpts common;

    auto* gen = app.add_subcommand("gen-corpus", "render the synthetic corpus and cohort");
    int gen_n = 0, gen_train_n = -1;
    std::string gen_out;
    add_common(gen, common);
    gen->add_option("--n", gen_n, "cohort size (default from config)");
    gen->add_option("--train-n", gen_train_n, "training corpus size; 0 skips");
    gen->add_option("--out", gen_out, "output directory (default: new run dir)");

    auto* train = app.add_subcommand("train", "train the generator on a corpus");
    std::string train_corpus, train_out = "generator.ckpt";
    add_common(train, common);
    train->add_option("--corpus", train_corpus, "corpus directory (train split)")->required();
    train->add_option("--out", train_out, "checkpoint path");

    auto* inv = app.add_subcommand("invert", "latent + noise inversion of a face");
    std::string inv_image, inv_eyes, inv_ckpt, inv_out;
    add_common(inv, common);
    inv->add_option("--image", inv_image)->required();
    inv->add_option("--eyes", inv_eyes, "lx,ly,rx,ry landmarks for alignment");
    inv->add_option("--checkpoint", inv_ckpt)->required();
    inv->add_option("--out", inv_out);

    auto* ad = app.add_subcommand("adapt", "fine-tune a copy of the generator to the face");
    std::string ad_image, ad_eyes, ad_ckpt, ad_inv, ad_snapshots, ad_out;
    add_common(ad, common);
    ad->add_option("--image", ad_image)->required();
    ad->add_option("--eyes", ad_eyes);
    ad->add_option("--checkpoint", ad_ckpt)->required();
    ad->add_option("--inversion", ad_inv, "result.inv from invert")->required();
    ad->add_option("--snapshots", ad_snapshots, "comma-separated iterations");
    ad->add_option("--out", ad_out);

    auto* sc = app.add_subcommand("score", "anomaly score for a face");
    std::string sc_image, sc_norm, sc_mask, sc_ckpt, sc_eyes, sc_method = "pse", sc_out;
    bool sc_ycbcr = false, sc_erosion = false;
    add_common(sc, common);
    sc->add_option("--image", sc_image)->required();
    sc->add_option("--normalized", sc_norm, "normalized counterpart (else --checkpoint)");
    sc->add_option("--mask", sc_mask)->required();
    sc->add_option("--checkpoint", sc_ckpt);
    sc->add_option("--eyes", sc_eyes);
    sc->add_flag("--ycbcr", sc_ycbcr);
    sc->add_flag("--erosion", sc_erosion);
    sc->add_option("--method", sc_method, "pse|ssim|lpips");
    sc->add_option("--out", sc_out);

    auto* hm = app.add_subcommand("heatmap", "abnormality heatmap for an image pair");
    std::string hm_image, hm_norm, hm_method = "pse", hm_out = "heatmap.png";
    bool hm_ycbcr = false, hm_erosion = false;
    add_common(hm, common);
    hm->add_option("--image", hm_image)->required();
    hm->add_option("--normalized", hm_norm)->required();
    hm->add_flag("--ycbcr", hm_ycbcr);
    hm->add_flag("--erosion", hm_erosion);
    hm->add_option("--method", hm_method, "pse|ssim|lpips");
    hm->add_option("--out", hm_out);

    auto* ab = app.add_subcommand("ablate", "full correlation grid over the cohort");
    std::string ab_cohort, ab_ckpt, ab_ratings, ab_out;
    add_common(ab, common);
    ab->add_option("--cohort", ab_cohort, "cohort directory or manifest.csv")->required();
    ab->add_option("--checkpoint", ab_ckpt)->required();
    ab->add_option("--ratings", ab_ratings, "external ratings CSV (id,rating)");
    ab->add_option("--out", ab_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) return run_gen_corpus(common, gen_n, gen_train_n, gen_out);
        if (train->parsed()) return run_train(common, train_corpus, train_out);
        if (inv->parsed()) return run_invert(common, inv_image, inv_eyes, inv_ckpt, inv_out);
        if (ad->parsed())
            return run_adapt(common, ad_image, ad_eyes, ad_ckpt, ad_inv, ad_snapshots, ad_out);
        if (sc->parsed())
            return run_score(common, sc_image, sc_norm, sc_mask, sc_ckpt, sc_eyes, sc_ycbcr,
                             sc_erosion, sc_method, sc_out);
        if (hm->parsed())
            return run_heatmap(common, hm_image, hm_norm, hm_ycbcr, hm_erosion, hm_method,
                               hm_out);
        if (ab->parsed()) return run_ablate(common, ab_cohort, ab_ckpt, ab_ratings, ab_out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
