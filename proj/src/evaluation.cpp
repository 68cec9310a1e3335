#include "normscore/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "normscore/io.hpp"
#include "normscore/pipeline.hpp"
#include "normscore/rng.hpp"

namespace normscore {

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("pearson: need equal lengths >= 2");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0)
        throw degenerate_input_error("pearson: zero variance input");
    return sxy / std::sqrt(sxx * syy);
}

namespace {

std::vector<double> ranks_with_ties(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    return pearson(ranks_with_ties(xs), ranks_with_ties(ys));
}

std::map<int, double> load_ratings(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open ratings " + path);
    std::string line;
    if (!std::getline(f, line)) throw IoError("empty ratings file " + path);
    std::map<int, std::pair<double, int>> acc;  // id -> (sum, count)
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string id_s, rating_s;
        if (!std::getline(ss, id_s, ',') || !std::getline(ss, rating_s, ','))
            throw std::invalid_argument("ratings line " + std::to_string(lineno) +
                                        ": expected id,rating");
        int id;
        double rating;
        try {
            id = std::stoi(id_s);
            rating = std::stod(rating_s);
        } catch (const std::exception&) {
            throw std::invalid_argument("ratings line " + std::to_string(lineno) +
                                        ": unparsable values");
        }
        if (!(rating >= 1.0 && rating <= 7.0))
            throw std::invalid_argument("ratings line " + std::to_string(lineno) +
                                        ": rating outside [1,7]");
        acc[id].first += rating;
        acc[id].second += 1;
    }
    std::map<int, double> out;
    for (const auto& [id, sc] : acc) out[id] = sc.first / sc.second;
    return out;
}

std::string cell_key(bool with_adaptation, HeatmapMethod m, MaskMode mask, int post) {
    static const char* methods[3] = {"PSE", "SSIM", "LPIPS"};
    std::string key = with_adaptation ? "with" : "without";
    key += '|';
    key += methods[static_cast<int>(m)];
    key += '|';
    key += mask == MaskMode::mouth_nose ? "mouth" : "face";
    key += '|';
    key += post_label(post);
    return key;
}

double AblationTable::cell(bool with_adaptation, HeatmapMethod m, MaskMode mask,
                           int post) const {
    return cells[with_adaptation ? 1 : 0][static_cast<int>(m)]
                [mask == MaskMode::mouth_nose ? 0 : 1][post];
}

namespace {

ScoreConfig config_for(HeatmapMethod m, MaskMode mask, int post) {
    ScoreConfig cfg;
    cfg.heatmap_method = m;
    cfg.mask_mode = mask;
    cfg.color_space = (post == 1 || post == 3) ? ColorSpace::YCbCr : ColorSpace::RGB;
    cfg.erosion = post == 2 || post == 3;
    return cfg;
}

}  // namespace

AblationTable run_ablation(const CohortManifest& cohort, const GeneratorModel& G,
                           const FeatureExtractor& fe, const AblationOptions& opt) {
    AblationTable table;
    for (const CohortEntry& e : cohort.entries) {
        EvalRecord rec;
        rec.id = e.id;
        rec.severity = e.severity;
        rec.rating = e.rating;
        if (opt.external_ratings) {
            const auto it = opt.external_ratings->find(e.id);
            if (it == opt.external_ratings->end())
                throw std::invalid_argument("run_ablation: no external rating for face " +
                                            std::to_string(e.id));
            rec.rating = it->second;
        }
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const AlignedFace face = prepare_cohort_face(cohort, e, G.resolution);

            InversionConfig inv_cfg = opt.inversion;
            inv_cfg.seed = Rng::derive(opt.seed, 10000 + static_cast<std::uint64_t>(e.id));
            const InversionResult inv = invert(G, fe, face.image, inv_cfg);

            AdaptationConfig ad_cfg = opt.adaptation;
            ad_cfg.seed = Rng::derive(opt.seed, 20000 + static_cast<std::uint64_t>(e.id));
            const AdaptationResult adapted =
                adapt(G, inv.w, inv.noise, face.image, fe, ad_cfg);

            for (int a = 0; a < 2; ++a) {
                const Image& normalized = a ? adapted.normalized : inv.final_image;
                for (int m = 0; m < 3; ++m)
                    for (int k = 0; k < 2; ++k)
                        for (int post = 0; post < 4; ++post) {
                            const auto method = static_cast<HeatmapMethod>(m);
                            const auto mode =
                                k == 0 ? MaskMode::mouth_nose : MaskMode::face_minus_eyes;
                            const Mask& mask =
                                k == 0 ? face.mouth_nose : face.face_minus_eyes;
                            const ScoreConfig cfg = config_for(method, mode, post);
                            const auto [score, hm] =
                                score_face(face.image, normalized, mask, cfg, &fe);
                            rec.scores[cell_key(a == 1, method, mode, post)] = score.S;
                        }
            }
        } catch (const std::exception& ex) {
            rec.failed = true;
            rec.error = ex.what();
            table.warnings.push_back("face " + std::to_string(e.id) + " excluded: " +
                                     ex.what());
        }
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        table.records.push_back(std::move(rec));
    }

    std::size_t failed = 0;
    for (const auto& r : table.records)
        if (r.failed) ++failed;
    if (failed * 5 > table.records.size())
        throw std::runtime_error("run_ablation: more than 20% of the cohort failed");

    for (int a = 0; a < 2; ++a)
        for (int m = 0; m < 3; ++m)
            for (int k = 0; k < 2; ++k)
                for (int post = 0; post < 4; ++post) {
                    std::vector<double> scores, ratings;
                    const std::string key = cell_key(
                        a == 1, static_cast<HeatmapMethod>(m),
                        k == 0 ? MaskMode::mouth_nose : MaskMode::face_minus_eyes, post);
                    for (const auto& r : table.records) {
                        if (r.failed) continue;
                        scores.push_back(r.scores.at(key));
                        ratings.push_back(r.rating);
                    }
                    table.cells[a][m][k][post] = 100.0 * pearson(scores, ratings);
                }
    return table;
}

std::string ablation_csv(const AblationTable& table) {
    static const char* methods[3] = {"LPIPS", "PSE", "SSIM"};
    static const int method_idx[3] = {2, 0, 1};  // printed order
    std::ostringstream os;
    os << "adaptation,heatmap,mouth_base,mouth_ycbcr,mouth_erosion,mouth_both,"
          "face_base,face_ycbcr,face_erosion,face_both\n";
    os.precision(17);
    for (int a = 1; a >= 0; --a)
        for (int mi = 0; mi < 3; ++mi) {
            os << (a ? "with" : "without") << ',' << methods[mi];
            for (int k = 0; k < 2; ++k)
                for (int post = 0; post < 4; ++post)
                    os << ',' << table.cells[a][method_idx[mi]][k][post];
            os << '\n';
        }
    return os.str();
}

}  // namespace normscore
