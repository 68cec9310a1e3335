#pragma once

#include <map>
#include <string>
#include <vector>

#include "normscore/adaptation.hpp"
#include "normscore/anomaly.hpp"
#include "normscore/inversion.hpp"
#include "normscore/synthcorpus.hpp"

namespace normscore {

struct degenerate_input_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Product-moment correlation. Throws degenerate_input_error on zero variance.
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

// Rank correlation with average ranks for ties.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

// CSV `id,rating`; duplicate ids are averaged; ratings validated to [1,7].
std::map<int, double> load_ratings(const std::string& path);

// Per-face evaluation record for one ablation run.
struct EvalRecord {
    int id = 0;
    double severity = 0.0;
    double rating = 0.0;
    std::map<std::string, double> scores;  // cell key -> S
    double wall_seconds = 0.0;
    bool failed = false;
    std::string error;
};

inline const char* post_label(int post) {
    static const char* names[4] = {"base", "ycbcr", "erosion", "both"};
    return names[post];
}
std::string cell_key(bool with_adaptation, HeatmapMethod m, MaskMode mask, int post);

struct AblationTable {
    // [adaptation off=0/on=1][method PSE=0,SSIM=1,LPIPS=2][mask mouth=0,face=1][post 0..3]
    double cells[2][3][2][4] = {};
    std::vector<EvalRecord> records;
    std::vector<std::string> warnings;

    double cell(bool with_adaptation, HeatmapMethod m, MaskMode mask, int post) const;
};

struct AblationOptions {
    InversionConfig inversion;
    AdaptationConfig adaptation;
    std::uint64_t seed = 0;
    const std::map<int, double>* external_ratings = nullptr;  // overrides pseudo-ratings
};

// Full grid: {PSE,SSIM,LPIPS} x {Base,+YCbCr,+Erosion,+Both} x {mouth-only,
// entire-face} x {with,without adaptation}. One inversion and one adaptation
// per face, shared across all cells; the without-adaptation cells reuse the
// inversion output. Faces that fail are excluded with a warning; more than
// 20% failures aborts.
AblationTable run_ablation(const CohortManifest& cohort, const GeneratorModel& G,
                           const FeatureExtractor& fe, const AblationOptions& opt);

// Table-1 style layout: one row per (adaptation, heatmap) pair, eight value
// columns (mouth then entire-face, Base/+YCbCr/+Erosion/+Both), r x 100.
std::string ablation_csv(const AblationTable& table);

}  // namespace normscore
