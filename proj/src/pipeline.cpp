#include "normscore/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "normscore/io.hpp"
#include "normscore/rng.hpp"

namespace normscore {

AlignedFace prepare_cohort_face(const CohortManifest& man, const CohortEntry& e,
                                int resolution) {
    const std::string base = man.dir + "/";
    const Image raw = read_png(base + e.image_path);

    LandmarkSet lm;
    lm.eye_left = e.eye_left;
    lm.eye_right = e.eye_right;
    // the aligner only uses the eyes; place the mouth landmark plausibly
    const double inter = e.eye_right.x - e.eye_left.x;
    lm.mouth_center = {0.5 * (e.eye_left.x + e.eye_right.x),
                       0.5 * (e.eye_left.y + e.eye_right.y) + 1.5 * inter};
    lm.source = LandmarkSource::synthetic_exact;

    AlignResult aligned = align_face(raw, lm, resolution);

    AlignedFace out;
    out.image = std::move(aligned.image);
    out.landmarks = aligned.landmarks;
    out.params = aligned.params;
    out.mouth_nose = warp_mask(Mask(read_png_gray(base + e.mask_mouth_path)), aligned.params);
    out.face_minus_eyes =
        warp_mask(Mask(read_png_gray(base + e.mask_face_path)), aligned.params);
    return out;
}

void build_training_corpus(int n, std::uint64_t seed, int resolution,
                           const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create corpus directory " + dir);
    std::ofstream list(dir + "/list.csv", std::ios::binary);
    if (!list) throw IoError("cannot write corpus list in " + dir);
    list << "id,image_path\n";
    for (int i = 0; i < n; ++i) {
        const FaceSpec spec =
            sample_face_spec(Rng::derive(seed, 500000 + static_cast<std::uint64_t>(i)),
                             resolution);
        const RenderResult r = render_normal_face(spec, resolution);
        const AlignResult aligned = align_face(r.image, r.landmarks, resolution);
        char name[64];
        std::snprintf(name, sizeof(name), "img_%04d.png", i);
        write_png(dir + "/" + name, aligned.image);
        list << i << ',' << name << '\n';
    }
    if (!list) throw IoError("short corpus list write in " + dir);
}

std::vector<Image> load_training_corpus(const std::string& dir) {
    std::ifstream list(dir + "/list.csv");
    if (!list) throw IoError("cannot open corpus list in " + dir);
    std::string line;
    std::getline(list, line);  // header
    std::vector<Image> out;
    while (std::getline(list, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw IoError("malformed corpus list row: " + line);
        out.push_back(read_png(dir + "/" + line.substr(comma + 1)));
    }
    return out;
}

}  // namespace normscore
