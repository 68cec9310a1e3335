#pragma once

#include <string>
#include <vector>

#include "normscore/generator.hpp"
#include "normscore/preprocess.hpp"
#include "normscore/synthcorpus.hpp"

namespace normscore {

struct AlignedFace {
    Image image;
    Mask mouth_nose;
    Mask face_minus_eyes;
    LandmarkSet landmarks;
    AlignmentParams params;
};

// Loads a cohort entry from disk and brings the image plus both masks into
// the canonical aligned frame at the given resolution.
AlignedFace prepare_cohort_face(const CohortManifest& man, const CohortEntry& e,
                                int resolution);

// Renders n normal faces, aligns them and writes img_####.png plus list.csv.
void build_training_corpus(int n, std::uint64_t seed, int resolution,
                           const std::string& dir);

std::vector<Image> load_training_corpus(const std::string& dir);

}  // namespace normscore
