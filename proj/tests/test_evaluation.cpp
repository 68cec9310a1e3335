#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "normscore/evaluation.hpp"

using namespace normscore;

TEST_CASE("pearson reference cases") {
    const std::vector<double> xs{1.0, 2.0, 3.0};
    CHECK(pearson(xs, {5.0, 7.0, 9.0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pearson(xs, {-1.0, -2.0, -3.0}) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(pearson(xs, {1.0, 3.0, 2.0}) == doctest::Approx(0.5).epsilon(1e-12));

    CHECK_THROWS_AS(pearson(xs, {1.0, 1.0, 1.0}), degenerate_input_error);
    CHECK_THROWS_AS(pearson({1.0}, {2.0}), std::invalid_argument);
}

TEST_CASE("pearson is invariant to positive affine maps") {
    const std::vector<double> xs{0.3, 1.7, 2.2, 4.4, 5.0};
    const std::vector<double> ys{2.0, 1.1, 3.0, 2.5, 4.0};
    const double base = pearson(xs, ys);
    for (double a : {0.5, 2.0, 10.0}) {
        std::vector<double> scaled;
        for (double y : ys) scaled.push_back(a * y + 3.25);
        CHECK(pearson(xs, scaled) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("spearman rank correlation with ties") {
    CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman({1, 2, 3, 4}, {9, 7, 5, 3}) == doctest::Approx(-1.0));
    // monotone but nonlinear is still a perfect rank match
    CHECK(spearman({1, 2, 3, 4, 5}, {1, 8, 27, 64, 125}) == doctest::Approx(1.0));
}

TEST_CASE("ratings loader") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "normscore_ratings_test";
    fs::create_directories(dir);
    const std::string path = (dir / "r.csv").string();
    {
        std::ofstream f(path);
        f << "id,rating\n0,6.5\n1,2.0\n3,4\n3,6\n";
    }
    const auto r = load_ratings(path);
    CHECK(r.at(0) == doctest::Approx(6.5));
    CHECK(r.at(1) == doctest::Approx(2.0));
    CHECK(r.at(3) == doctest::Approx(5.0));

    {
        std::ofstream f(path);
        f << "id,rating\n0,6.5\n1,9.0\n";
    }
    try {
        load_ratings(path);
        CHECK(false);
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("cell keys and csv layout") {
    CHECK(cell_key(true, HeatmapMethod::PSE, MaskMode::mouth_nose, 3) == "with|PSE|mouth|both");
    CHECK(cell_key(false, HeatmapMethod::SSIM, MaskMode::face_minus_eyes, 0) ==
          "without|SSIM|face|base");

    AblationTable t;
    t.cells[1][0][0][3] = 94.2;
    const std::string csv = ablation_csv(t);
    CHECK(csv.find("adaptation,heatmap,mouth_base") == 0);
    CHECK(csv.find("with,PSE") != std::string::npos);
    CHECK(csv.find("94.2") != std::string::npos);
    // 6 data rows: 2 adaptation modes x 3 methods
    int rows = 0;
    for (char c : csv)
        if (c == '\n') ++rows;
    CHECK(rows == 7);
}
