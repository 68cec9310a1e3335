#include "normscore/synthcorpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "normscore/io.hpp"
#include "normscore/rng.hpp"

namespace normscore {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kEdge = 0.75;  // antialias ramp width, px

bool power_of_two(int v) { return v >= 1 && (v & (v - 1)) == 0; }

double mix(double a, double b, double t) { return a + (b - a) * t; }

// Linear coverage ramp from a signed inside-distance in pixels.
double cov(double d) { return std::clamp(0.5 + d / kEdge, 0.0, 1.0); }

// Approximate signed distance to an axis-aligned ellipse boundary (inside
// positive), adequate at the pixel scales used here.
double ellipse_sdist(double x, double y, double cx, double cy, double a, double b) {
    const double nx = (x - cx) / a, ny = (y - cy) / b;
    const double f = 1.0 - (nx * nx + ny * ny);
    const double gx = 2.0 * std::abs(x - cx) / (a * a), gy = 2.0 * std::abs(y - cy) / (b * b);
    const double g = std::max(std::sqrt(gx * gx + gy * gy), 1e-9);
    return f / g;
}

struct Frame {
    double cx, cy, cosr, sinr;
    // canvas point -> face frame (undoes the pose rotation)
    Vec2 to_face(double x, double y) const {
        const double dx = x - cx, dy = y - cy;
        return {cx + cosr * dx + sinr * dy, cy - sinr * dx + cosr * dy};
    }
    // face frame point -> canvas
    Vec2 to_canvas(const Vec2& p) const {
        const double dx = p.x - cx, dy = p.y - cy;
        return {cx + cosr * dx - sinr * dy, cy + sinr * dx + cosr * dy};
    }
};

struct Palette {
    double bg[3];
    double face[3];
    double lip[3];
    double eye[3];
    double nose[3];
    double groove[3];
};

Palette make_palette(const FaceSpec& spec) {
    Palette p{};
    Rng rng(Rng::derive(spec.seed, 0x6b67));
    for (int c = 0; c < 3; ++c) {
        p.face[c] = spec.face_color[c];
        p.nose[c] = spec.face_color[c] * 0.86;
        p.groove[c] = spec.face_color[c] * 0.58;
        p.eye[c] = spec.face_color[c] * 0.22;
    }
    p.bg[0] = 0.26 + 0.08 * rng.uniform();
    p.bg[1] = 0.30 + 0.08 * rng.uniform();
    p.bg[2] = 0.36 + 0.08 * rng.uniform();
    p.lip[0] = spec.face_color[0] * 0.72 + 0.10;
    p.lip[1] = spec.face_color[1] * 0.38;
    p.lip[2] = spec.face_color[2] * 0.40;
    return p;
}

struct NotchGeom {
    bool active = false;
    double x_n = 0.0;        // notch center x (face frame)
    double base_w = 0.0;     // full width at the lip
    double depth = 0.0;      // extent above the arc line
    double y_arc = 0.0;      // local lip center line at x_n
    double half_t = 0.0;     // lip half thickness
};

// Coverage of the cleft wedge at a face-frame point. The wedge narrows from
// base_w at the lip bottom to 35% of it at the apex; both base width and
// depth grow monotonically with severity, so coverage is pointwise monotone.
double notch_cov(const NotchGeom& n, double qx, double qy) {
    if (!n.active) return 0.0;
    const double y_base = n.y_arc + n.half_t + 0.6;
    const double y_apex = n.y_arc - n.depth;
    if (qy > y_base + kEdge || qy < y_apex - kEdge) return 0.0;
    const double span = std::max(y_base - y_apex, 1e-6);
    const double tau = std::clamp((y_base - qy) / span, 0.0, 1.0);
    const double w = n.base_w * (1.0 - 0.65 * tau);
    const double d_x = 0.5 * w - std::abs(qx - n.x_n);
    const double d_y = std::min(y_base - qy, qy - y_apex);
    return cov(d_x) * cov(d_y);
}

struct Geometry {
    double res;
    double eye_rx, eye_ry;
    double mouth_t;      // lip thickness
    Vec2 nose_c;
    double nose_a, nose_b;
};

Geometry derive_geometry(const FaceSpec& spec, int resolution) {
    Geometry g{};
    g.res = resolution;
    const double inter = spec.eye_right.x - spec.eye_left.x;
    g.eye_rx = 0.21 * inter;
    g.eye_ry = 0.65 * g.eye_rx;
    g.mouth_t = 0.40 * spec.mouth_half_width;
    const double eye_y = spec.eye_left.y;
    g.nose_c = {0.5 * (spec.eye_left.x + spec.eye_right.x),
                spec.mouth_center.y - 0.42 * (spec.mouth_center.y - eye_y)};
    g.nose_a = 0.030 * g.res;
    g.nose_b = 0.045 * g.res;
    return g;
}

Image render_face_impl(const FaceSpec& spec, int resolution, const SeveritySpec* sev) {
    if (!power_of_two(resolution) || resolution < 16)
        throw std::invalid_argument("render: resolution must be a power of two >= 16");
    const Geometry geo = derive_geometry(spec, resolution);
    const Palette pal = make_palette(spec);
    const double c = (resolution - 1) / 2.0;
    const double rot = spec.pose_rotation_deg * kPi / 180.0;
    const Frame fr{c, c, std::cos(rot), std::sin(rot)};

    NotchGeom notch;
    if (sev && sev->severity > 0.0) {
        const double s = sev->severity;
        const double hw = spec.mouth_half_width;
        notch.active = true;
        notch.x_n = spec.mouth_center.x + sev->notch_offset_frac * hw;
        const double u = (notch.x_n - spec.mouth_center.x) / hw;
        notch.y_arc = spec.mouth_center.y + spec.mouth_curvature * hw * u * u;
        notch.base_w = sev->notch_width_frac * 2.0 * hw * (0.30 + 0.70 * s);
        notch.depth = 0.055 * resolution * s;
        notch.half_t = 0.5 * geo.mouth_t;
    }

    const double light_dx = std::cos(spec.light_dir_rad);
    const double light_dy = std::sin(spec.light_dir_rad);

    Tensor px(std::vector<int>{3, resolution, resolution});
    for (int y = 0; y < resolution; ++y) {
        for (int x = 0; x < resolution; ++x) {
            const Vec2 q = fr.to_face(x, y);
            double col[3] = {pal.bg[0], pal.bg[1], pal.bg[2]};

            const double face_cov =
                cov(ellipse_sdist(q.x, q.y, c, c, spec.face_a, spec.face_b));
            for (int ch = 0; ch < 3; ++ch) col[ch] = mix(col[ch], pal.face[ch], face_cov);

            const double nose_cov =
                0.55 * cov(ellipse_sdist(q.x, q.y, geo.nose_c.x, geo.nose_c.y, geo.nose_a,
                                         geo.nose_b));
            for (int ch = 0; ch < 3; ++ch) col[ch] = mix(col[ch], pal.nose[ch], nose_cov);

            // mouth band along a quadratic arc
            const double hw = spec.mouth_half_width;
            const double u = (q.x - spec.mouth_center.x) / hw;
            const double y_arc = spec.mouth_center.y + spec.mouth_curvature * hw * u * u;
            const double d_band = 0.5 * geo.mouth_t - std::abs(q.y - y_arc);
            const double d_span = (1.0 - std::abs(u)) * hw;
            double mouth_cov = cov(d_band) * cov(d_span);

            const double ncov = notch_cov(notch, q.x, q.y);
            mouth_cov *= 1.0 - ncov;  // the notch erases the lip
            for (int ch = 0; ch < 3; ++ch) col[ch] = mix(col[ch], pal.lip[ch], mouth_cov);

            if (ncov > 0.0) {
                const double above_lip = q.y < y_arc - 0.5 * geo.mouth_t ? 0.55 : 0.30;
                for (int ch = 0; ch < 3; ++ch)
                    col[ch] = mix(col[ch], pal.groove[ch], above_lip * ncov);
            }

            const double eye_cov =
                std::max(cov(ellipse_sdist(q.x, q.y, spec.eye_left.x, spec.eye_left.y,
                                           geo.eye_rx, geo.eye_ry)),
                         cov(ellipse_sdist(q.x, q.y, spec.eye_right.x, spec.eye_right.y,
                                           geo.eye_rx, geo.eye_ry)));
            for (int ch = 0; ch < 3; ++ch) col[ch] = mix(col[ch], pal.eye[ch], eye_cov);

            const double proj =
                ((x - c) * light_dx + (y - c) * light_dy) / (0.5 * resolution);
            const double f = 1.0 + spec.light_strength * std::clamp(proj, -1.0, 1.0);
            for (int ch = 0; ch < 3; ++ch)
                px.at(ch, y, x) = std::clamp(col[ch] * f, 0.0, 1.0);
        }
    }
    return Image(std::move(px), ColorSpace::RGB);
}

MaskSet render_masks(const FaceSpec& spec, int resolution) {
    const Geometry geo = derive_geometry(spec, resolution);
    const double c = (resolution - 1) / 2.0;
    const double rot = spec.pose_rotation_deg * kPi / 180.0;
    const Frame fr{c, c, std::cos(rot), std::sin(rot)};
    const double r = resolution;

    const double roi_cx = spec.mouth_center.x;
    const double roi_cy = spec.mouth_center.y - 0.045 * r;
    const double roi_a = spec.mouth_half_width + 0.035 * r;
    const double roi_b = 0.085 * r;

    Tensor mouth(std::vector<int>{resolution, resolution});
    Tensor face(std::vector<int>{resolution, resolution});
    for (int y = 0; y < resolution; ++y) {
        for (int x = 0; x < resolution; ++x) {
            const Vec2 q = fr.to_face(x, y);
            mouth.at(y, x) =
                ellipse_sdist(q.x, q.y, roi_cx, roi_cy, roi_a, roi_b) > 0.0 ? 1.0 : 0.0;
            bool in_face = ellipse_sdist(q.x, q.y, c, c, spec.face_a, spec.face_b) > 0.0;
            const double dil = 2.2;
            const bool in_eye =
                ellipse_sdist(q.x, q.y, spec.eye_left.x, spec.eye_left.y, dil * geo.eye_rx,
                              dil * geo.eye_ry) > 0.0 ||
                ellipse_sdist(q.x, q.y, spec.eye_right.x, spec.eye_right.y, dil * geo.eye_rx,
                              dil * geo.eye_ry) > 0.0;
            face.at(y, x) = in_face && !in_eye ? 1.0 : 0.0;
        }
    }
    return MaskSet{Mask(std::move(mouth)), Mask(std::move(face))};
}

LandmarkSet make_landmarks(const FaceSpec& spec, int resolution) {
    const double c = (resolution - 1) / 2.0;
    const double rot = spec.pose_rotation_deg * kPi / 180.0;
    const Frame fr{c, c, std::cos(rot), std::sin(rot)};
    LandmarkSet lm;
    Vec2 l = fr.to_canvas(spec.eye_left);
    Vec2 rgt = fr.to_canvas(spec.eye_right);
    if (l.x > rgt.x) std::swap(l, rgt);
    lm.eye_left = l;
    lm.eye_right = rgt;
    lm.mouth_center = fr.to_canvas(spec.mouth_center);
    lm.source = LandmarkSource::synthetic_exact;
    lm.validate(resolution, resolution);
    return lm;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

}  // namespace

FaceSpec sample_face_spec(std::uint64_t seed, int resolution) {
    Rng rng(seed);
    const double r = resolution;
    const double c = (resolution - 1) / 2.0;
    FaceSpec s;
    s.seed = seed;
    s.face_color[0] = rng.uniform(0.62, 0.88);
    s.face_color[1] = s.face_color[0] * rng.uniform(0.70, 0.82);
    s.face_color[2] = s.face_color[1] * rng.uniform(0.72, 0.88);
    s.face_a = rng.uniform(0.155, 0.195) * r;
    s.face_b = rng.uniform(0.200, 0.245) * r;
    const double ex = rng.uniform(0.044, 0.056) * r;
    const double ey = rng.uniform(0.055, 0.075) * r;
    s.eye_left = {c - ex, c - ey};
    s.eye_right = {c + ex, c - ey};
    s.mouth_center = {c + rng.uniform(-0.01, 0.01) * r, c + rng.uniform(0.105, 0.130) * r};
    s.mouth_half_width = rng.uniform(0.055, 0.072) * r;
    s.mouth_curvature = rng.uniform(-0.25, 0.30);
    s.pose_rotation_deg = rng.uniform(-10.0, 10.0);
    s.light_dir_rad = rng.uniform(0.0, 2.0 * kPi);
    s.light_strength = rng.uniform(0.0, 0.3);
    return s;
}

SeveritySpec sample_severity_spec(std::uint64_t seed, double severity) {
    Rng rng(Rng::derive(seed, 0x5e7e));
    SeveritySpec sv;
    sv.severity = severity;
    sv.notch_width_frac = rng.uniform(0.28, 0.50);
    sv.notch_offset_frac = rng.uniform(-0.30, 0.30);
    return sv;
}

RenderResult render_normal_face(const FaceSpec& spec, int resolution) {
    Image img = render_face_impl(spec, resolution, nullptr);
    return RenderResult{std::move(img), make_landmarks(spec, resolution),
                        render_masks(spec, resolution)};
}

Image inject_anomaly(const FaceSpec& spec, const SeveritySpec& sev, int resolution) {
    if (!(sev.severity >= 0.0 && sev.severity <= 1.0))
        throw std::invalid_argument("inject_anomaly: severity must be in [0,1]");
    if (!(sev.notch_width_frac > 0.0 && sev.notch_width_frac <= 0.5))
        throw std::invalid_argument("inject_anomaly: notch_width_frac must be in (0,0.5]");
    if (!(sev.notch_offset_frac >= -0.3 && sev.notch_offset_frac <= 0.3))
        throw std::invalid_argument("inject_anomaly: notch_offset_frac must be in [-0.3,0.3]");
    return render_face_impl(spec, resolution, &sev);
}

CohortManifest generate_eval_cohort(int n, std::uint64_t seed, int resolution,
                                    const std::string& dir) {
    if (n < 2) throw std::invalid_argument("generate_eval_cohort: n must be >= 2");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create cohort directory " + dir);

    CohortManifest man;
    man.dir = dir;
    std::ostringstream csv;
    csv << "id,image_path,severity,rating,mask_mouth_path,mask_face_path,"
           "eye_lx,eye_ly,eye_rx,eye_ry\n";
    for (int i = 0; i < n; ++i) {
        const double severity = 0.05 + 0.90 * static_cast<double>(i) / (n - 1);
        const std::uint64_t face_seed = Rng::derive(seed, static_cast<std::uint64_t>(i));
        const FaceSpec spec = sample_face_spec(face_seed, resolution);
        const SeveritySpec sev = sample_severity_spec(face_seed, severity);
        const Image img = inject_anomaly(spec, sev, resolution);
        const RenderResult normal = render_normal_face(spec, resolution);

        char name[64];
        std::snprintf(name, sizeof(name), "img_%03d.png", i);
        char mmouth[64];
        std::snprintf(mmouth, sizeof(mmouth), "mask_mouth_%03d.png", i);
        char mface[64];
        std::snprintf(mface, sizeof(mface), "mask_face_%03d.png", i);

        write_png(dir + "/" + name, img);
        write_png_gray(dir + "/" + mmouth, normal.masks.mouth_nose.weights());
        write_png_gray(dir + "/" + mface, normal.masks.face_minus_eyes.weights());

        CohortEntry e;
        e.id = i;
        e.image_path = name;
        e.severity = severity;
        e.rating = 7.0 - 6.0 * severity;
        e.mask_mouth_path = mmouth;
        e.mask_face_path = mface;
        e.eye_left = normal.landmarks.eye_left;
        e.eye_right = normal.landmarks.eye_right;
        man.entries.push_back(e);

        csv << i << ',' << name << ',' << fmt_double(severity) << ',' << fmt_double(e.rating)
            << ',' << mmouth << ',' << mface << ',' << fmt_double(e.eye_left.x) << ','
            << fmt_double(e.eye_left.y) << ',' << fmt_double(e.eye_right.x) << ','
            << fmt_double(e.eye_right.y) << '\n';
    }
    std::ofstream f(dir + "/manifest.csv", std::ios::binary);
    if (!f) throw IoError("cannot write manifest in " + dir);
    f << csv.str();
    if (!f) throw IoError("short manifest write in " + dir);
    return man;
}

CohortManifest load_cohort(const std::string& manifest_path) {
    std::ifstream f(manifest_path);
    if (!f) throw IoError("cannot open manifest " + manifest_path);
    CohortManifest man;
    man.dir = std::filesystem::path(manifest_path).parent_path().string();
    if (man.dir.empty()) man.dir = ".";
    std::string line;
    if (!std::getline(f, line)) throw IoError("empty manifest " + manifest_path);
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tok;
        std::vector<std::string> cols;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
        if (cols.size() != 10)
            throw IoError("manifest line " + std::to_string(lineno) + ": expected 10 columns");
        CohortEntry e;
        e.id = std::stoi(cols[0]);
        e.image_path = cols[1];
        e.severity = std::stod(cols[2]);
        e.rating = std::stod(cols[3]);
        e.mask_mouth_path = cols[4];
        e.mask_face_path = cols[5];
        e.eye_left = {std::stod(cols[6]), std::stod(cols[7])};
        e.eye_right = {std::stod(cols[8]), std::stod(cols[9])};
        man.entries.push_back(e);
    }
    if (man.entries.size() < 2) throw IoError("cohort must have at least 2 entries");
    return man;
}

}  // namespace normscore
