#include "fruitgrade/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "fruitgrade/csvio.hpp"
#include "fruitgrade/errors.hpp"
#include "fruitgrade/imageio.hpp"
#include "fruitgrade/rng.hpp"

namespace fruitgrade::synth {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kInnerPx = 600;   // inner frame side at scale 1
constexpr int kFramePx = 12;    // frame thickness at scale 1
constexpr int kMarginPx = 50;   // white margin outside the frame at scale 1

struct Groove {
    double pos;         // center offset along the major axis, px
    double amplitude;   // sinusoidal wiggle, px
    double phase;
    double wavelength;  // px
};

struct DefectBlob {
    double u, v;  // center in the fruit's local frame, px
};

std::uint8_t clamp_channel(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

}  // namespace

SynthSpec default_synth_spec() {
    SynthSpec spec;
    GradeSpec a;
    a.name = "gradeA";
    a.size_mm_mean = 29.0;
    a.size_mm_sd = 1.2;
    a.aspect_mean = 0.80;
    a.base_rgb = {176, 48, 40};

    GradeSpec b;
    b.name = "gradeB";
    b.size_mm_mean = 25.0;
    b.size_mm_sd = 1.2;
    b.aspect_mean = 0.72;
    b.groove_min = 2;
    b.groove_max = 3;
    b.groove_depth = 28;
    b.defect_fraction_mean = 0.015;
    b.defect_fraction_sd = 0.008;
    b.base_rgb = {150, 45, 38};

    GradeSpec c;
    c.name = "gradeC";
    c.size_mm_mean = 21.0;
    c.size_mm_sd = 1.2;
    c.aspect_mean = 0.64;
    c.groove_min = 3;
    c.groove_max = 4;
    c.groove_depth = 45;
    c.defect_fraction_mean = 0.05;
    c.defect_fraction_sd = 0.015;
    c.base_rgb = {120, 38, 34};

    spec.grades = {a, b, c};
    return spec;
}

img::RgbImage render_sample(const SynthSpec& spec, int grade_idx, int sample_idx) {
    if (grade_idx < 0 || grade_idx >= static_cast<int>(spec.grades.size()))
        throw ConfigError("grade index out of range");
    const GradeSpec& grade = spec.grades[static_cast<std::size_t>(grade_idx)];
    const int s = spec.render_scale;
    const int inner = kInnerPx * s;
    const int frame = kFramePx * s;
    const int margin = kMarginPx * s;
    const int side = inner + 2 * (frame + margin);
    const double mm_per_px = spec.frame_side_mm / static_cast<double>(inner);

    img::RgbImage image(side, side, 250, 250, 250);

    const int f0 = margin;               // frame outer edge
    const int f1 = margin + frame;       // frame inner edge == hole start
    const int h1 = f1 + inner;           // hole end (exclusive)
    const int f2 = h1 + frame;           // frame outer end (exclusive)
    for (int y = f0; y < f2; ++y) {
        for (int x = f0; x < f2; ++x) {
            const bool in_hole = x >= f1 && x < h1 && y >= f1 && y < h1;
            if (!in_hole) image.set(x, y, 10, 10, 10);
        }
    }

    Rng rng(Rng::derive(spec.seed, static_cast<std::uint64_t>(grade_idx),
                        static_cast<std::uint64_t>(sample_idx)));

    const double size_mm = std::clamp(rng.gaussian(grade.size_mm_mean, grade.size_mm_sd), 8.0, 70.0);
    const double aspect = std::clamp(rng.gaussian(grade.aspect_mean, grade.aspect_sd), 0.5, 0.95);
    const double a = 0.5 * size_mm / mm_per_px;  // semi-major, px
    const double b = a * aspect;
    const double theta = rng.uniform(0.0, kPi);
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    const double cx = static_cast<double>(side) / 2.0 + rng.uniform(-25.0 * s, 25.0 * s);
    const double cy = static_cast<double>(side) / 2.0 + rng.uniform(-25.0 * s, 25.0 * s);

    int base[3];
    for (int c = 0; c < 3; ++c)
        base[c] = std::clamp(grade.base_rgb[static_cast<std::size_t>(c)] +
                                 static_cast<int>(rng.uniform_int(-grade.color_jitter, grade.color_jitter)),
                             0, 255);

    std::vector<Groove> grooves;
    if (grade.groove_max > 0) {
        const int count = static_cast<int>(rng.uniform_int(grade.groove_min, grade.groove_max));
        // One waveform per fruit: parallel grooves never cross, so each stays
        // a separate dark band.
        const double amplitude = rng.uniform(1.5 * s, 3.0 * s);
        const double phase = rng.uniform(0.0, 2.0 * kPi);
        const double wavelength = rng.uniform(30.0 * s, 50.0 * s);
        for (int i = 0; i < count; ++i) {
            Groove g;
            const double slot = -0.5 + (static_cast<double>(i) + 0.5) / static_cast<double>(count);
            g.pos = a * slot + a * rng.uniform(-0.015, 0.015);
            g.amplitude = amplitude;
            g.phase = phase;
            g.wavelength = wavelength;
            grooves.push_back(g);
        }
    }
    const double groove_halfwidth = 3.0 * s;

    std::vector<DefectBlob> defects;
    int defect_rgb[3] = {40, 30, 30};
    const double defect_radius = 5.0 * s;
    if (grade.defect_fraction_mean > 0.0 || grade.defect_fraction_sd > 0.0) {
        const double fraction = std::max(0.0, rng.gaussian(grade.defect_fraction_mean, grade.defect_fraction_sd));
        for (int c = 0; c < 3; ++c)
            defect_rgb[c] = std::clamp(defect_rgb[c] + static_cast<int>(rng.uniform_int(-3, 3)), 0, 255);
        const int want = std::min(12L, std::lround(fraction * a * b / (defect_radius * defect_radius)));
        for (int i = 0; i < want; ++i) {
            for (int attempt = 0; attempt < 100; ++attempt) {
                const double du = rng.uniform(-0.7 * a, 0.7 * a);
                const double dv = rng.uniform(-0.7 * b, 0.7 * b);
                const double eu = du / (0.7 * a);
                const double ev = dv / (0.7 * b);
                if (eu * eu + ev * ev > 1.0) continue;
                bool clear = true;
                for (const auto& other : defects) {
                    const double ddu = du - other.u;
                    const double ddv = dv - other.v;
                    const double min_gap = 2.5 * defect_radius;
                    if (ddu * ddu + ddv * ddv < min_gap * min_gap) {
                        clear = false;
                        break;
                    }
                }
                if (clear) {
                    defects.push_back({du, dv});
                    break;
                }
            }
        }
    }

    const int x0 = std::max(f1, static_cast<int>(std::floor(cx - a - 2.0)));
    const int x1 = std::min(h1 - 1, static_cast<int>(std::ceil(cx + a + 2.0)));
    const int y0 = std::max(f1, static_cast<int>(std::floor(cy - a - 2.0)));
    const int y1 = std::min(h1 - 1, static_cast<int>(std::ceil(cy + a + 2.0)));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double dx = static_cast<double>(x) - cx;
            const double dy = static_cast<double>(y) - cy;
            const double u = dx * ct + dy * st;
            const double v = -dx * st + dy * ct;
            const double q = (u / a) * (u / a) + (v / b) * (v / b);
            if (q > 1.0) continue;

            bool in_defect = false;
            for (const auto& blob : defects) {
                const double du = u - blob.u;
                const double dv = v - blob.v;
                if (du * du + dv * dv <= defect_radius * defect_radius) {
                    in_defect = true;
                    break;
                }
            }
            if (in_defect) {
                image.set(x, y, clamp_channel(defect_rgb[0]), clamp_channel(defect_rgb[1]),
                          clamp_channel(defect_rgb[2]));
                continue;
            }

            double darken = 0.0;
            if (!grooves.empty() && q <= 0.72) {
                for (const auto& g : grooves) {
                    const double center = g.pos + g.amplitude * std::sin(2.0 * kPi * v / g.wavelength + g.phase);
                    const double d = std::abs(u - center);
                    if (d < groove_halfwidth) {
                        const double profile = std::cos(kPi * d / (2.0 * groove_halfwidth));
                        darken = std::max(darken, static_cast<double>(grade.groove_depth) * profile);
                    }
                }
            }
            const int drop = static_cast<int>(std::lround(darken));
            image.set(x, y, clamp_channel(base[0] - drop), clamp_channel(base[1] - drop),
                      clamp_channel(base[2] - drop));
        }
    }
    return image;
}

std::vector<std::pair<std::string, std::string>> generate_corpus(const SynthSpec& spec,
                                                                 const std::string& out_dir) {
    if (spec.grades.empty()) throw ConfigError("spec has no grades");
    if (spec.samples_per_grade < 1 || spec.samples_per_grade > 999)
        throw ConfigError("samples_per_grade must lie in [1, 999]");
    std::set<std::string> names;
    for (const auto& g : spec.grades) {
        if (g.name.empty() || g.name.find(',') != std::string::npos)
            throw ConfigError("grade names must be nonempty and comma-free");
        if (!names.insert(g.name).second) throw ConfigError("duplicate grade name '" + g.name + "'");
    }

    std::filesystem::create_directories(out_dir);
    std::vector<std::pair<std::string, std::string>> pairs;
    for (int g = 0; g < static_cast<int>(spec.grades.size()); ++g) {
        for (int i = 0; i < spec.samples_per_grade; ++i) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "_%03d.png", i);
            const std::string filename = spec.grades[static_cast<std::size_t>(g)].name + buf;
            const img::RgbImage image = render_sample(spec, g, i);
            img::save_png(image, (std::filesystem::path(out_dir) / filename).string());
            pairs.emplace_back(filename, spec.grades[static_cast<std::size_t>(g)].name);
        }
    }
    std::sort(pairs.begin(), pairs.end());
    csv::write_label_pairs((std::filesystem::path(out_dir) / "labels.csv").string(), pairs);
    return pairs;
}

namespace {

[[noreturn]] void bad(const std::string& origin, const std::string& what) {
    throw ConfigError(origin + ": " + what);
}

double spec_number(const json& j, const std::string& origin, const std::string& key, double lo,
                   double hi, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) bad(origin, key + " must be a number");
    const double v = j[key].get<double>();
    if (!(v >= lo && v <= hi)) bad(origin, key + " out of range");
    return v;
}

int spec_int(const json& j, const std::string& origin, const std::string& key, int lo, int hi,
             int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer()) bad(origin, key + " must be an integer");
    const long long v = j[key].get<long long>();
    if (v < lo || v > hi) bad(origin, key + " out of range");
    return static_cast<int>(v);
}

GradeSpec grade_from_json(const json& j, const std::string& origin) {
    static const std::set<std::string> known = {
        "name",       "size_mm_mean",        "size_mm_sd",        "aspect_mean",
        "aspect_sd",  "groove_min",          "groove_max",        "groove_depth",
        "defect_fraction_mean", "defect_fraction_sd", "base_rgb", "color_jitter"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!known.count(key)) bad(origin, "unknown grade key '" + key + "'");
    }
    GradeSpec g;
    if (!j.contains("name") || !j["name"].is_string()) bad(origin, "grade needs a name");
    g.name = j["name"].get<std::string>();
    g.size_mm_mean = spec_number(j, origin, "size_mm_mean", 8.0, 70.0, g.size_mm_mean);
    g.size_mm_sd = spec_number(j, origin, "size_mm_sd", 0.0, 10.0, g.size_mm_sd);
    g.aspect_mean = spec_number(j, origin, "aspect_mean", 0.5, 0.95, g.aspect_mean);
    g.aspect_sd = spec_number(j, origin, "aspect_sd", 0.0, 0.2, g.aspect_sd);
    g.groove_min = spec_int(j, origin, "groove_min", 0, 12, g.groove_min);
    g.groove_max = spec_int(j, origin, "groove_max", 0, 12, g.groove_max);
    if (g.groove_max < g.groove_min) bad(origin, "groove_max below groove_min");
    g.groove_depth = spec_int(j, origin, "groove_depth", 0, 200, g.groove_depth);
    g.defect_fraction_mean = spec_number(j, origin, "defect_fraction_mean", 0.0, 0.5, g.defect_fraction_mean);
    g.defect_fraction_sd = spec_number(j, origin, "defect_fraction_sd", 0.0, 0.5, g.defect_fraction_sd);
    if (j.contains("base_rgb")) {
        const json& rgb = j["base_rgb"];
        if (!rgb.is_array() || rgb.size() != 3) bad(origin, "base_rgb must be [r, g, b]");
        for (int c = 0; c < 3; ++c) {
            if (!rgb[static_cast<std::size_t>(c)].is_number_integer()) bad(origin, "base_rgb entries must be integers");
            const int v = rgb[static_cast<std::size_t>(c)].get<int>();
            if (v < 0 || v > 255) bad(origin, "base_rgb entries must lie in [0, 255]");
            g.base_rgb[static_cast<std::size_t>(c)] = v;
        }
    }
    g.color_jitter = spec_int(j, origin, "color_jitter", 0, 50, g.color_jitter);
    return g;
}

}  // namespace

SynthSpec parse_synth_spec_text(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        bad(origin, e.what());
    }
    if (!j.is_object()) bad(origin, "spec must be a JSON object");
    static const std::set<std::string> known = {"grades", "samples_per_grade", "seed",
                                                "render_scale", "frame_side_mm"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!known.count(key)) bad(origin, "unknown key '" + key + "'");
    }

    SynthSpec spec = default_synth_spec();
    if (j.contains("grades")) {
        if (!j["grades"].is_array() || j["grades"].empty()) bad(origin, "grades must be a nonempty array");
        spec.grades.clear();
        for (const auto& g : j["grades"]) spec.grades.push_back(grade_from_json(g, origin));
    }
    spec.samples_per_grade = spec_int(j, origin, "samples_per_grade", 1, 999, spec.samples_per_grade);
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer() || j["seed"].get<long long>() < 0)
            bad(origin, "seed must be a nonnegative integer");
        spec.seed = j["seed"].get<std::uint64_t>();
    }
    spec.render_scale = spec_int(j, origin, "render_scale", 1, 8, spec.render_scale);
    spec.frame_side_mm = spec_number(j, origin, "frame_side_mm", 10.0, 1000.0, spec.frame_side_mm);
    return spec;
}

SynthSpec load_synth_spec(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_synth_spec_text(buf.str(), path);
}

}  // namespace fruitgrade::synth
