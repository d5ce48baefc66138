#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fruitgrade/raster.hpp"

namespace fruitgrade::synth {

/// Per-grade appearance knobs for the synthetic dried-fruit renderer.
struct GradeSpec {
    std::string name;
    double size_mm_mean = 24.0;  // major axis length
    double size_mm_sd = 1.0;
    double aspect_mean = 0.75;  // minor/major
    double aspect_sd = 0.04;
    int groove_min = 0;  // wrinkle grooves per fruit
    int groove_max = 0;
    int groove_depth = 0;  // gray-level darkening at groove center
    double defect_fraction_mean = 0.0;  // dark blob area / fruit area
    double defect_fraction_sd = 0.0;
    std::array<int, 3> base_rgb = {170, 40, 35};
    int color_jitter = 6;  // per-sample uniform +- on each channel
};

struct SynthSpec {
    std::vector<GradeSpec> grades;
    int samples_per_grade = 50;
    std::uint64_t seed = 1;
    int render_scale = 1;        // 1 gives a 724 px square image
    double frame_side_mm = 150.0;
};

/// Three visually separable grades (large smooth, medium lightly wrinkled,
/// small heavily wrinkled and blemished).
SynthSpec default_synth_spec();

/// JSON with the SynthSpec fields; "grades" defaults to the builtin three.
/// Unknown keys are rejected with ConfigError.
SynthSpec load_synth_spec(const std::string& path);
SynthSpec parse_synth_spec_text(const std::string& text, const std::string& origin);

/// Deterministic flat-shaded render: white background, black calibration
/// frame whose inner square maps to frame_side_mm, one elliptical fruit with
/// sinusoidal grooves and dark defect blobs. Every sample draws from its own
/// derived RNG stream, so images are independent of generation order and of
/// render_scale (parameters scale exactly with the pixel grid).
img::RgbImage render_sample(const SynthSpec& spec, int grade_idx, int sample_idx);

/// Renders all samples into out_dir as PNG plus labels.csv (sorted by
/// filename). Returns the written label pairs.
std::vector<std::pair<std::string, std::string>> generate_corpus(const SynthSpec& spec,
                                                                 const std::string& out_dir);

}  // namespace fruitgrade::synth
