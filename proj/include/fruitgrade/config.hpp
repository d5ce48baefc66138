#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "fruitgrade/features.hpp"
#include "fruitgrade/segment.hpp"

namespace fruitgrade::cfg {

/// Everything tunable about the pipeline, with the shipped defaults. Loaded
/// from a flat JSON object; unknown keys and out-of-range values are
/// rejected with ConfigError.
struct PipelineConfig {
    seg::BackgroundPolicy policy;
    std::optional<double> mm_per_pixel;  // set to skip frame detection
    double frame_side_mm = 150.0;
    feat::ExtractionConfig extraction;
    std::string selection = "none";  // none | pca | cfs
    double pca_explained_target = 0.95;
    int cfs_stall_limit = 5;
    std::string model_preset = "tree-medium";
    std::uint64_t seed = 1;
};

PipelineConfig load_config(const std::string& path);
PipelineConfig parse_config_text(const std::string& text, const std::string& origin);
std::string config_to_text(const PipelineConfig& config);

}  // namespace fruitgrade::cfg
