#include "fruitgrade/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "fruitgrade/errors.hpp"

namespace fruitgrade::cfg {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& origin, const std::string& what) {
    throw ConfigError(origin + ": " + what);
}

double require_number(const json& j, const std::string& origin, const std::string& key, double lo,
                      double hi) {
    const json& v = j.at(key);
    if (!v.is_number()) bad(origin, key + " must be a number");
    const double x = v.get<double>();
    if (!(x >= lo && x <= hi))
        bad(origin, key + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
}

int require_int(const json& j, const std::string& origin, const std::string& key, int lo, int hi) {
    const json& v = j.at(key);
    if (!v.is_number_integer()) bad(origin, key + " must be an integer");
    const long long x = v.get<long long>();
    if (x < lo || x > hi)
        bad(origin, key + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(x);
}

}  // namespace

PipelineConfig parse_config_text(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        bad(origin, e.what());
    }
    if (!j.is_object()) bad(origin, "config must be a JSON object");

    static const std::set<std::string> known = {
        "sat_max",       "val_min",        "mm_per_pixel",         "frame_side_mm",
        "glcm_levels",   "glcm_offsets",   "v_defect",             "wrinkle_h",
        "wrinkle_min_basin_px", "selection", "pca_explained_target", "cfs_stall_limit",
        "model_preset",  "seed"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!known.count(key)) bad(origin, "unknown key '" + key + "'");
    }

    PipelineConfig c;
    if (j.contains("sat_max")) c.policy.sat_max = require_number(j, origin, "sat_max", 0.0, 1.0);
    if (j.contains("val_min")) c.policy.val_min = require_number(j, origin, "val_min", 0.0, 1.0);
    if (j.contains("mm_per_pixel")) {
        if (!j["mm_per_pixel"].is_null())
            c.mm_per_pixel = require_number(j, origin, "mm_per_pixel", 1e-6, 100.0);
    }
    if (j.contains("frame_side_mm"))
        c.frame_side_mm = require_number(j, origin, "frame_side_mm", 1.0, 10000.0);
    if (j.contains("glcm_levels")) c.extraction.glcm_levels = require_int(j, origin, "glcm_levels", 2, 64);
    if (j.contains("glcm_offsets")) {
        const json& offs = j["glcm_offsets"];
        if (!offs.is_array() || offs.empty()) bad(origin, "glcm_offsets must be a nonempty array");
        c.extraction.glcm_offsets.clear();
        for (const auto& o : offs) {
            if (!o.is_array() || o.size() != 2 || !o[0].is_number_integer() || !o[1].is_number_integer())
                bad(origin, "each glcm offset must be [dx, dy]");
            const int dx = o[0].get<int>();
            const int dy = o[1].get<int>();
            if (dx < -8 || dx > 8 || dy < -8 || dy > 8 || (dx == 0 && dy == 0))
                bad(origin, "glcm offsets must be nonzero and within 8 pixels");
            c.extraction.glcm_offsets.emplace_back(dx, dy);
        }
    }
    if (j.contains("v_defect")) c.extraction.v_defect = require_number(j, origin, "v_defect", 0.0, 1.0);
    if (j.contains("wrinkle_h")) c.extraction.wrinkle_h = require_int(j, origin, "wrinkle_h", 1, 128);
    if (j.contains("wrinkle_min_basin_px"))
        c.extraction.wrinkle_min_basin_px = require_int(j, origin, "wrinkle_min_basin_px", 0, 1000000);
    if (j.contains("selection")) {
        const std::string s = j["selection"].get<std::string>();
        if (s != "none" && s != "pca" && s != "cfs") bad(origin, "selection must be none, pca or cfs");
        c.selection = s;
    }
    if (j.contains("pca_explained_target")) {
        c.pca_explained_target = require_number(j, origin, "pca_explained_target", 1e-6, 1.0);
    }
    if (j.contains("cfs_stall_limit"))
        c.cfs_stall_limit = require_int(j, origin, "cfs_stall_limit", 0, 59);
    if (j.contains("model_preset")) {
        if (!j["model_preset"].is_string()) bad(origin, "model_preset must be a string");
        c.model_preset = j["model_preset"].get<std::string>();
    }
    if (j.contains("seed")) {
        const json& v = j["seed"];
        if (!v.is_number_integer() || v.get<long long>() < 0) bad(origin, "seed must be a nonnegative integer");
        c.seed = v.get<std::uint64_t>();
    }
    return c;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_config_text(buf.str(), path);
}

std::string config_to_text(const PipelineConfig& config) {
    json j;
    j["sat_max"] = config.policy.sat_max;
    j["val_min"] = config.policy.val_min;
    if (config.mm_per_pixel)
        j["mm_per_pixel"] = *config.mm_per_pixel;
    else
        j["mm_per_pixel"] = nullptr;
    j["frame_side_mm"] = config.frame_side_mm;
    j["glcm_levels"] = config.extraction.glcm_levels;
    json offs = json::array();
    for (const auto& [dx, dy] : config.extraction.glcm_offsets) offs.push_back(json::array({dx, dy}));
    j["glcm_offsets"] = offs;
    j["v_defect"] = config.extraction.v_defect;
    j["wrinkle_h"] = config.extraction.wrinkle_h;
    j["wrinkle_min_basin_px"] = config.extraction.wrinkle_min_basin_px;
    j["selection"] = config.selection;
    j["pca_explained_target"] = config.pca_explained_target;
    j["cfs_stall_limit"] = config.cfs_stall_limit;
    j["model_preset"] = config.model_preset;
    j["seed"] = config.seed;
    return j.dump(2) + "\n";
}

}  // namespace fruitgrade::cfg
