#pragma once

#include <string>

#include "fruitgrade/pipeline.hpp"

namespace fruitgrade::io {

/// JSON round trip for trained models and fitted transforms. Numbers use
/// shortest round-trip formatting, so save/load/save is byte-stable.
void save_model(const std::string& path, const pipe::TrainedModel& model);
pipe::TrainedModel load_model(const std::string& path);

void save_transform(const std::string& path, const pipe::TransformArtifact& transform);
pipe::TransformArtifact load_transform(const std::string& path);

}  // namespace fruitgrade::io
