#pragma once

#include <string>

#include "fruitgrade/raster.hpp"

namespace fruitgrade::img {

/// Decodes an 8-bit PNG or JPEG file (detected by magic bytes) into RGB.
/// Palette and grayscale inputs are expanded; 16-bit depth is reduced; alpha
/// is stripped. Throws IoError naming the file on any failure.
RgbImage load_image(const std::string& path);

void save_png(const RgbImage& img, const std::string& path);
void save_jpeg(const RgbImage& img, const std::string& path, int quality = 95);

/// Debug dumps: binary PGM (P5) for gray images, binary PBM (P4) for masks.
void save_pgm(const GrayImage& img, const std::string& path);
void save_pbm(const BinaryMask& mask, const std::string& path);

}  // namespace fruitgrade::img
