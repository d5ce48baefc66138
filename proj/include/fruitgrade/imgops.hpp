#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fruitgrade/raster.hpp"

namespace fruitgrade::img {

/// BT.601 luma: round(0.299 R + 0.587 G + 0.114 B).
GrayImage to_grayscale(const RgbImage& img);

/// Otsu's threshold over the (optionally masked) histogram. Returns the
/// smallest level t maximizing between-class variance; foreground convention
/// is pixel > t. Throws DegenerateHistogram when all considered pixels share
/// one value.
int otsu_threshold(const GrayImage& img, const BinaryMask* mask = nullptr);

/// Mask of pixels strictly greater than level.
BinaryMask binarize(const GrayImage& img, int level);

enum class MorphOp { erode, dilate, open, close };

/// Binary morphology. Erosion treats out-of-image neighbors as foreground and
/// dilation treats them as background, so opening and closing leave a full
/// mask intact instead of eating its border.
BinaryMask morph(const BinaryMask& mask, MorphOp op, const StructuringElement& se);

struct ComponentStats {
    long long area = 0;
    int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};

struct Components {
    LabelMap labels;
    std::vector<ComponentStats> stats;  // stats[i] describes label i+1

    int count() const { return static_cast<int>(stats.size()); }
};

/// Labels maximal connected true-regions 1..count in raster order of their
/// first pixel; background stays 0. Connectivity must be 4 or 8.
Components connected_components(const BinaryMask& mask, int connectivity);

enum class ColorSpace { hsv, lab, ycbcr };

/// Planar float conversion. HSV: H in degrees [0,360), S and V in [0,1],
/// achromatic hue 0. Lab: sRGB/D65, L* in [0,100]. YCbCr: BT.601 full-range,
/// all three in [0,255].
FloatPlanes convert_color(const RgbImage& img, ColorSpace space);

/// Inverse of the HSV conversion, rounded to 8-bit; used for round-trip checks.
void hsv_to_rgb(double h, double s, double v, std::uint8_t rgb[3]);

/// Suppresses every regional minimum whose dynamic (the climb needed to reach
/// strictly lower ground) is less than h, filling its basin up to the saddle
/// where it meets deeper structure. Equal-depth minima that meet below h pool
/// into one plateau minimum. Values elsewhere are untouched; a constant image
/// comes back unchanged.
GrayImage h_minima(const GrayImage& img, int h);

/// True for pixels belonging to plateaus with no lower 8-neighbor.
BinaryMask regional_minima(const GrayImage& img);

/// Marker-controlled watershed by priority flooding (4-connected, ties in
/// raster order). Ridge pixels, where distinct basins meet, are labeled 0;
/// marker pixels keep their labels. Throws NoMarkers if markers are all zero.
LabelMap watershed(const GrayImage& img, const LabelMap& markers);

/// Fills background regions not connected (4-conn) to the image border.
BinaryMask fill_holes(const BinaryMask& mask);

GrayImage gray_erode(const GrayImage& img, const StructuringElement& se);
GrayImage gray_dilate(const GrayImage& img, const StructuringElement& se);
GrayImage gray_open(const GrayImage& img, const StructuringElement& se);

/// Morphological gradient: dilate minus erode.
GrayImage morph_gradient(const GrayImage& img, const StructuringElement& se);

}  // namespace fruitgrade::img
