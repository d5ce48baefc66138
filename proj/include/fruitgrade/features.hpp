#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fruitgrade/raster.hpp"
#include "fruitgrade/segment.hpp"

namespace fruitgrade::feat {

/// Canonical feature vector length. Slot layout:
///   1-7    shape: area_mm2, perimeter_mm, major_axis_mm, minor_axis_mm,
///          equiv_diameter_mm, solidity, eccentricity
///   8-43   nine RGB-derived channels (r, g, b, ratio_r, ratio_g, ratio_b,
///          diff_rg, diff_gb, diff_rb) x (mean, variance, skewness, kurtosis)
///   44-52  L*, a*, b*, H, S, V, Y, Cb, Cr means (hue averaged circularly)
///   53-56  GLCM contrast, correlation, energy, homogeneity
///   57     defect_ratio
///   58-59  wrinkle_count, wrinkle_ratio
inline constexpr int kFeatureCount = 59;

/// The 59 canonical column names, in slot order.
const std::vector<std::string>& feature_names();

struct RegionGeometry {
    long long area_px = 0;
    double perimeter_px = 0.0;
    double centroid_x = 0.0, centroid_y = 0.0;
    double mu20 = 0.0, mu02 = 0.0, mu11 = 0.0;  // unnormalized central moments, px^2 units
    double convex_area_px = 0.0;
};

struct ShapeFeatures {
    double area_mm2, perimeter_mm, major_axis_mm, minor_axis_mm;
    double equiv_diameter_mm, solidity, eccentricity;
};

struct ChannelStats {
    double mean = 0.0, variance = 0.0, skewness = 0.0, kurtosis = 0.0;
};

struct GlcmMatrix {
    int levels = 0;
    std::vector<double> p;  // levels x levels, row-major, sums to 1

    double at(int i, int j) const { return p[static_cast<std::size_t>(i) * levels + j]; }
};

struct TextureFeatures {
    double contrast = 0.0, correlation = 0.0, energy = 0.0, homogeneity = 0.0;
};

struct ExtractionConfig {
    int glcm_levels = 8;
    std::vector<std::pair<int, int>> glcm_offsets = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}};
    double v_defect = 0.25;
    int wrinkle_h = 10;
    int wrinkle_min_basin_px = 25;
};

/// Pixel count, Moore boundary-walk perimeter (straight steps 1, diagonal
/// steps sqrt(2)), centroid, unnormalized central moments of pixel centers,
/// and convex hull area with a Pick-style +perimeter/2+1 correction so a
/// filled convex raster scores solidity ~1. Throws EmptyMask.
RegionGeometry region_geometry(const img::BinaryMask& mask);

/// Slots 1-7 from geometry. Axes come from the moment-equivalent ellipse.
/// Throws DegenerateRegion when the minor axis underflows (collinear pixels)
/// or the region has fewer than 4 pixels.
ShapeFeatures shape_features(const RegionGeometry& geom, double mm_per_pixel);

/// Population moments: mean, variance (divisor n), skewness, and excess
/// kurtosis; zero-variance samples report skewness 0 and kurtosis 0. Throws
/// EmptySamples.
ChannelStats channel_stats(const std::vector<double>& samples);

/// Slots 8-52 over masked pixels only. Zero-sum pixels contribute 0 to the
/// ratio channels.
std::vector<double> color_features(const seg::FruitView& view);

/// Intensities quantized to `levels` equal bins over [0,255]; pairs counted
/// when both pixels are in the mask, over all offsets and their negations,
/// normalized to sum 1. Throws NoPairs when nothing matches.
GlcmMatrix compute_glcm(const img::GrayImage& gray, const img::BinaryMask& mask, int levels,
                        const std::vector<std::pair<int, int>>& offsets);

/// Contrast, correlation (0 for zero marginal variance), energy, homogeneity.
TextureFeatures texture_features(const GlcmMatrix& glcm);

/// Fraction of in-mask pixels whose HSV value falls below v_defect.
double defect_feature(const seg::FruitView& view, double v_defect);

/// Wrinkle count and total wrinkle area / fruit area. The crop is smoothed by
/// a grayscale opening (disk r=2); watershed runs on the morphological
/// gradient of that image (out-of-mask forced to 255) after h-minima
/// filtering, with one marker per regional-minimum component plus an exterior
/// marker. A basin counts as a wrinkle when it lies fully inside the mask,
/// covers at least min_basin_px pixels, and its marker's minimum intensity is
/// below the Otsu level of the masked pixels. Smooth fruit yields (0, 0).
std::pair<int, double> wrinkle_features(const seg::FruitView& view, int h, int min_basin_px);

/// The full 59-slot vector in canonical order; throws on any non-finite slot.
std::vector<double> extract_all(const seg::FruitView& view, const ExtractionConfig& cfg);

}  // namespace fruitgrade::feat
