#pragma once

#include <array>

#include "fruitgrade/raster.hpp"

namespace fruitgrade::seg {

struct Point {
    int x = 0;
    int y = 0;
};

/// Inner quad of the physical calibration frame plus the derived scale.
struct CalibrationResult {
    std::array<Point, 4> frame_quad;  // inner corners: TL, TR, BR, BL
    double mm_per_pixel = 0.0;
};

/// HSV thresholds deciding what counts as white studio background.
struct BackgroundPolicy {
    double sat_max = 0.15;
    double val_min = 0.70;
};

/// Calibrated, background-free crop of a single fruit.
struct FruitView {
    img::RgbImage crop;
    img::BinaryMask mask;
    img::GrayImage gray;
    double mm_per_pixel = 1.0;
};

/// Finds the largest dark rectangular frame on a white background and derives
/// mm_per_pixel = frame_side_mm / mean(inner side lengths). Throws
/// FrameNotFound when no hollow dark component with inner aspect ratio in
/// [0.9, 1.1] exists.
CalibrationResult detect_calibration_frame(const img::RgbImage& image, double frame_side_mm);

/// Sub-image strictly inside the frame's inner quad, clipped to the image.
img::RgbImage crop_to_frame(const img::RgbImage& image, const CalibrationResult& cal);

/// Removes the background (low saturation, high value), keeps the largest
/// connected component, fills holes, smooths with open/close (disk r=3) and
/// crops to the mask bounding box plus a 4 px margin. Throws NoForeground if
/// no candidate component covers at least 0.1% of the pixels.
FruitView segment_fruit(const img::RgbImage& image, const BackgroundPolicy& policy,
                        double mm_per_pixel);
FruitView segment_fruit(const img::RgbImage& image, const BackgroundPolicy& policy,
                        const CalibrationResult& cal);

}  // namespace fruitgrade::seg
