#pragma once

#include <array>
#include <cstdint>
#include <cstddef>
#include <utility>
#include <vector>

#include "fruitgrade/errors.hpp"

namespace fruitgrade::img {

/// 8-bit interleaved RGB raster, row-major.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // width*height*3, R,G,B triples

    RgbImage() = default;
    RgbImage(int w, int h, std::uint8_t r = 0, std::uint8_t g = 0, std::uint8_t b = 0);

    std::size_t idx(int x, int y) const { return (static_cast<std::size_t>(y) * width + x) * 3; }
    const std::uint8_t* at(int x, int y) const { return pixels.data() + idx(x, y); }
    std::uint8_t* at(int x, int y) { return pixels.data() + idx(x, y); }
    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        auto* p = at(x, y);
        p[0] = r; p[1] = g; p[2] = b;
    }
    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
};

/// 8-bit grayscale raster, row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // width*height

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0);

    std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
    std::uint8_t at(int x, int y) const { return pixels[idx(x, y)]; }
    void set(int x, int y, std::uint8_t v) { pixels[idx(x, y)] = v; }
    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
};

/// Binary foreground mask, row-major (stored as bytes, 0/1).
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;  // width*height, 0 or 1

    BinaryMask() = default;
    BinaryMask(int w, int h, bool fill = false);

    std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
    bool at(int x, int y) const { return bits[idx(x, y)] != 0; }
    void set(int x, int y, bool v) { bits[idx(x, y)] = v ? 1 : 0; }
    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

    std::size_t count() const;
};

/// Integer label raster; 0 means background / unlabeled / watershed ridge.
struct LabelMap {
    int width = 0;
    int height = 0;
    std::vector<int> labels;  // width*height

    LabelMap() = default;
    LabelMap(int w, int h, int fill = 0);

    std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
    int at(int x, int y) const { return labels[idx(x, y)]; }
    void set(int x, int y, int v) { labels[idx(x, y)] = v; }
    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
};

/// Planar float channels produced by color-space conversion.
struct FloatPlanes {
    int width = 0;
    int height = 0;
    std::array<std::vector<float>, 3> ch;

    FloatPlanes() = default;
    FloatPlanes(int w, int h);

    std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

enum class SeShape { disk, square };

/// Flat structuring element for morphology. Disk uses dx*dx+dy*dy <= r*r,
/// square uses Chebyshev distance <= r. Always includes the origin.
struct StructuringElement {
    SeShape shape = SeShape::disk;
    int radius = 1;

    StructuringElement() = default;
    StructuringElement(SeShape s, int r);

    std::vector<std::pair<int, int>> offsets() const;

    static StructuringElement disk(int r) { return {SeShape::disk, r}; }
    static StructuringElement square(int r) { return {SeShape::square, r}; }
};

}  // namespace fruitgrade::img
