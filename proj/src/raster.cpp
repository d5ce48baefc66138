#include "fruitgrade/raster.hpp"

#include <algorithm>
#include <numeric>

namespace fruitgrade::img {

namespace {
void check_dims(int w, int h) {
    if (w < 1 || h < 1) {
        throw Error("raster dimensions must be >= 1");
    }
}
}  // namespace

RgbImage::RgbImage(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b)
    : width(w), height(h) {
    check_dims(w, h);
    pixels.resize(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i < pixels.size(); i += 3) {
        pixels[i] = r;
        pixels[i + 1] = g;
        pixels[i + 2] = b;
    }
}

GrayImage::GrayImage(int w, int h, std::uint8_t fill) : width(w), height(h) {
    check_dims(w, h);
    pixels.assign(static_cast<std::size_t>(w) * h, fill);
}

BinaryMask::BinaryMask(int w, int h, bool fill) : width(w), height(h) {
    check_dims(w, h);
    bits.assign(static_cast<std::size_t>(w) * h, fill ? 1 : 0);
}

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(
        std::accumulate(bits.begin(), bits.end(), std::size_t{0}));
}

LabelMap::LabelMap(int w, int h, int fill) : width(w), height(h) {
    check_dims(w, h);
    labels.assign(static_cast<std::size_t>(w) * h, fill);
}

FloatPlanes::FloatPlanes(int w, int h) : width(w), height(h) {
    check_dims(w, h);
    for (auto& c : ch) {
        c.assign(static_cast<std::size_t>(w) * h, 0.0f);
    }
}

StructuringElement::StructuringElement(SeShape s, int r) : shape(s), radius(r) {
    if (r < 1) {
        throw Error("structuring element radius must be >= 1");
    }
}

std::vector<std::pair<int, int>> StructuringElement::offsets() const {
    std::vector<std::pair<int, int>> out;
    const int r = radius;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            const bool inside = shape == SeShape::square
                                    ? true
                                    : dx * dx + dy * dy <= r * r;
            if (inside) {
                out.emplace_back(dx, dy);
            }
        }
    }
    return out;
}

}  // namespace fruitgrade::img
