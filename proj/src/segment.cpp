#include "fruitgrade/segment.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "fruitgrade/errors.hpp"
#include "fruitgrade/imgops.hpp"

namespace fruitgrade::seg {

namespace {

img::RgbImage crop_rgb(const img::RgbImage& image, int x0, int y0, int w, int h) {
    img::RgbImage out(w, h);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* src = image.pixels.data() +
                                  (static_cast<std::size_t>(y0 + y) * image.width + x0) * 3;
        std::uint8_t* dst = out.pixels.data() + static_cast<std::size_t>(y) * w * 3;
        std::copy(src, src + static_cast<std::size_t>(w) * 3, dst);
    }
    return out;
}

img::BinaryMask crop_mask(const img::BinaryMask& mask, int x0, int y0, int w, int h) {
    img::BinaryMask out(w, h);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* src = mask.bits.data() + static_cast<std::size_t>(y0 + y) * mask.width + x0;
        std::copy(src, src + w, out.bits.data() + static_cast<std::size_t>(y) * w);
    }
    return out;
}

/// Bounding box of the hole enclosed by the dark component `label`, found by
/// flooding non-`label` pixels from the component's bounding-box border; what
/// the flood cannot reach is inside the frame. Returns false when there is no
/// enclosed region.
bool find_enclosed_region(const img::LabelMap& labels, int label, const img::ComponentStats& cs,
                          int out_box[4]) {
    const int bw = cs.max_x - cs.min_x + 1;
    const int bh = cs.max_y - cs.min_y + 1;
    std::vector<std::uint8_t> outside(static_cast<std::size_t>(bw) * bh, 0);
    std::vector<int> stack;
    auto is_wall = [&](int bx, int by) {
        return labels.labels[static_cast<std::size_t>(cs.min_y + by) * labels.width + cs.min_x + bx] == label;
    };
    auto seed = [&](int bx, int by) {
        const int p = by * bw + bx;
        if (!is_wall(bx, by) && !outside[p]) {
            outside[p] = 1;
            stack.push_back(p);
        }
    };
    for (int bx = 0; bx < bw; ++bx) {
        seed(bx, 0);
        seed(bx, bh - 1);
    }
    for (int by = 0; by < bh; ++by) {
        seed(0, by);
        seed(bw - 1, by);
    }
    while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        const int bx = p % bw;
        const int by = p / bw;
        constexpr int dx[4] = {0, -1, 1, 0};
        constexpr int dy[4] = {-1, 0, 0, 1};
        for (int k = 0; k < 4; ++k) {
            const int qx = bx + dx[k];
            const int qy = by + dy[k];
            if (qx < 0 || qy < 0 || qx >= bw || qy >= bh) {
                continue;
            }
            const int q = qy * bw + qx;
            if (!is_wall(qx, qy) && !outside[q]) {
                outside[q] = 1;
                stack.push_back(q);
            }
        }
    }
    int min_x = bw, min_y = bh, max_x = -1, max_y = -1;
    long long hole_area = 0;
    for (int by = 0; by < bh; ++by) {
        for (int bx = 0; bx < bw; ++bx) {
            if (!is_wall(bx, by) && !outside[by * bw + bx]) {
                ++hole_area;
                min_x = std::min(min_x, bx);
                min_y = std::min(min_y, by);
                max_x = std::max(max_x, bx);
                max_y = std::max(max_y, by);
            }
        }
    }
    if (max_x < 0 || hole_area < static_cast<long long>(bw) * bh / 4) {
        return false;
    }
    out_box[0] = cs.min_x + min_x;
    out_box[1] = cs.min_y + min_y;
    out_box[2] = cs.min_x + max_x;
    out_box[3] = cs.min_y + max_y;
    return true;
}

}  // namespace

CalibrationResult detect_calibration_frame(const img::RgbImage& image, double frame_side_mm) {
    const img::GrayImage gray = img::to_grayscale(image);
    int level = 0;
    try {
        level = img::otsu_threshold(gray);
    } catch (const DegenerateHistogram&) {
        throw FrameNotFound();
    }
    img::BinaryMask dark(image.width, image.height);
    for (std::size_t i = 0; i < gray.pixels.size(); ++i) {
        dark.bits[i] = gray.pixels[i] <= level;
    }
    const img::Components comps = img::connected_components(dark, 8);

    std::vector<int> candidates(comps.stats.size());
    std::iota(candidates.begin(), candidates.end(), 0);
    std::sort(candidates.begin(), candidates.end(), [&](int a, int b) {
        return comps.stats[a].area > comps.stats[b].area;
    });
    for (int c : candidates) {
        const img::ComponentStats& cs = comps.stats[c];
        if (cs.area < 100) {
            break;
        }
        int box[4];
        if (!find_enclosed_region(comps.labels, c + 1, cs, box)) {
            continue;
        }
        const double inner_w = box[2] - box[0] + 1;
        const double inner_h = box[3] - box[1] + 1;
        const double aspect = inner_w / inner_h;
        if (aspect < 0.9 || aspect > 1.1) {
            continue;
        }
        CalibrationResult cal;
        cal.frame_quad = {Point{box[0], box[1]}, Point{box[2], box[1]},
                          Point{box[2], box[3]}, Point{box[0], box[3]}};
        cal.mm_per_pixel = frame_side_mm / (0.5 * (inner_w + inner_h));
        return cal;
    }
    throw FrameNotFound();
}

img::RgbImage crop_to_frame(const img::RgbImage& image, const CalibrationResult& cal) {
    const int x0 = std::clamp(cal.frame_quad[0].x, 0, image.width - 1);
    const int y0 = std::clamp(cal.frame_quad[0].y, 0, image.height - 1);
    const int x1 = std::clamp(cal.frame_quad[2].x, x0, image.width - 1);
    const int y1 = std::clamp(cal.frame_quad[2].y, y0, image.height - 1);
    return crop_rgb(image, x0, y0, x1 - x0 + 1, y1 - y0 + 1);
}

FruitView segment_fruit(const img::RgbImage& image, const BackgroundPolicy& policy,
                        double mm_per_pixel) {
    const img::FloatPlanes hsv = img::convert_color(image, img::ColorSpace::hsv);
    img::BinaryMask fg(image.width, image.height);
    for (std::size_t i = 0; i < fg.bits.size(); ++i) {
        const bool background = hsv.ch[1][i] < policy.sat_max && hsv.ch[2][i] > policy.val_min;
        fg.bits[i] = !background;
    }

    const long long min_area =
        std::max<long long>(1, static_cast<long long>(image.width) * image.height / 1000);
    auto largest_component = [&](const img::BinaryMask& mask) -> img::BinaryMask {
        const img::Components comps = img::connected_components(mask, 8);
        int best = -1;
        for (int i = 0; i < comps.count(); ++i) {
            if (best < 0 || comps.stats[i].area > comps.stats[best].area) {
                best = i;
            }
        }
        if (best < 0 || comps.stats[best].area < min_area) {
            throw NoForeground();
        }
        img::BinaryMask out(mask.width, mask.height);
        for (std::size_t i = 0; i < out.bits.size(); ++i) {
            out.bits[i] = comps.labels.labels[i] == best + 1;
        }
        return out;
    };

    img::BinaryMask mask = largest_component(fg);
    mask = img::fill_holes(mask);
    const img::StructuringElement se = img::StructuringElement::disk(3);
    mask = img::morph(mask, img::MorphOp::open, se);
    mask = img::morph(mask, img::MorphOp::close, se);
    mask = largest_component(mask);
    mask = img::fill_holes(mask);

    int min_x = image.width, min_y = image.height, max_x = -1, max_y = -1;
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            if (mask.bits[static_cast<std::size_t>(y) * image.width + x]) {
                min_x = std::min(min_x, x);
                min_y = std::min(min_y, y);
                max_x = std::max(max_x, x);
                max_y = std::max(max_y, y);
            }
        }
    }
    constexpr int kMargin = 4;
    const int x0 = std::max(0, min_x - kMargin);
    const int y0 = std::max(0, min_y - kMargin);
    const int x1 = std::min(image.width - 1, max_x + kMargin);
    const int y1 = std::min(image.height - 1, max_y + kMargin);

    FruitView view{crop_rgb(image, x0, y0, x1 - x0 + 1, y1 - y0 + 1),
                   crop_mask(mask, x0, y0, x1 - x0 + 1, y1 - y0 + 1),
                   img::GrayImage(1, 1), mm_per_pixel};
    view.gray = img::to_grayscale(view.crop);
    return view;
}

FruitView segment_fruit(const img::RgbImage& image, const BackgroundPolicy& policy,
                        const CalibrationResult& cal) {
    return segment_fruit(image, policy, cal.mm_per_pixel);
}

}  // namespace fruitgrade::seg
