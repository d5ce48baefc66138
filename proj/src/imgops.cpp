#include "fruitgrade/imgops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <queue>
#include <tuple>

#include "fruitgrade/errors.hpp"

namespace fruitgrade::img {

namespace {

constexpr int kNeigh4X[4] = {0, -1, 1, 0};
constexpr int kNeigh4Y[4] = {-1, 0, 0, 1};
constexpr int kNeigh8X[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
constexpr int kNeigh8Y[8] = {-1, -1, -1, 0, 0, 1, 1, 1};

double srgb_to_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
    constexpr double eps = 216.0 / 24389.0;
    constexpr double kappa = 24389.0 / 27.0;
    return t > eps ? std::cbrt(t) : (kappa * t + 16.0) / 116.0;
}

}  // namespace

GrayImage to_grayscale(const RgbImage& img) {
    GrayImage out(img.width, img.height);
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = img.pixels[3 * i];
        const double g = img.pixels[3 * i + 1];
        const double b = img.pixels[3 * i + 2];
        const long y = std::lround(0.299 * r + 0.587 * g + 0.114 * b);
        out.pixels[i] = static_cast<std::uint8_t>(std::clamp(y, 0L, 255L));
    }
    return out;
}

int otsu_threshold(const GrayImage& img, const BinaryMask* mask) {
    if (mask && (mask->width != img.width || mask->height != img.height)) {
        throw Error("otsu_threshold: mask dimensions differ from image");
    }
    std::array<long long, 256> hist{};
    const std::size_t n = img.pixels.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask || mask->bits[i]) {
            ++hist[img.pixels[i]];
        }
    }
    long long total = 0;
    int distinct = 0;
    double total_sum = 0.0;
    for (int v = 0; v < 256; ++v) {
        total += hist[v];
        distinct += hist[v] > 0;
        total_sum += static_cast<double>(v) * hist[v];
    }
    if (distinct < 2) {
        throw DegenerateHistogram();
    }

    int best_t = 0;
    double best_var = -1.0;
    long long w0 = 0;
    double sum0 = 0.0;
    for (int t = 0; t < 256; ++t) {
        w0 += hist[t];
        sum0 += static_cast<double>(t) * hist[t];
        const long long w1 = total - w0;
        if (w0 == 0 || w1 == 0) {
            continue;
        }
        const double mu0 = sum0 / w0;
        const double mu1 = (total_sum - sum0) / w1;
        const double var = static_cast<double>(w0) * static_cast<double>(w1) *
                           (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var) {
            best_var = var;
            best_t = t;
        }
    }
    return best_t;
}

BinaryMask binarize(const GrayImage& img, int level) {
    BinaryMask out(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        out.bits[i] = img.pixels[i] > level;
    }
    return out;
}

namespace {

BinaryMask erode_mask(const BinaryMask& mask, const std::vector<std::pair<int, int>>& offsets) {
    BinaryMask out(mask.width, mask.height);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            bool keep = true;
            for (const auto& [dx, dy] : offsets) {
                const int nx = x + dx;
                const int ny = y + dy;
                // Out-of-image neighbors count as foreground, so a full mask
                // survives erosion and open/close are border-stable.
                if (nx < 0 || ny < 0 || nx >= mask.width || ny >= mask.height) continue;
                if (!mask.bits[static_cast<std::size_t>(ny) * mask.width + nx]) {
                    keep = false;
                    break;
                }
            }
            out.bits[static_cast<std::size_t>(y) * mask.width + x] = keep;
        }
    }
    return out;
}

BinaryMask dilate_mask(const BinaryMask& mask, const std::vector<std::pair<int, int>>& offsets) {
    BinaryMask out(mask.width, mask.height);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            bool hit = false;
            for (const auto& [dx, dy] : offsets) {
                const int nx = x + dx;
                const int ny = y + dy;
                if (nx >= 0 && ny >= 0 && nx < mask.width && ny < mask.height &&
                    mask.bits[static_cast<std::size_t>(ny) * mask.width + nx]) {
                    hit = true;
                    break;
                }
            }
            out.bits[static_cast<std::size_t>(y) * mask.width + x] = hit;
        }
    }
    return out;
}

}  // namespace

BinaryMask morph(const BinaryMask& mask, MorphOp op, const StructuringElement& se) {
    const auto offsets = se.offsets();
    switch (op) {
        case MorphOp::erode:
            return erode_mask(mask, offsets);
        case MorphOp::dilate:
            return dilate_mask(mask, offsets);
        case MorphOp::open:
            return dilate_mask(erode_mask(mask, offsets), offsets);
        case MorphOp::close:
            return erode_mask(dilate_mask(mask, offsets), offsets);
    }
    throw Error("morph: unknown operation");
}

Components connected_components(const BinaryMask& mask, int connectivity) {
    if (connectivity != 4 && connectivity != 8) {
        throw Error("connected_components: connectivity must be 4 or 8");
    }
    const int* nx = connectivity == 4 ? kNeigh4X : kNeigh8X;
    const int* ny = connectivity == 4 ? kNeigh4Y : kNeigh8Y;
    const int ncount = connectivity;

    Components out{LabelMap(mask.width, mask.height), {}};
    std::vector<int> stack;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            const int idx = y * mask.width + x;
            if (!mask.bits[idx] || out.labels.labels[idx] != 0) {
                continue;
            }
            const int label = static_cast<int>(out.stats.size()) + 1;
            ComponentStats cs{0, x, y, x, y};
            stack.assign(1, idx);
            out.labels.labels[idx] = label;
            while (!stack.empty()) {
                const int p = stack.back();
                stack.pop_back();
                const int px = p % mask.width;
                const int py = p / mask.width;
                ++cs.area;
                cs.min_x = std::min(cs.min_x, px);
                cs.min_y = std::min(cs.min_y, py);
                cs.max_x = std::max(cs.max_x, px);
                cs.max_y = std::max(cs.max_y, py);
                for (int k = 0; k < ncount; ++k) {
                    const int qx = px + nx[k];
                    const int qy = py + ny[k];
                    if (qx < 0 || qy < 0 || qx >= mask.width || qy >= mask.height) {
                        continue;
                    }
                    const int q = qy * mask.width + qx;
                    if (mask.bits[q] && out.labels.labels[q] == 0) {
                        out.labels.labels[q] = label;
                        stack.push_back(q);
                    }
                }
            }
            out.stats.push_back(cs);
        }
    }
    return out;
}

FloatPlanes convert_color(const RgbImage& img, ColorSpace space) {
    FloatPlanes out(img.width, img.height);
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = img.pixels[3 * i] / 255.0;
        const double g = img.pixels[3 * i + 1] / 255.0;
        const double b = img.pixels[3 * i + 2] / 255.0;
        double c0 = 0.0, c1 = 0.0, c2 = 0.0;
        switch (space) {
            case ColorSpace::hsv: {
                const double maxc = std::max({r, g, b});
                const double minc = std::min({r, g, b});
                const double delta = maxc - minc;
                double hue = 0.0;
                if (delta > 0.0) {
                    if (maxc == r) {
                        hue = 60.0 * ((g - b) / delta);
                    } else if (maxc == g) {
                        hue = 60.0 * ((b - r) / delta + 2.0);
                    } else {
                        hue = 60.0 * ((r - g) / delta + 4.0);
                    }
                    if (hue < 0.0) {
                        hue += 360.0;
                    }
                    if (hue >= 360.0) {
                        hue -= 360.0;
                    }
                }
                c0 = hue;
                c1 = maxc <= 0.0 ? 0.0 : delta / maxc;
                c2 = maxc;
                break;
            }
            case ColorSpace::lab: {
                const double rl = srgb_to_linear(r);
                const double gl = srgb_to_linear(g);
                const double bl = srgb_to_linear(b);
                const double xr = (0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl) / 0.95047;
                const double yr = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
                const double zr = (0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl) / 1.08883;
                const double fx = lab_f(xr);
                const double fy = lab_f(yr);
                const double fz = lab_f(zr);
                c0 = 116.0 * fy - 16.0;
                c1 = 500.0 * (fx - fy);
                c2 = 200.0 * (fy - fz);
                break;
            }
            case ColorSpace::ycbcr: {
                const double r8 = img.pixels[3 * i];
                const double g8 = img.pixels[3 * i + 1];
                const double b8 = img.pixels[3 * i + 2];
                c0 = 0.299 * r8 + 0.587 * g8 + 0.114 * b8;
                c1 = 128.0 - 0.168736 * r8 - 0.331264 * g8 + 0.5 * b8;
                c2 = 128.0 + 0.5 * r8 - 0.418688 * g8 - 0.081312 * b8;
                break;
            }
        }
        out.ch[0][i] = static_cast<float>(c0);
        out.ch[1][i] = static_cast<float>(c1);
        out.ch[2][i] = static_cast<float>(c2);
    }
    return out;
}

void hsv_to_rgb(double h, double s, double v, std::uint8_t rgb[3]) {
    double r = v, g = v, b = v;
    if (s > 0.0) {
        double hh = h / 60.0;
        if (hh >= 6.0) {
            hh -= 6.0;
        }
        const int sector = static_cast<int>(hh);
        const double f = hh - sector;
        const double p = v * (1.0 - s);
        const double q = v * (1.0 - s * f);
        const double t = v * (1.0 - s * (1.0 - f));
        switch (sector) {
            case 0: r = v; g = t; b = p; break;
            case 1: r = q; g = v; b = p; break;
            case 2: r = p; g = v; b = t; break;
            case 3: r = p; g = q; b = v; break;
            case 4: r = t; g = p; b = v; break;
            default: r = v; g = p; b = q; break;
        }
    }
    rgb[0] = static_cast<std::uint8_t>(std::clamp(std::lround(r * 255.0), 0L, 255L));
    rgb[1] = static_cast<std::uint8_t>(std::clamp(std::lround(g * 255.0), 0L, 255L));
    rgb[2] = static_cast<std::uint8_t>(std::clamp(std::lround(b * 255.0), 0L, 255L));
}

/// Union-find flooding in ascending intensity order. Each component tracks the
/// minimum original value of its pixels; when two components meet at level v
/// the one with the higher minimum "dies", and if its dynamic v - min is below
/// h its pixels are raised to the saddle level v. A final sweep suppresses the
/// surviving component when the whole image's relief is shallower than h.
GrayImage h_minima(const GrayImage& img, int h) {
    if (h < 1) {
        throw Error("h_minima: h must be >= 1");
    }
    const int w = img.width;
    const int n = w * img.height;
    GrayImage out = img;

    std::array<int, 257> bucket_start{};
    for (int p = 0; p < n; ++p) {
        ++bucket_start[img.pixels[p] + 1];
    }
    for (int v = 0; v < 256; ++v) {
        bucket_start[v + 1] += bucket_start[v];
    }
    std::vector<int> order(n);
    {
        std::array<int, 256> cursor{};
        for (int v = 0; v < 256; ++v) {
            cursor[v] = bucket_start[v];
        }
        for (int p = 0; p < n; ++p) {
            order[cursor[img.pixels[p]]++] = p;
        }
    }

    std::vector<int> parent(n, -1);
    std::vector<int> head(n), tail(n), next_px(n, -1);
    std::vector<std::uint8_t> min_val(n), max_val(n);

    auto find = [&parent](int p) {
        while (parent[p] != p) {
            parent[p] = parent[parent[p]];
            p = parent[p];
        }
        return p;
    };
    auto fill_to = [&](int root, int level) {
        for (int p = head[root]; p != -1; p = next_px[p]) {
            if (out.pixels[p] < level) {
                out.pixels[p] = static_cast<std::uint8_t>(level);
            }
        }
    };

    for (int oi = 0; oi < n; ++oi) {
        const int p = order[oi];
        const int v = img.pixels[p];
        parent[p] = p;
        head[p] = tail[p] = p;
        next_px[p] = -1;
        min_val[p] = max_val[p] = static_cast<std::uint8_t>(v);
        const int px = p % w;
        const int py = p / w;
        for (int k = 0; k < 8; ++k) {
            const int qx = px + kNeigh8X[k];
            const int qy = py + kNeigh8Y[k];
            if (qx < 0 || qy < 0 || qx >= w || qy >= img.height) {
                continue;
            }
            const int q = qy * w + qx;
            if (parent[q] == -1) {
                continue;
            }
            const int r1 = find(p);
            const int r2 = find(q);
            if (r1 == r2) {
                continue;
            }
            const int survivor = min_val[r1] <= min_val[r2] ? r1 : r2;
            const int dying = survivor == r1 ? r2 : r1;
            const bool equal_pools = min_val[dying] == min_val[survivor];
            const bool shallow = v - min_val[dying] < h;
            if (shallow && !equal_pools) {
                fill_to(dying, v);
            }
            parent[dying] = survivor;
            next_px[tail[survivor]] = head[dying];
            tail[survivor] = tail[dying];
            max_val[survivor] = std::max(max_val[survivor], max_val[dying]);
            if (shallow && equal_pools) {
                // Equal-depth basins closer than h pool into one plateau
                // minimum instead of one drowning the other.
                fill_to(survivor, v);
            }
        }
    }
    for (int p = 0; p < n; ++p) {
        if (parent[p] == p && max_val[p] - min_val[p] < h) {
            fill_to(p, max_val[p]);
        }
    }
    return out;
}

BinaryMask regional_minima(const GrayImage& img) {
    const int w = img.width;
    const int n = w * img.height;
    BinaryMask out(img.width, img.height);
    std::vector<std::uint8_t> visited(n, 0);
    std::vector<int> plateau, frontier;
    for (int start = 0; start < n; ++start) {
        if (visited[start]) {
            continue;
        }
        const int v = img.pixels[start];
        bool is_min = true;
        plateau.clear();
        frontier.assign(1, start);
        visited[start] = 1;
        while (!frontier.empty()) {
            const int p = frontier.back();
            frontier.pop_back();
            plateau.push_back(p);
            const int px = p % w;
            const int py = p / w;
            for (int k = 0; k < 8; ++k) {
                const int qx = px + kNeigh8X[k];
                const int qy = py + kNeigh8Y[k];
                if (qx < 0 || qy < 0 || qx >= w || qy >= img.height) {
                    continue;
                }
                const int q = qy * w + qx;
                if (img.pixels[q] < v) {
                    is_min = false;
                } else if (img.pixels[q] == v && !visited[q]) {
                    visited[q] = 1;
                    frontier.push_back(q);
                }
            }
        }
        if (is_min) {
            for (int p : plateau) {
                out.bits[p] = 1;
            }
        }
    }
    return out;
}

LabelMap watershed(const GrayImage& img, const LabelMap& markers) {
    if (markers.width != img.width || markers.height != img.height) {
        throw Error("watershed: marker dimensions differ from image");
    }
    const int w = img.width;
    const int n = w * img.height;
    bool any = false;
    for (int p = 0; p < n && !any; ++p) {
        any = markers.labels[p] > 0;
    }
    if (!any) {
        throw NoMarkers();
    }

    constexpr int kRidge = -1;
    std::vector<int> result(markers.labels.begin(), markers.labels.end());
    std::vector<std::uint8_t> queued(n, 0);

    using Entry = std::tuple<int, long long, int>;  // (intensity, insertion seq, pixel)
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
    long long seq = 0;

    auto push_unlabeled_neighbors = [&](int p) {
        const int px = p % w;
        const int py = p / w;
        for (int k = 0; k < 4; ++k) {
            const int qx = px + kNeigh4X[k];
            const int qy = py + kNeigh4Y[k];
            if (qx < 0 || qy < 0 || qx >= w || qy >= img.height) {
                continue;
            }
            const int q = qy * w + qx;
            if (result[q] == 0 && !queued[q]) {
                queued[q] = 1;
                heap.emplace(img.pixels[q], seq++, q);
            }
        }
    };

    for (int p = 0; p < n; ++p) {
        if (result[p] > 0) {
            push_unlabeled_neighbors(p);
        }
    }
    while (!heap.empty()) {
        const int p = std::get<2>(heap.top());
        heap.pop();
        if (result[p] != 0) {
            continue;
        }
        const int px = p % w;
        const int py = p / w;
        int label = 0;
        bool ridge = false;
        for (int k = 0; k < 4; ++k) {
            const int qx = px + kNeigh4X[k];
            const int qy = py + kNeigh4Y[k];
            if (qx < 0 || qy < 0 || qx >= w || qy >= img.height) {
                continue;
            }
            const int ql = result[qy * w + qx];
            if (ql > 0) {
                if (label == 0) {
                    label = ql;
                } else if (label != ql) {
                    ridge = true;
                }
            }
        }
        if (ridge || label == 0) {
            result[p] = kRidge;
        } else {
            result[p] = label;
            push_unlabeled_neighbors(p);
        }
    }

    LabelMap out(img.width, img.height);
    for (int p = 0; p < n; ++p) {
        out.labels[p] = result[p] > 0 ? result[p] : 0;
    }
    return out;
}

BinaryMask fill_holes(const BinaryMask& mask) {
    const int w = mask.width;
    const int hgt = mask.height;
    std::vector<std::uint8_t> outside(static_cast<std::size_t>(w) * hgt, 0);
    std::vector<int> stack;
    auto seed = [&](int x, int y) {
        const int p = y * w + x;
        if (!mask.bits[p] && !outside[p]) {
            outside[p] = 1;
            stack.push_back(p);
        }
    };
    for (int x = 0; x < w; ++x) {
        seed(x, 0);
        seed(x, hgt - 1);
    }
    for (int y = 0; y < hgt; ++y) {
        seed(0, y);
        seed(w - 1, y);
    }
    while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        const int px = p % w;
        const int py = p / w;
        for (int k = 0; k < 4; ++k) {
            const int qx = px + kNeigh4X[k];
            const int qy = py + kNeigh4Y[k];
            if (qx < 0 || qy < 0 || qx >= w || qy >= hgt) {
                continue;
            }
            const int q = qy * w + qx;
            if (!mask.bits[q] && !outside[q]) {
                outside[q] = 1;
                stack.push_back(q);
            }
        }
    }
    BinaryMask out(mask.width, mask.height);
    for (std::size_t p = 0; p < out.bits.size(); ++p) {
        out.bits[p] = mask.bits[p] || !outside[p];
    }
    return out;
}

namespace {

template <typename Fold>
GrayImage gray_fold(const GrayImage& img, const StructuringElement& se, int init, Fold fold) {
    const auto offsets = se.offsets();
    GrayImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            int acc = init;
            for (const auto& [dx, dy] : offsets) {
                const int nx = x + dx;
                const int ny = y + dy;
                if (nx >= 0 && ny >= 0 && nx < img.width && ny < img.height) {
                    acc = fold(acc, static_cast<int>(img.pixels[ny * img.width + nx]));
                }
            }
            out.pixels[y * img.width + x] = static_cast<std::uint8_t>(acc);
        }
    }
    return out;
}

}  // namespace

GrayImage gray_erode(const GrayImage& img, const StructuringElement& se) {
    return gray_fold(img, se, 255, [](int a, int b) { return std::min(a, b); });
}

GrayImage gray_dilate(const GrayImage& img, const StructuringElement& se) {
    return gray_fold(img, se, 0, [](int a, int b) { return std::max(a, b); });
}

GrayImage gray_open(const GrayImage& img, const StructuringElement& se) {
    return gray_dilate(gray_erode(img, se), se);
}

GrayImage morph_gradient(const GrayImage& img, const StructuringElement& se) {
    const GrayImage lo = gray_erode(img, se);
    GrayImage out = gray_dilate(img, se);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        out.pixels[i] = static_cast<std::uint8_t>(out.pixels[i] - lo.pixels[i]);
    }
    return out;
}

}  // namespace fruitgrade::img
