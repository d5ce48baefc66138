#include "fruitgrade/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "fruitgrade/errors.hpp"
#include "fruitgrade/imgops.hpp"

namespace fruitgrade::feat {

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n = {"area_mm2",          "perimeter_mm", "major_axis_mm",
                                      "minor_axis_mm",     "equiv_diameter_mm", "solidity",
                                      "eccentricity"};
        const char* channels[] = {"r",       "g",       "b",       "ratio_r", "ratio_g",
                                  "ratio_b", "diff_rg", "diff_gb", "diff_rb"};
        const char* stats[] = {"mean", "variance", "skewness", "kurtosis"};
        for (const char* ch : channels) {
            for (const char* st : stats) {
                n.push_back(std::string(ch) + "_" + st);
            }
        }
        for (const char* m : {"lab_l_mean", "lab_a_mean", "lab_b_mean", "hsv_h_mean",
                              "hsv_s_mean", "hsv_v_mean", "ycbcr_y_mean", "ycbcr_cb_mean",
                              "ycbcr_cr_mean", "glcm_contrast", "glcm_correlation",
                              "glcm_energy", "glcm_homogeneity", "defect_ratio",
                              "wrinkle_count", "wrinkle_ratio"}) {
            n.push_back(m);
        }
        return n;
    }();
    return names;
}

namespace {

/// Moore-neighbor boundary tracing with Jacob's stopping criterion. Clockwise
/// neighbor order in screen coordinates (y grows downward), starting west.
constexpr int kMooreX[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
constexpr int kMooreY[8] = {0, -1, -1, -1, 0, 1, 1, 1};

int moore_index(int dx, int dy) {
    for (int k = 0; k < 8; ++k) {
        if (kMooreX[k] == dx && kMooreY[k] == dy) {
            return k;
        }
    }
    return -1;
}

double trace_perimeter(const img::BinaryMask& mask, int start_x, int start_y) {
    const double kDiag = std::sqrt(2.0);
    auto fg = [&](int x, int y) {
        return x >= 0 && y >= 0 && x < mask.width && y < mask.height &&
               mask.bits[static_cast<std::size_t>(y) * mask.width + x];
    };
    int cx = start_x, cy = start_y;
    int back = 0;  // start pixel's west neighbor is background by raster-order choice
    double perimeter = 0.0;
    long long guard = 8LL * mask.width * mask.height + 8;
    bool first = true;
    while (guard-- > 0) {
        int found = -1, k = 0;
        for (k = 1; k <= 8; ++k) {
            const int idx = (back + k) % 8;
            if (fg(cx + kMooreX[idx], cy + kMooreY[idx])) {
                found = idx;
                break;
            }
        }
        if (found < 0) {
            break;  // isolated pixel
        }
        if (!first && cx == start_x && cy == start_y && back == 0) {
            break;
        }
        first = false;
        const int nx = cx + kMooreX[found];
        const int ny = cy + kMooreY[found];
        perimeter += (kMooreX[found] != 0 && kMooreY[found] != 0) ? kDiag : 1.0;
        const int prev_idx = (back + k - 1) % 8;
        const int bx = cx + kMooreX[prev_idx];
        const int by = cy + kMooreY[prev_idx];
        back = moore_index(bx - nx, by - ny);
        cx = nx;
        cy = ny;
        if (cx == start_x && cy == start_y && back == 0) {
            break;
        }
    }
    return perimeter;
}

long long cross(long long ox, long long oy, long long ax, long long ay, long long bx, long long by) {
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox);
}

/// Andrew's monotone chain; collinear points dropped.
std::vector<std::pair<int, int>> convex_hull(std::vector<std::pair<int, int>> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const std::size_t n = pts.size();
    if (n <= 2) {
        return pts;
    }
    std::vector<std::pair<int, int>> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2].first, hull[k - 2].second, hull[k - 1].first,
                               hull[k - 1].second, pts[i].first, pts[i].second) <= 0) {
            --k;
        }
        hull[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2].first, hull[k - 2].second, hull[k - 1].first,
                                   hull[k - 1].second, pts[i].first, pts[i].second) <= 0) {
            --k;
        }
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

}  // namespace

RegionGeometry region_geometry(const img::BinaryMask& mask) {
    RegionGeometry geom;
    double sum_x = 0.0, sum_y = 0.0;
    int first_x = -1, first_y = -1;
    std::vector<std::pair<int, int>> points;
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.bits[static_cast<std::size_t>(y) * mask.width + x]) {
                continue;
            }
            if (first_x < 0) {
                first_x = x;
                first_y = y;
            }
            ++geom.area_px;
            sum_x += x;
            sum_y += y;
            points.emplace_back(x, y);
        }
    }
    if (geom.area_px == 0) {
        throw EmptyMask();
    }
    geom.centroid_x = sum_x / geom.area_px;
    geom.centroid_y = sum_y / geom.area_px;
    for (const auto& [x, y] : points) {
        const double dx = x - geom.centroid_x;
        const double dy = y - geom.centroid_y;
        geom.mu20 += dx * dx;
        geom.mu02 += dy * dy;
        geom.mu11 += dx * dy;
    }
    geom.perimeter_px = geom.area_px == 1 ? 0.0 : trace_perimeter(mask, first_x, first_y);

    const auto hull = convex_hull(std::move(points));
    double hull_area2 = 0.0, hull_perim = 0.0;
    const std::size_t hn = hull.size();
    for (std::size_t i = 0; i < hn && hn >= 2; ++i) {
        const auto& a = hull[i];
        const auto& b = hull[(i + 1) % hn];
        hull_area2 += static_cast<double>(a.first) * b.second - static_cast<double>(b.first) * a.second;
        const double ex = b.first - a.first;
        const double ey = b.second - a.second;
        hull_perim += std::sqrt(ex * ex + ey * ey);
    }
    geom.convex_area_px = std::abs(hull_area2) / 2.0 + hull_perim / 2.0 + 1.0;
    geom.convex_area_px = std::max(geom.convex_area_px, static_cast<double>(geom.area_px));
    return geom;
}

ShapeFeatures shape_features(const RegionGeometry& geom, double mm_per_pixel) {
    if (geom.area_px < 4) {
        throw DegenerateRegion();
    }
    const double s = mm_per_pixel;
    const double a = static_cast<double>(geom.area_px);
    const double m20 = geom.mu20 / a;
    const double m02 = geom.mu02 / a;
    const double m11 = geom.mu11 / a;
    const double common = std::sqrt((m20 - m02) * (m20 - m02) + 4.0 * m11 * m11);
    const double minor_sq = m20 + m02 - common;
    if (minor_sq <= 1e-12) {
        throw DegenerateRegion();
    }
    const double major = 2.0 * std::sqrt(2.0) * std::sqrt(m20 + m02 + common);
    const double minor = 2.0 * std::sqrt(2.0) * std::sqrt(minor_sq);

    ShapeFeatures f{};
    f.area_mm2 = a * s * s;
    f.perimeter_mm = geom.perimeter_px * s;
    f.major_axis_mm = major * s;
    f.minor_axis_mm = minor * s;
    f.equiv_diameter_mm = std::sqrt(4.0 * a / M_PI) * s;
    f.solidity = a / geom.convex_area_px;
    f.eccentricity = std::sqrt(std::max(0.0, 1.0 - (minor / major) * (minor / major)));
    return f;
}

ChannelStats channel_stats(const std::vector<double>& samples) {
    if (samples.empty()) {
        throw EmptySamples();
    }
    const double n = static_cast<double>(samples.size());
    const double shift = samples.front();
    double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
    for (double x : samples) {
        const double d = x - shift;
        const double d2 = d * d;
        s1 += d;
        s2 += d2;
        s3 += d2 * d;
        s4 += d2 * d2;
    }
    const double delta = s1 / n;
    const double m2 = s2 - n * delta * delta;
    const double m3 = s3 - 3.0 * delta * s2 + 2.0 * n * delta * delta * delta;
    const double m4 = s4 - 4.0 * delta * s3 + 6.0 * delta * delta * s2 -
                      3.0 * n * delta * delta * delta * delta;

    ChannelStats st;
    st.mean = shift + delta;
    st.variance = std::max(0.0, m2 / n);
    const double sigma = std::sqrt(st.variance);
    if (sigma > 0.0) {
        st.skewness = m3 / n / (sigma * sigma * sigma);
        st.kurtosis = m4 / n / (st.variance * st.variance) - 3.0;
    }
    return st;
}

std::vector<double> color_features(const seg::FruitView& view) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < view.mask.bits.size(); ++i) {
        if (view.mask.bits[i]) {
            idx.push_back(i);
        }
    }
    if (idx.empty()) {
        throw EmptyMask();
    }

    std::vector<double> out;
    out.reserve(45);
    std::vector<double> samples(idx.size());
    for (int ch = 0; ch < 9; ++ch) {
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const double r = view.crop.pixels[3 * idx[k]];
            const double g = view.crop.pixels[3 * idx[k] + 1];
            const double b = view.crop.pixels[3 * idx[k] + 2];
            const double sum = r + g + b;
            double v = 0.0;
            switch (ch) {
                case 0: v = r; break;
                case 1: v = g; break;
                case 2: v = b; break;
                case 3: v = sum > 0.0 ? r / sum : 0.0; break;
                case 4: v = sum > 0.0 ? g / sum : 0.0; break;
                case 5: v = sum > 0.0 ? b / sum : 0.0; break;
                case 6: v = r - g; break;
                case 7: v = g - b; break;
                case 8: v = r - b; break;
            }
            samples[k] = v;
        }
        const ChannelStats st = channel_stats(samples);
        out.push_back(st.mean);
        out.push_back(st.variance);
        out.push_back(st.skewness);
        out.push_back(st.kurtosis);
    }

    const img::FloatPlanes lab = img::convert_color(view.crop, img::ColorSpace::lab);
    for (int c = 0; c < 3; ++c) {
        double sum = 0.0;
        for (std::size_t i : idx) {
            sum += lab.ch[c][i];
        }
        out.push_back(sum / static_cast<double>(idx.size()));
    }

    const img::FloatPlanes hsv = img::convert_color(view.crop, img::ColorSpace::hsv);
    double hue_cos = 0.0, hue_sin = 0.0;
    for (std::size_t i : idx) {
        const double rad = hsv.ch[0][i] * M_PI / 180.0;
        hue_cos += std::cos(rad);
        hue_sin += std::sin(rad);
    }
    double hue_mean = std::atan2(hue_sin, hue_cos) * 180.0 / M_PI;
    if (hue_mean < 0.0) {
        hue_mean += 360.0;
    }
    if (hue_mean >= 360.0) {
        hue_mean -= 360.0;
    }
    out.push_back(hue_mean);
    for (int c = 1; c < 3; ++c) {
        double sum = 0.0;
        for (std::size_t i : idx) {
            sum += hsv.ch[c][i];
        }
        out.push_back(sum / static_cast<double>(idx.size()));
    }

    const img::FloatPlanes ycc = img::convert_color(view.crop, img::ColorSpace::ycbcr);
    for (int c = 0; c < 3; ++c) {
        double sum = 0.0;
        for (std::size_t i : idx) {
            sum += ycc.ch[c][i];
        }
        out.push_back(sum / static_cast<double>(idx.size()));
    }
    return out;
}

GlcmMatrix compute_glcm(const img::GrayImage& gray, const img::BinaryMask& mask, int levels,
                        const std::vector<std::pair<int, int>>& offsets) {
    if (levels < 2) {
        throw Error("compute_glcm: levels must be >= 2");
    }
    for (const auto& [dx, dy] : offsets) {
        if (dx == 0 && dy == 0) {
            throw Error("compute_glcm: zero offset");
        }
    }
    if (mask.width != gray.width || mask.height != gray.height) {
        throw Error("compute_glcm: mask dimensions differ from image");
    }
    GlcmMatrix glcm;
    glcm.levels = levels;
    glcm.p.assign(static_cast<std::size_t>(levels) * levels, 0.0);
    auto bin = [&](std::uint8_t v) { return static_cast<int>(v) * levels / 256; };

    double total = 0.0;
    for (const auto& [dx, dy] : offsets) {
        for (int y = 0; y < gray.height; ++y) {
            for (int x = 0; x < gray.width; ++x) {
                const int qx = x + dx;
                const int qy = y + dy;
                if (qx < 0 || qy < 0 || qx >= gray.width || qy >= gray.height) {
                    continue;
                }
                const std::size_t p = static_cast<std::size_t>(y) * gray.width + x;
                const std::size_t q = static_cast<std::size_t>(qy) * gray.width + qx;
                if (!mask.bits[p] || !mask.bits[q]) {
                    continue;
                }
                const int bi = bin(gray.pixels[p]);
                const int bj = bin(gray.pixels[q]);
                glcm.p[static_cast<std::size_t>(bi) * levels + bj] += 1.0;
                glcm.p[static_cast<std::size_t>(bj) * levels + bi] += 1.0;
                total += 2.0;
            }
        }
    }
    if (total == 0.0) {
        throw NoPairs();
    }
    for (double& v : glcm.p) {
        v /= total;
    }
    return glcm;
}

TextureFeatures texture_features(const GlcmMatrix& glcm) {
    const int L = glcm.levels;
    double mu_i = 0.0, mu_j = 0.0;
    for (int i = 0; i < L; ++i) {
        for (int j = 0; j < L; ++j) {
            mu_i += i * glcm.at(i, j);
            mu_j += j * glcm.at(i, j);
        }
    }
    double var_i = 0.0, var_j = 0.0;
    TextureFeatures f;
    double cov = 0.0;
    for (int i = 0; i < L; ++i) {
        for (int j = 0; j < L; ++j) {
            const double p = glcm.at(i, j);
            const double d = i - j;
            f.contrast += d * d * p;
            f.energy += p * p;
            f.homogeneity += p / (1.0 + std::abs(d));
            var_i += (i - mu_i) * (i - mu_i) * p;
            var_j += (j - mu_j) * (j - mu_j) * p;
            cov += (i - mu_i) * (j - mu_j) * p;
        }
    }
    const double denom = std::sqrt(var_i) * std::sqrt(var_j);
    f.correlation = denom > 0.0 ? cov / denom : 0.0;
    return f;
}

double defect_feature(const seg::FruitView& view, double v_defect) {
    const img::FloatPlanes hsv = img::convert_color(view.crop, img::ColorSpace::hsv);
    long long defect = 0, area = 0;
    for (std::size_t i = 0; i < view.mask.bits.size(); ++i) {
        if (view.mask.bits[i]) {
            ++area;
            defect += hsv.ch[2][i] < v_defect;
        }
    }
    if (area == 0) {
        throw EmptyMask();
    }
    return static_cast<double>(defect) / static_cast<double>(area);
}

std::pair<int, double> wrinkle_features(const seg::FruitView& view, int h, int min_basin_px) {
    const img::BinaryMask& mask = view.mask;
    const long long area_px = mask.count();
    if (area_px == 0) {
        throw EmptyMask();
    }

    const img::GrayImage opened = img::gray_open(view.gray, img::StructuringElement::disk(2));
    int dark_level = 0;
    try {
        dark_level = img::otsu_threshold(opened, &mask);
    } catch (const DegenerateHistogram&) {
        return {0, 0.0};  // uniform surface: nothing to count
    }

    // The gradient window has fixed physical support: a groove wall spread over
    // more pixels at a finer resolution would otherwise show a shallower local
    // relief and slip under the h-minima depth. Radius is clamped to keep the
    // structuring element small on pathological calibrations.
    constexpr double kGradientSupportMm = 0.25;
    const int grad_r = std::clamp(
        static_cast<int>(std::lround(kGradientSupportMm / view.mm_per_pixel)), 1, 8);
    img::GrayImage grad = img::morph_gradient(opened, img::StructuringElement::disk(grad_r));
    bool has_exterior = false;
    for (std::size_t i = 0; i < mask.bits.size(); ++i) {
        if (!mask.bits[i]) {
            grad.pixels[i] = 255;
            has_exterior = true;
        }
    }
    const img::GrayImage filt = img::h_minima(grad, h);

    img::BinaryMask minima = img::regional_minima(filt);
    for (std::size_t i = 0; i < minima.bits.size(); ++i) {
        minima.bits[i] = minima.bits[i] && mask.bits[i];
    }
    const img::Components seeds = img::connected_components(minima, 8);
    if (seeds.count() == 0) {
        return {0, 0.0};
    }

    const int base = has_exterior ? 1 : 0;
    img::LabelMap markers(mask.width, mask.height);
    for (std::size_t i = 0; i < mask.bits.size(); ++i) {
        if (!mask.bits[i]) {
            markers.labels[i] = 1;
        } else if (seeds.labels.labels[i] > 0) {
            markers.labels[i] = seeds.labels.labels[i] + base;
        }
    }
    const img::LabelMap basins = img::watershed(filt, markers);

    const int nb = seeds.count();
    std::vector<long long> basin_area(nb, 0);
    std::vector<std::uint8_t> inside(nb, 1);
    for (std::size_t i = 0; i < mask.bits.size(); ++i) {
        const int label = basins.labels[i] - base;
        if (label >= 1) {
            ++basin_area[label - 1];
            if (!mask.bits[i]) {
                inside[label - 1] = 0;
            }
        }
    }
    std::vector<int> marker_min(nb, 256);
    for (std::size_t i = 0; i < minima.bits.size(); ++i) {
        if (minima.bits[i]) {
            const int s = seeds.labels.labels[i] - 1;
            marker_min[s] = std::min(marker_min[s], static_cast<int>(opened.pixels[i]));
        }
    }

    int count = 0;
    long long total = 0;
    for (int i = 0; i < nb; ++i) {
        if (inside[i] && basin_area[i] >= min_basin_px && marker_min[i] < dark_level) {
            ++count;
            total += basin_area[i];
        }
    }
    return {count, static_cast<double>(total) / static_cast<double>(area_px)};
}

std::vector<double> extract_all(const seg::FruitView& view, const ExtractionConfig& cfg) {
    std::vector<double> out;
    out.reserve(kFeatureCount);

    const RegionGeometry geom = region_geometry(view.mask);
    const ShapeFeatures shape = shape_features(geom, view.mm_per_pixel);
    out.insert(out.end(), {shape.area_mm2, shape.perimeter_mm, shape.major_axis_mm,
                           shape.minor_axis_mm, shape.equiv_diameter_mm, shape.solidity,
                           shape.eccentricity});

    const std::vector<double> color = color_features(view);
    out.insert(out.end(), color.begin(), color.end());

    const GlcmMatrix glcm = compute_glcm(view.gray, view.mask, cfg.glcm_levels, cfg.glcm_offsets);
    const TextureFeatures tex = texture_features(glcm);
    out.insert(out.end(), {tex.contrast, tex.correlation, tex.energy, tex.homogeneity});

    out.push_back(defect_feature(view, cfg.v_defect));
    const auto [wrinkles, wrinkle_ratio] =
        wrinkle_features(view, cfg.wrinkle_h, cfg.wrinkle_min_basin_px);
    out.push_back(wrinkles);
    out.push_back(wrinkle_ratio);

    for (double v : out) {
        if (!std::isfinite(v)) {
            throw Error("extract_all: non-finite feature value");
        }
    }
    if (static_cast<int>(out.size()) != kFeatureCount) {
        throw Error("extract_all: slot count mismatch");
    }
    return out;
}

}  // namespace fruitgrade::feat
