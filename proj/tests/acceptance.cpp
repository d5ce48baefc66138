// Release gate: one pass/fail line per pinned behavior contract, covering
// thresholding, moments, texture, shape, selection, training, the evaluation
// protocol and the synthetic end-to-end pipeline. Exits nonzero on any
// failure.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fruitgrade/csvio.hpp"
#include "fruitgrade/features.hpp"
#include "fruitgrade/imageio.hpp"
#include "fruitgrade/imgops.hpp"
#include "fruitgrade/learn.hpp"
#include "fruitgrade/pipeline.hpp"
#include "fruitgrade/rng.hpp"
#include "fruitgrade/select.hpp"
#include "fruitgrade/synth.hpp"

using namespace fruitgrade;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const std::string& detail) { throw std::runtime_error(detail); }

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c);
    return buf;
}

void require(bool ok, const std::string& detail) {
    if (!ok) fail(detail);
}

double rel_gap(double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

// ---- thresholding against an exhaustive argmax ----

int exhaustive_otsu(const img::GrayImage& g) {
    std::array<long long, 256> hist{};
    for (std::uint8_t v : g.pixels) ++hist[v];
    const long long total = static_cast<long long>(g.pixels.size());
    double grand = 0.0;
    for (int v = 0; v < 256; ++v) grand += static_cast<double>(v) * static_cast<double>(hist[static_cast<std::size_t>(v)]);

    std::vector<double> score(256, -1.0);
    long long n0 = 0;
    double sum0 = 0.0;
    double best = -1.0;
    for (int t = 0; t < 256; ++t) {
        n0 += hist[static_cast<std::size_t>(t)];
        sum0 += static_cast<double>(t) * static_cast<double>(hist[static_cast<std::size_t>(t)]);
        const long long n1 = total - n0;
        if (n0 == 0 || n1 == 0) continue;
        const double m0 = sum0 / static_cast<double>(n0);
        const double m1 = (grand - sum0) / static_cast<double>(n1);
        score[static_cast<std::size_t>(t)] =
            static_cast<double>(n0) * static_cast<double>(n1) * (m0 - m1) * (m0 - m1);
        best = std::max(best, score[static_cast<std::size_t>(t)]);
    }
    for (int t = 0; t < 256; ++t)
        if (score[static_cast<std::size_t>(t)] >= best - 1e-9 * std::max(1.0, best)) return t;
    return -1;
}

std::string check_threshold_argmax() {
    const auto start = std::chrono::steady_clock::now();
    for (int trial = 0; trial < 200; ++trial) {
        Rng rng(9000 + static_cast<std::uint64_t>(trial));
        img::GrayImage g(32, 32);
        for (auto& v : g.pixels) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
        const int got = img::otsu_threshold(g);
        const int want = exhaustive_otsu(g);
        if (got != want) fail(fmt("trial %.0f: got %.0f, exhaustive argmax %.0f", trial, got, want));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    require(secs < 5.0, fmt("200 images took %.2f s, budget 5 s", secs));
    return fmt("200/200 argmax matches in %.2f s", secs);
}

// ---- distribution moments against direct summation ----

std::string check_moment_oracle() {
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        Rng rng(4200 + static_cast<std::uint64_t>(trial));
        const int n = static_cast<int>(rng.uniform_int(50, 1500));
        std::vector<double> samples(static_cast<std::size_t>(n));
        for (auto& v : samples)
            v = (trial % 2 == 0) ? rng.uniform(-50.0, 50.0) : rng.gaussian(5.0, 12.0);

        double mean = 0.0;
        for (double v : samples) mean += v;
        mean /= n;
        double m2 = 0.0, m3 = 0.0, m4 = 0.0;
        for (double v : samples) {
            const double d = v - mean;
            m2 += d * d;
            m3 += d * d * d;
            m4 += d * d * d * d;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        const double sd = std::sqrt(m2);
        const double want[4] = {mean, m2, m3 / (sd * sd * sd), m4 / (m2 * m2) - 3.0};

        const feat::ChannelStats got = feat::channel_stats(samples);
        const double have[4] = {got.mean, got.variance, got.skewness, got.kurtosis};
        for (int i = 0; i < 4; ++i) {
            worst = std::max(worst, rel_gap(have[i], want[i]));
            if (rel_gap(have[i], want[i]) > 1e-9)
                fail(fmt("trial %.0f moment %.0f off by %.3g relative", trial, i,
                         rel_gap(have[i], want[i])));
        }
    }
    return fmt("100 sample sets, worst relative gap %.2g", worst);
}

// ---- co-occurrence invariants ----

std::string check_cooccurrence() {
    Rng rng(77);
    img::GrayImage noisy(16, 16);
    for (auto& v : noisy.pixels) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    img::BinaryMask patchy(16, 16);
    for (auto& b : patchy.bits) b = rng.uniform() < 0.7 ? 1 : 0;
    const feat::GlcmMatrix random_glcm =
        feat::compute_glcm(noisy, patchy, 8, {{1, 0}, {1, 1}, {0, 1}, {-1, 1}});
    double sum = 0.0;
    for (double p : random_glcm.p) sum += p;
    require(std::abs(sum - 1.0) <= 1e-12, fmt("probability sum %.15f", sum));

    const img::GrayImage flat(10, 10, 77);
    const img::BinaryMask full(10, 10, true);
    const feat::TextureFeatures plain =
        feat::texture_features(feat::compute_glcm(flat, full, 8, {{1, 0}, {1, 1}, {0, 1}, {-1, 1}}));
    require(plain.contrast == 0.0 && plain.energy == 1.0 && plain.homogeneity == 1.0,
            fmt("constant region gave contrast %.3g energy %.3g homogeneity %.3g", plain.contrast,
                plain.energy, plain.homogeneity));

    img::GrayImage board(8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) board.set(x, y, ((x + y) % 2 == 0) ? 0 : 255);
    const feat::TextureFeatures alt =
        feat::texture_features(feat::compute_glcm(board, img::BinaryMask(8, 8, true), 8, {{1, 0}}));
    require(alt.contrast == 49.0 && alt.energy == 0.5 && alt.homogeneity == 0.125,
            fmt("checkerboard gave contrast %.6f energy %.6f homogeneity %.6f", alt.contrast,
                alt.energy, alt.homogeneity));
    return "sum, constant and checkerboard invariants hold";
}

// ---- shape descriptors on rasterized analytic regions ----

img::BinaryMask ellipse_mask(int w, int h, double cx, double cy, double a, double b) {
    img::BinaryMask mask(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double dx = (x - cx) / a;
            const double dy = (y - cy) / b;
            if (dx * dx + dy * dy <= 1.0) mask.set(x, y, true);
        }
    return mask;
}

std::string check_shape_oracles() {
    const auto disk = ellipse_mask(120, 120, 60.0, 60.0, 50.0, 50.0);
    const feat::ShapeFeatures round = feat::shape_features(feat::region_geometry(disk), 1.0);
    const double ideal = 3.14159265358979323846 * 2500.0;
    require(std::abs(round.area_mm2 - ideal) <= 0.02 * ideal,
            fmt("disk area %.1f, ideal %.1f", round.area_mm2, ideal));
    require(round.eccentricity < 0.1, fmt("disk eccentricity %.4f", round.eccentricity));
    require(round.solidity > 0.98, fmt("disk solidity %.4f", round.solidity));

    const auto oval = ellipse_mask(180, 100, 90.0, 50.0, 80.0, 40.0);
    const feat::ShapeFeatures stretched = feat::shape_features(feat::region_geometry(oval), 1.0);
    require(std::abs(stretched.eccentricity - 0.866) <= 0.02,
            fmt("2:1 ellipse eccentricity %.4f", stretched.eccentricity));
    return fmt("disk area %.1f px^2, 2:1 eccentricity %.4f", round.area_mm2, stretched.eccentricity);
}

// ---- principal components ----

std::string check_pca() {
    Rng rng(321);
    sel::Matrix data;
    for (int i = 0; i < 60; ++i) {
        std::vector<double> row(8);
        for (auto& v : row) v = rng.uniform(-2.0, 2.0);
        data.push_back(std::move(row));
    }
    const sel::PcaModel model = sel::pca_fit(data, 1.0);
    require(model.output_dim() == 8, fmt("kept %.0f of 8 components", model.output_dim()));

    double gram_dev = 0.0;
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            double dot = 0.0;
            for (int t = 0; t < 8; ++t)
                dot += model.components[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)] *
                       model.components[static_cast<std::size_t>(j)][static_cast<std::size_t>(t)];
            gram_dev = std::max(gram_dev, std::abs(dot - (i == j ? 1.0 : 0.0)));
        }
    require(gram_dev <= 1e-8, fmt("component gram deviates from identity by %.3g", gram_dev));

    sel::Matrix proj;
    for (const auto& row : data) proj.push_back(sel::pca_project(model, row));
    std::vector<double> mean(8, 0.0);
    for (const auto& row : proj)
        for (int j = 0; j < 8; ++j) mean[static_cast<std::size_t>(j)] += row[static_cast<std::size_t>(j)];
    for (auto& m : mean) m /= static_cast<double>(proj.size());
    double cov_dev = 0.0;
    for (int a = 0; a < 8; ++a)
        for (int b = a + 1; b < 8; ++b) {
            double cov = 0.0;
            for (const auto& row : proj)
                cov += (row[static_cast<std::size_t>(a)] - mean[static_cast<std::size_t>(a)]) *
                       (row[static_cast<std::size_t>(b)] - mean[static_cast<std::size_t>(b)]);
            cov_dev = std::max(cov_dev, std::abs(cov / static_cast<double>(proj.size() - 1)));
        }
    require(cov_dev <= 1e-8, fmt("projected covariance off-diagonal %.3g", cov_dev));

    double recon_dev = 0.0;
    for (const auto& row : data) {
        const auto back = sel::pca_reconstruct(model, sel::pca_project(model, row));
        for (std::size_t j = 0; j < row.size(); ++j)
            recon_dev = std::max(recon_dev, std::abs(back[j] - row[j]));
    }
    require(recon_dev <= 1e-8, fmt("full-rank reconstruction error %.3g", recon_dev));
    return fmt("gram %.2g cov %.2g reconstruction %.2g", gram_dev, cov_dev, recon_dev);
}

// ---- correlation-driven subset search ----

std::string check_subset_search() {
    const int informative = 20, duplicate = 40;
    int good = 0;
    for (int seed = 0; seed < 100; ++seed) {
        Rng rng(1000 + static_cast<std::uint64_t>(seed));
        const int n = 500;
        sel::Matrix data(n, std::vector<double>(59, 0.0));
        std::vector<int> labels(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            labels[static_cast<std::size_t>(i)] = i % 3;
            for (int j = 0; j < 59; ++j)
                data[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = rng.uniform(-1.0, 1.0);
            const double signal = static_cast<double>(i % 3) + 0.3 * rng.gaussian();
            data[static_cast<std::size_t>(i)][informative] = signal;
            data[static_cast<std::size_t>(i)][duplicate] = signal;
        }
        const sel::FeatureSubset subset = sel::cfs_search(data, labels, 5);
        const bool has_a = std::count(subset.indices.begin(), subset.indices.end(), informative) > 0;
        const bool has_b = std::count(subset.indices.begin(), subset.indices.end(), duplicate) > 0;
        if ((has_a || has_b) && !(has_a && has_b)) ++good;
    }
    require(good >= 95, fmt("informative-and-not-both held on %.0f/100 seeds, need 95", good));
    return fmt("informative picked, duplicate excluded on %.0f/100 seeds", good);
}

// ---- network training ----

std::string check_network_training() {
    // Analytic Jacobian against central differences.
    Rng rng(606);
    ml::MlpModel shape;
    shape.d_in = 3;
    shape.hidden = 4;
    shape.n_out = 2;
    Eigen::VectorXd w(shape.param_count());
    for (int i = 0; i < w.size(); ++i) w(i) = rng.uniform(-1.0, 1.0);
    sel::Matrix x;
    std::vector<int> y;
    for (int i = 0; i < 6; ++i) {
        x.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
        y.push_back(static_cast<int>(rng.uniform_int(0, 1)));
    }
    Eigen::VectorXd e;
    Eigen::MatrixXd jac;
    ml::mlp_residual(shape, w, x, y, e, &jac);
    double grad_dev = 0.0;
    const double step = 1e-5;
    for (int j = 0; j < w.size(); ++j) {
        Eigen::VectorXd wp = w, wm = w;
        wp(j) += step;
        wm(j) -= step;
        Eigen::VectorXd ep, em;
        ml::mlp_residual(shape, wp, x, y, ep, nullptr);
        ml::mlp_residual(shape, wm, x, y, em, nullptr);
        for (int r = 0; r < e.size(); ++r)
            grad_dev = std::max(grad_dev, rel_gap((ep(r) - em(r)) / (2.0 * step), jac(r, j)));
    }
    require(grad_dev <= 1e-6, fmt("jacobian off by %.3g relative", grad_dev));

    // One accepted undamped step lands on the linear least-squares solution.
    Eigen::MatrixXd a(20, 4);
    Eigen::VectorXd b(20);
    for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 4; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
        b(i) = rng.uniform(-1.0, 1.0);
    }
    const ml::ResidualFn linear = [&](const Eigen::VectorXd& v, Eigen::VectorXd& res, Eigen::MatrixXd* grad) {
        res = a * v - b;
        if (grad) *grad = a;
    };
    ml::LmOptions opt;
    opt.lambda0 = 0.0;
    const ml::LmOutcome out = ml::lm_minimize(linear, Eigen::VectorXd::Zero(4), opt);
    const Eigen::VectorXd exact = a.colPivHouseholderQr().solve(b);
    double lm_dev = 0.0;
    for (int j = 0; j < 4; ++j) lm_dev = std::max(lm_dev, rel_gap(out.w(j), exact(j)));
    require(out.iterations == 1, fmt("linear solve took %.0f accepted steps", out.iterations));
    require(lm_dev <= 1e-8, fmt("one-step solution off by %.3g relative", lm_dev));

    // XOR across seeds.
    const sel::Matrix xor_x = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    const std::vector<int> xor_y = {0, 1, 1, 0};
    ml::MlpOptions mlp_opt;
    mlp_opt.hidden = 4;
    int solved = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        ml::MlpFitInfo info;
        const ml::MlpModel net = ml::mlp_fit(xor_x, xor_y, {}, {}, 2, mlp_opt, seed, &info);
        bool ok = info.iterations <= 200;
        for (std::size_t i = 0; i < xor_x.size(); ++i)
            ok = ok && ml::mlp_predict(net, xor_x[i]) == xor_y[i];
        if (ok) ++solved;
    }
    require(solved >= 9, fmt("xor solved on %.0f/10 seeds, need 9", solved));
    return fmt("jacobian %.2g, one-step exact, xor %.0f/10", grad_dev, solved);
}

// ---- evaluation protocol ----

std::string check_protocol() {
    ml::Dataset even;
    for (int i = 0; i < 100; ++i) {
        even.x.push_back({static_cast<double>(i)});
        even.y.push_back(i < 34 ? 0 : (i < 67 ? 1 : 2));
    }
    const ml::SplitPlan p100 = ml::split_dataset(even, 7);
    require(p100.train.size() == 70 && p100.validation.size() == 15 && p100.test.size() == 15,
            fmt("100 rows split %.0f/%.0f/%.0f", p100.train.size(), p100.validation.size(),
                p100.test.size()));

    ml::Dataset odd = even;
    odd.x.push_back({100.0});
    odd.y.push_back(0);
    const ml::SplitPlan p101 = ml::split_dataset(odd, 7);
    require(p101.train.size() == 70 && p101.validation.size() == 15 && p101.test.size() == 16,
            fmt("101 rows split %.0f/%.0f/%.0f", p101.train.size(), p101.validation.size(),
                p101.test.size()));

    std::set<int> seen;
    const auto folds = ml::kfold_indices(103, 10, 7);
    std::size_t smallest = 103, largest = 0;
    for (const auto& fold : folds) {
        smallest = std::min(smallest, fold.size());
        largest = std::max(largest, fold.size());
        for (int r : fold) {
            require(r >= 0 && r < 103, "fold index out of range");
            require(seen.insert(r).second, "folds overlap");
        }
    }
    require(seen.size() == 103, fmt("folds cover %.0f of 103 rows", seen.size()));
    require(largest - smallest <= 1, fmt("fold sizes range %.0f..%.0f", smallest, largest));
    return "70/15/15 and 70/15/16 splits exact, 10 folds disjoint and balanced";
}

// ---- synthetic end-to-end ----

std::string check_end_to_end() {
    const auto start = std::chrono::steady_clock::now();
    const synth::SynthSpec spec = synth::default_synth_spec();
    const fs::path dir = fs::temp_directory_path() / "fruitgrade_acceptance_corpus";
    fs::remove_all(dir);
    const auto pairs = synth::generate_corpus(spec, dir.string());
    require(pairs.size() == 150, fmt("corpus has %.0f images, want 150", pairs.size()));

    const cfg::PipelineConfig config;
    sel::Matrix rows;
    std::vector<std::string> raw_labels;
    for (const auto& [file, label] : pairs) {
        const img::RgbImage image = img::load_image((dir / file).string());
        rows.push_back(pipe::extract_from_image(image, config));
        raw_labels.push_back(label);
    }
    std::vector<std::string> classes = raw_labels;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    const std::vector<int> labels = csv::encode_labels(raw_labels, classes);

    auto mean_cv = [&](const std::optional<pipe::TransformArtifact>& transform) {
        const pipe::TrainedModel model =
            pipe::train_model(rows, labels, classes, "tree-medium", transform, config, 1);
        const auto accs = pipe::cv_fold_accuracies(model, rows, labels, 10);
        double sum = 0.0;
        for (double v : accs) sum += v;
        return sum / static_cast<double>(accs.size());
    };
    const double raw_cv = mean_cv(std::nullopt);
    const pipe::TransformArtifact selected = pipe::fit_transform(rows, labels, "cfs", config);
    const double fs_cv = mean_cv(selected);

    fs::remove_all(dir);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    require(fs_cv >= 0.95, fmt("10-fold accuracy %.4f after selection, need 0.95", fs_cv));
    require(fs_cv >= raw_cv - 0.02 + 1e-12,
            fmt("selection dropped accuracy %.4f -> %.4f", raw_cv, fs_cv));
    require(secs < 120.0, fmt("pipeline took %.1f s, budget 120 s", secs));
    return fmt("cv %.4f with selection, %.4f raw, %.1f s", fs_cv, raw_cv, secs);
}

// ---- render-scale invariance ----

std::string check_scale_invariance() {
    const synth::SynthSpec base = synth::default_synth_spec();
    synth::SynthSpec doubled = base;
    doubled.render_scale = 2;
    const cfg::PipelineConfig config;
    const std::vector<int> mm_slots = {0, 1, 2, 3, 4};
    const std::vector<int> ratio_slots = {5, 6, 56, 58};

    double worst_mm = 0.0, worst_ratio = 0.0;
    for (int grade = 0; grade < 3; ++grade) {
        const auto lo = pipe::extract_from_image(synth::render_sample(base, grade, 0), config);
        const auto hi = pipe::extract_from_image(synth::render_sample(doubled, grade, 0), config);
        for (int slot : mm_slots) {
            const double rel = std::abs(hi[static_cast<std::size_t>(slot)] - lo[static_cast<std::size_t>(slot)]) /
                               std::max(1e-12, std::abs(lo[static_cast<std::size_t>(slot)]));
            worst_mm = std::max(worst_mm, rel);
            if (rel >= 0.03)
                fail(fmt("grade %.0f slot %.0f moved %.3f relative at 2x", grade, slot, rel));
        }
        for (int slot : ratio_slots) {
            const double gap = std::abs(hi[static_cast<std::size_t>(slot)] - lo[static_cast<std::size_t>(slot)]);
            worst_ratio = std::max(worst_ratio, gap);
            if (gap >= 0.02)
                fail(fmt("grade %.0f slot %.0f moved %.4f absolute at 2x", grade, slot, gap));
        }
    }
    return fmt("worst mm drift %.4f relative, worst ratio drift %.4f", worst_mm, worst_ratio);
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<std::string()>>> criteria = {
        {"threshold-exhaustive-argmax", check_threshold_argmax},
        {"moment-direct-summation", check_moment_oracle},
        {"cooccurrence-invariants", check_cooccurrence},
        {"shape-analytic-regions", check_shape_oracles},
        {"pca-orthogonality", check_pca},
        {"subset-duplicate-exclusion", check_subset_search},
        {"network-training", check_network_training},
        {"protocol-shapes", check_protocol},
        {"synthetic-end-to-end", check_end_to_end},
        {"render-scale-invariance", check_scale_invariance},
    };

    int failures = 0;
    for (const auto& [name, run] : criteria) {
        std::string detail;
        bool ok = true;
        try {
            detail = run();
        } catch (const std::exception& e) {
            ok = false;
            detail = e.what();
        }
        std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
