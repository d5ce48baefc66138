#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fruitgrade/errors.hpp"
#include "fruitgrade/rng.hpp"
#include "fruitgrade/select.hpp"

using namespace fruitgrade;
using sel::Matrix;

namespace {

Matrix random_matrix(Rng& rng, int n, int d, double lo = -3.0, double hi = 3.0) {
    Matrix m(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(d)));
    for (auto& row : m)
        for (auto& v : row) v = rng.uniform(lo, hi);
    return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

TEST_CASE("standardizer conventions") {
    Rng rng(12);
    auto data = random_matrix(rng, 60, 4);
    for (auto& row : data) row[2] = 5.0;  // constant column

    const auto sc = sel::Standardizer::fit(data);
    const auto z = sc.apply(data);

    for (int j = 0; j < 4; ++j) {
        double mean = 0;
        for (const auto& row : z) mean += row[static_cast<std::size_t>(j)];
        mean /= static_cast<double>(z.size());
        double var = 0;
        for (const auto& row : z) {
            const double d = row[static_cast<std::size_t>(j)] - mean;
            var += d * d;
        }
        var /= static_cast<double>(z.size());
        CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
        if (j == 2) {
            CHECK(var == doctest::Approx(0.0));
        } else {
            CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
    for (const auto& row : z) CHECK(row[2] == doctest::Approx(0.0));

    for (const auto& row : data) {
        const auto back = sc.invert(sc.apply(row));
        for (std::size_t j = 0; j < row.size(); ++j)
            CHECK(back[j] == doctest::Approx(row[j]).epsilon(1e-9));
    }

    CHECK_THROWS_AS(sel::Standardizer::fit(Matrix{{1.0, 2.0}}), TooFewRows);
}

TEST_CASE("pca on rank-1 data finds the line") {
    Rng rng(77);
    const std::vector<double> dir = {0.6, -0.8, 0.0};
    Matrix data;
    for (int i = 0; i < 50; ++i) {
        const double t = rng.uniform(-4.0, 4.0);
        data.push_back({t * dir[0], t * dir[1], t * dir[2]});
    }
    const auto model = sel::pca_fit(data, 0.95);
    CHECK(model.output_dim() == 1);
    CHECK(std::abs(dot(model.components[0], dir)) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(model.explained_fraction == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("pca on an isotropic cloud keeps both axes") {
    Rng rng(88);
    Matrix data;
    for (int i = 0; i < 4000; ++i) data.push_back({rng.gaussian(), rng.gaussian()});
    const auto model = sel::pca_fit(data, 1.0);
    REQUIRE(model.output_dim() == 2);
    CHECK(model.eigenvalues[0] / model.eigenvalues[1] < 1.10);
}

TEST_CASE("pca component basis is orthonormal and decorrelates the data") {
    Rng rng(99);
    const auto data = random_matrix(rng, 80, 6);
    const auto model = sel::pca_fit(data, 1.0);
    const int k = model.output_dim();

    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            const double g = dot(model.components[static_cast<std::size_t>(i)],
                                 model.components[static_cast<std::size_t>(j)]);
            CHECK(g == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-8));
        }

    Matrix proj;
    for (const auto& row : data) proj.push_back(sel::pca_project(model, row));
    std::vector<double> mean(static_cast<std::size_t>(k), 0.0);
    for (const auto& row : proj)
        for (int j = 0; j < k; ++j) mean[static_cast<std::size_t>(j)] += row[static_cast<std::size_t>(j)];
    for (auto& m : mean) m /= static_cast<double>(proj.size());
    for (int a = 0; a < k; ++a)
        for (int b = a + 1; b < k; ++b) {
            double cov = 0;
            for (const auto& row : proj)
                cov += (row[static_cast<std::size_t>(a)] - mean[static_cast<std::size_t>(a)]) *
                       (row[static_cast<std::size_t>(b)] - mean[static_cast<std::size_t>(b)]);
            cov /= static_cast<double>(proj.size() - 1);
            CHECK(std::abs(cov) < 1e-8);
        }

    CHECK_THROWS_AS(sel::pca_fit(data, 0.0), ConfigError);
    CHECK_THROWS_AS(sel::pca_fit(data, 1.5), ConfigError);
    CHECK_THROWS_AS(sel::pca_fit(Matrix{{1.0}}, 0.9), TooFewRows);
}

TEST_CASE("pca projection and reconstruction") {
    Rng rng(123);
    const auto data = random_matrix(rng, 40, 5);
    const auto model = sel::pca_fit(data, 1.0);

    const auto zero = sel::pca_project(model, model.mean);
    for (double v : zero) CHECK(v == doctest::Approx(0.0).epsilon(1e-10));

    for (const auto& row : data) {
        const auto back = sel::pca_reconstruct(model, sel::pca_project(model, row));
        for (std::size_t j = 0; j < row.size(); ++j)
            CHECK(std::abs(back[j] - row[j]) < 1e-8);
    }

    // With a lossy cut the projection is still a contraction.
    Matrix skew;
    for (int i = 0; i < 60; ++i) {
        const double t = rng.gaussian() * 3.0;
        skew.push_back({t + rng.gaussian() * 0.1, -t + rng.gaussian() * 0.1,
                        rng.gaussian() * 0.1, rng.gaussian() * 0.1});
    }
    const auto lossy = sel::pca_fit(skew, 0.6);
    CHECK(lossy.output_dim() < 4);
    for (const auto& row : skew) {
        std::vector<double> centered(row.size());
        for (std::size_t j = 0; j < row.size(); ++j) centered[j] = row[j] - lossy.mean[j];
        const auto y = sel::pca_project(lossy, row);
        CHECK(std::sqrt(dot(y, y)) <= std::sqrt(dot(centered, centered)) + 1e-9);
    }
}

TEST_CASE("cfs merit arithmetic") {
    const int n = 120;
    Matrix data(n, std::vector<double>(3, 0.0));
    std::vector<int> labels(n);
    Rng rng(55);
    for (int i = 0; i < n; ++i) {
        labels[static_cast<std::size_t>(i)] = i % 3;
        data[static_cast<std::size_t>(i)][0] = static_cast<double>(i % 3);
        data[static_cast<std::size_t>(i)][1] = static_cast<double>(i % 3);
        data[static_cast<std::size_t>(i)][2] = rng.uniform(-1.0, 1.0);
    }

    CHECK(sel::cfs_merit({0}, data, labels) == doctest::Approx(1.0));
    CHECK(sel::cfs_merit({0, 1}, data, labels) == doctest::Approx(1.0));

    // Affine rescaling never changes a merit built from correlations.
    auto scaled = data;
    for (auto& row : scaled) row[0] = row[0] * -7.5 + 2.0;
    CHECK(sel::cfs_merit({0}, scaled, labels) ==
          doctest::Approx(sel::cfs_merit({0}, data, labels)).epsilon(1e-12));
}

TEST_CASE("cfs merit of pure noise is small") {
    Rng rng(661);
    const int n = 1000;
    Matrix data(n, std::vector<double>(1, 0.0));
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        labels[static_cast<std::size_t>(i)] = i % 2;
        data[static_cast<std::size_t>(i)][0] = rng.uniform(-1.0, 1.0);
    }
    CHECK(sel::cfs_merit({0}, data, labels) < 0.1);
}

TEST_CASE("cfs search keeps the informative feature and drops its duplicate") {
    Rng rng(910);
    const int n = 240, d = 20, informative = 7, duplicate = 13;
    Matrix data(n, std::vector<double>(d, 0.0));
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        labels[static_cast<std::size_t>(i)] = i % 3;
        for (int j = 0; j < d; ++j)
            data[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                rng.uniform(-1.0, 1.0);
        data[static_cast<std::size_t>(i)][informative] = static_cast<double>(i % 3);
        data[static_cast<std::size_t>(i)][duplicate] = static_cast<double>(i % 3);
    }

    const auto subset = sel::cfs_search(data, labels, 5);
    CHECK(std::is_sorted(subset.indices.begin(), subset.indices.end()));
    const bool has_a =
        std::count(subset.indices.begin(), subset.indices.end(), informative) > 0;
    const bool has_b =
        std::count(subset.indices.begin(), subset.indices.end(), duplicate) > 0;
    CHECK((has_a || has_b));
    CHECK(!(has_a && has_b));
    CHECK(subset.merit == doctest::Approx(sel::cfs_merit(subset.indices, data, labels)));

    // Zero stall budget returns just the single best feature, which is the
    // informative column (the duplicate loses the lowest-index tie).
    const auto single = sel::cfs_search(data, labels, 0);
    REQUIRE(single.indices.size() == 1);
    CHECK(single.indices[0] == informative);
}
