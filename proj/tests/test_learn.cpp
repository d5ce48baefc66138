#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

#include "fruitgrade/errors.hpp"
#include "fruitgrade/learn.hpp"
#include "fruitgrade/rng.hpp"

using namespace fruitgrade;
using ml::Matrix;

namespace {

ml::Dataset make_blobs(Rng& rng, const Matrix& centers, int per_class, double sd) {
    ml::Dataset data;
    for (std::size_t c = 0; c < centers.size(); ++c)
        for (int i = 0; i < per_class; ++i) {
            std::vector<double> row(centers[c].size());
            for (std::size_t j = 0; j < row.size(); ++j)
                row[j] = centers[c][j] + sd * rng.gaussian();
            data.x.push_back(std::move(row));
            data.y.push_back(static_cast<int>(c));
        }
    return data;
}

bool is_partition(const std::vector<std::vector<int>>& parts, int n) {
    std::vector<int> all;
    for (const auto& p : parts) all.insert(all.end(), p.begin(), p.end());
    if (static_cast<int>(all.size()) != n) return false;
    std::sort(all.begin(), all.end());
    for (int i = 0; i < n; ++i)
        if (all[static_cast<std::size_t>(i)] != i) return false;
    return true;
}

}  // namespace

TEST_CASE("stratified split sizes and determinism") {
    Rng rng(31);
    ml::Dataset data;
    for (int i = 0; i < 100; ++i) {
        data.x.push_back({rng.uniform(0.0, 1.0)});
        data.y.push_back(i < 34 ? 0 : (i < 67 ? 1 : 2));
    }

    const auto plan = ml::split_dataset(data, 5);
    CHECK(plan.train.size() == 70);
    CHECK(plan.validation.size() == 15);
    CHECK(plan.test.size() == 15);
    CHECK(is_partition({plan.train, plan.validation, plan.test}, 100));

    // Per-class train counts stay within one row of the 70% ideal.
    std::vector<int> per_class(3, 0);
    for (int r : plan.train) ++per_class[static_cast<std::size_t>(data.y[static_cast<std::size_t>(r)])];
    const std::vector<double> ideal = {0.7 * 34, 0.7 * 33, 0.7 * 33};
    for (int c = 0; c < 3; ++c)
        CHECK(std::abs(per_class[static_cast<std::size_t>(c)] - ideal[static_cast<std::size_t>(c)]) <= 1.0);

    const auto again = ml::split_dataset(data, 5);
    CHECK(again.train == plan.train);
    CHECK(again.validation == plan.validation);
    CHECK(again.test == plan.test);
    const auto other = ml::split_dataset(data, 6);
    CHECK(other.train != plan.train);

    ml::Dataset odd;
    for (int i = 0; i < 101; ++i) {
        odd.x.push_back({static_cast<double>(i)});
        odd.y.push_back(i % 3);
    }
    const auto p101 = ml::split_dataset(odd, 1);
    CHECK(p101.train.size() == 70);
    CHECK(p101.validation.size() == 15);
    CHECK(p101.test.size() == 16);

    ml::Dataset tiny;
    for (int i = 0; i < 9; ++i) {
        tiny.x.push_back({0.0});
        tiny.y.push_back(i % 2);
    }
    CHECK_THROWS_AS(ml::split_dataset(tiny, 1), TooFewSamples);
}

TEST_CASE("kfold deal") {
    const auto even = ml::kfold_indices(100, 10, 3);
    REQUIRE(even.size() == 10);
    for (const auto& f : even) CHECK(f.size() == 10);
    CHECK(is_partition(even, 100));

    const auto uneven = ml::kfold_indices(103, 10, 3);
    REQUIRE(uneven.size() == 10);
    int elevens = 0;
    for (const auto& f : uneven) {
        CHECK((f.size() == 10 || f.size() == 11));
        if (f.size() == 11) ++elevens;
    }
    CHECK(elevens == 3);
    CHECK(is_partition(uneven, 103));

    CHECK(ml::kfold_indices(100, 10, 3) == even);
    CHECK_THROWS_AS(ml::kfold_indices(5, 10, 3), TooFewSamples);
    CHECK_THROWS_AS(ml::kfold_indices(100, 1, 3), ConfigError);
}

TEST_CASE("tree on a pure node stays a leaf") {
    const Matrix x = {{1.0}, {2.0}, {3.0}, {4.0}};
    const std::vector<int> y = {2, 2, 2, 2};
    const auto model = ml::tree_fit(x, y, 3, 10);
    CHECK(model.nodes.size() == 1);
    CHECK(model.split_count == 0);
    CHECK(model.nodes[0].feature == -1);
    CHECK(ml::tree_predict(model, {99.0}) == 2);
}

TEST_CASE("tree splits separable 1-d data once, midway") {
    const Matrix x = {{1}, {2}, {3}, {4}, {7}, {8}, {9}, {10}};
    const std::vector<int> y = {0, 0, 0, 0, 1, 1, 1, 1};
    const auto model = ml::tree_fit(x, y, 2, 10);
    CHECK(model.split_count == 1);
    REQUIRE(model.nodes.size() == 3);
    CHECK(model.nodes[0].feature == 0);
    CHECK(model.nodes[0].threshold == doctest::Approx(5.5));
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(ml::tree_predict(model, x[i]) == y[i]);
}

namespace {

// Independent re-derivation of the greedy best-first CART growth, kept
// deliberately naive: rescan everything from scratch at every step.
struct OracleNode {
    std::vector<int> rows;
    int feature = -1;
    double threshold = 0.0;
    int left = -1, right = -1;
    std::vector<long long> counts;
    double cand_gain = 0.0;
    int cand_feature = -1;
    double cand_threshold = 0.0;
    bool expanded = false;
};

double oracle_gini_cost(const std::vector<long long>& counts) {
    long long total = 0;
    for (long long v : counts) total += v;
    if (total <= 0) return 0.0;
    double acc = 0.0;
    for (long long v : counts) {
        const double p = static_cast<double>(v) / static_cast<double>(total);
        acc += p * p;
    }
    return static_cast<double>(total) * (1.0 - acc);
}

void oracle_candidate(OracleNode& node, const Matrix& x, const std::vector<int>& y, int n_classes) {
    node.counts.assign(static_cast<std::size_t>(n_classes), 0);
    for (int r : node.rows) ++node.counts[static_cast<std::size_t>(y[static_cast<std::size_t>(r)])];
    node.cand_gain = 0.0;
    node.cand_feature = -1;
    const double parent = oracle_gini_cost(node.counts);
    const int d = static_cast<int>(x.front().size());
    for (int f = 0; f < d; ++f) {
        std::vector<std::pair<double, int>> vals;
        for (int r : node.rows)
            vals.push_back({x[static_cast<std::size_t>(r)][static_cast<std::size_t>(f)], y[static_cast<std::size_t>(r)]});
        std::sort(vals.begin(), vals.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
            if (vals[i].first == vals[i + 1].first) continue;
            const double mid = vals[i].first + (vals[i + 1].first - vals[i].first) / 2.0;
            if (!(vals[i].first < mid)) continue;
            std::vector<long long> lc(static_cast<std::size_t>(n_classes), 0);
            std::vector<long long> rc(static_cast<std::size_t>(n_classes), 0);
            for (const auto& [v, cls] : vals)
                ++(v < mid ? lc : rc)[static_cast<std::size_t>(cls)];
            const double gain = parent - oracle_gini_cost(lc) - oracle_gini_cost(rc);
            if (gain > node.cand_gain + 1e-12) {
                node.cand_gain = gain;
                node.cand_feature = f;
                node.cand_threshold = mid;
            }
        }
    }
}

std::vector<OracleNode> oracle_tree(const Matrix& x, const std::vector<int>& y, int n_classes,
                                    int max_splits) {
    std::vector<OracleNode> nodes;
    auto add = [&](std::vector<int> rows) {
        OracleNode node;
        node.rows = std::move(rows);
        oracle_candidate(node, x, y, n_classes);
        nodes.push_back(std::move(node));
        return static_cast<int>(nodes.size()) - 1;
    };
    std::vector<int> all(x.size());
    std::iota(all.begin(), all.end(), 0);
    add(std::move(all));

    int splits = 0;
    while (splits < max_splits) {
        int pick = -1;
        for (std::size_t id = 0; id < nodes.size(); ++id) {
            const auto& n = nodes[id];
            if (n.expanded || n.cand_feature < 0 || n.cand_gain <= 1e-12) continue;
            if (pick < 0 || n.cand_gain > nodes[static_cast<std::size_t>(pick)].cand_gain + 1e-12)
                pick = static_cast<int>(id);
        }
        if (pick < 0) break;
        std::vector<int> lrows, rrows;
        for (int r : nodes[static_cast<std::size_t>(pick)].rows) {
            const double v = x[static_cast<std::size_t>(r)]
                              [static_cast<std::size_t>(nodes[static_cast<std::size_t>(pick)].cand_feature)];
            (v < nodes[static_cast<std::size_t>(pick)].cand_threshold ? lrows : rrows).push_back(r);
        }
        const int li = add(std::move(lrows));
        const int ri = add(std::move(rrows));
        auto& parent = nodes[static_cast<std::size_t>(pick)];
        parent.feature = parent.cand_feature;
        parent.threshold = parent.cand_threshold;
        parent.left = li;
        parent.right = ri;
        parent.expanded = true;
        ++splits;
    }
    return nodes;
}

}  // namespace

TEST_CASE("tree growth matches an independent best-first rebuild") {
    Rng rng(404);
    Matrix x;
    std::vector<int> y;
    for (int i = 0; i < 40; ++i) {
        x.push_back({rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)});
        y.push_back(static_cast<int>(rng.uniform_int(0, 2)));
    }

    for (int budget : {0, 1, 2, 5, 100}) {
        const auto model = ml::tree_fit(x, y, 3, budget);
        const auto truth = oracle_tree(x, y, 3, budget);
        CHECK(model.split_count <= budget);
        REQUIRE(model.nodes.size() == truth.size());
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const auto& got = model.nodes[i];
            const auto& want = truth[i];
            CHECK(got.feature == want.feature);
            CHECK(got.left == want.left);
            CHECK(got.right == want.right);
            CHECK(got.counts == want.counts);
            if (want.feature >= 0) CHECK(got.threshold == doctest::Approx(want.threshold));
        }
    }

    // Distinct rows and an unlimited budget memorize the training set.
    const auto big = ml::tree_fit(x, y, 3, 1000);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(ml::tree_predict(big, x[i]) == y[i]);
}

TEST_CASE("tree structure survives a monotone feature rescale") {
    Rng rng(405);
    Matrix x;
    std::vector<int> y;
    for (int i = 0; i < 50; ++i) {
        x.push_back({rng.uniform(1.0, 10.0), rng.uniform(1.0, 10.0)});
        y.push_back(static_cast<int>(rng.uniform_int(0, 1)));
    }
    Matrix cubed = x;
    for (auto& row : cubed) row[0] = row[0] * row[0] * row[0];

    const auto base = ml::tree_fit(x, y, 2, 8);
    const auto scaled = ml::tree_fit(cubed, y, 2, 8);
    REQUIRE(base.nodes.size() == scaled.nodes.size());
    CHECK(base.split_count == scaled.split_count);
    for (std::size_t i = 0; i < base.nodes.size(); ++i) {
        CHECK(base.nodes[i].feature == scaled.nodes[i].feature);
        CHECK(base.nodes[i].left == scaled.nodes[i].left);
        CHECK(base.nodes[i].counts == scaled.nodes[i].counts);
    }
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(ml::tree_predict(base, x[i]) == ml::tree_predict(scaled, cubed[i]));
}

TEST_CASE("knn base behavior") {
    ml::KnnModel model;
    model.x = {{-1.0}, {1.0}, {2.0}};
    model.y = {0, 0, 1};
    model.n_classes = 2;
    model.k = 3;

    model.weight = ml::KnnWeight::uniform;
    CHECK(ml::knn_predict(model, {0.0}) == 0);
    model.weight = ml::KnnWeight::squared_inverse;
    CHECK(ml::knn_predict(model, {0.0}) == 0);

    // k = 1 returns the class of the closest (here: exact) point.
    Rng rng(17);
    ml::KnnModel self;
    self.n_classes = 3;
    self.k = 1;
    for (int i = 0; i < 20; ++i) {
        self.x.push_back({rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)});
        self.y.push_back(i % 3);
    }
    for (auto weight : {ml::KnnWeight::uniform, ml::KnnWeight::squared_inverse}) {
        self.weight = weight;
        for (std::size_t i = 0; i < self.x.size(); ++i)
            CHECK(ml::knn_predict(self, self.x[i]) == self.y[i]);
    }

    // A query matching training points exactly is decided by majority over
    // just the exact matches.
    ml::KnnModel dup;
    dup.n_classes = 2;
    dup.k = 5;
    dup.weight = ml::KnnWeight::squared_inverse;
    dup.x = {{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {3.0, 0.0}, {3.5, 0.0}, {4.0, 0.0}};
    dup.y = {1, 1, 0, 0, 0, 0};
    CHECK(ml::knn_predict(dup, {0.0, 0.0}) == 1);

    ml::KnnModel cos = model;
    cos.metric = ml::KnnMetric::cosine;
    CHECK_THROWS_AS(ml::knn_predict(cos, {0.0}), ZeroVector);
}

namespace {

double oracle_knn_distance(ml::KnnMetric metric, const std::vector<double>& a,
                           const std::vector<double>& b) {
    double acc = 0.0;
    switch (metric) {
        case ml::KnnMetric::euclidean:
            for (std::size_t j = 0; j < a.size(); ++j) acc += (a[j] - b[j]) * (a[j] - b[j]);
            return std::sqrt(acc);
        case ml::KnnMetric::cosine: {
            double dot = 0, na = 0, nb = 0;
            for (std::size_t j = 0; j < a.size(); ++j) {
                dot += a[j] * b[j];
                na += a[j] * a[j];
                nb += b[j] * b[j];
            }
            return 1.0 - dot / std::sqrt(na * nb);
        }
        case ml::KnnMetric::minkowski3:
            for (std::size_t j = 0; j < a.size(); ++j)
                acc += std::abs(a[j] - b[j]) * std::abs(a[j] - b[j]) * std::abs(a[j] - b[j]);
            return std::cbrt(acc);
    }
    return 0.0;
}

int oracle_knn(const ml::KnnModel& model, const std::vector<double>& q) {
    std::vector<std::pair<double, int>> dist;
    for (std::size_t i = 0; i < model.x.size(); ++i)
        dist.push_back({oracle_knn_distance(model.metric, model.x[i], q), static_cast<int>(i)});
    std::sort(dist.begin(), dist.end());
    const int k = std::min<int>(model.k, static_cast<int>(dist.size()));

    std::vector<double> score(static_cast<std::size_t>(model.n_classes), 0.0);
    if (model.weight == ml::KnnWeight::squared_inverse) {
        std::vector<int> exact(static_cast<std::size_t>(model.n_classes), 0);
        bool any = false;
        for (int i = 0; i < k; ++i)
            if (dist[static_cast<std::size_t>(i)].first <= 1e-12) {
                ++exact[static_cast<std::size_t>(model.y[static_cast<std::size_t>(dist[static_cast<std::size_t>(i)].second)])];
                any = true;
            }
        if (any) {
            int best = 0;
            for (int c = 1; c < model.n_classes; ++c)
                if (exact[static_cast<std::size_t>(c)] > exact[static_cast<std::size_t>(best)]) best = c;
            return best;
        }
        for (int i = 0; i < k; ++i) {
            const double d = dist[static_cast<std::size_t>(i)].first;
            score[static_cast<std::size_t>(model.y[static_cast<std::size_t>(dist[static_cast<std::size_t>(i)].second)])] += 1.0 / (d * d);
        }
    } else {
        for (int i = 0; i < k; ++i)
            score[static_cast<std::size_t>(model.y[static_cast<std::size_t>(dist[static_cast<std::size_t>(i)].second)])] += 1.0;
    }
    int best = 0;
    for (int c = 1; c < model.n_classes; ++c)
        if (score[static_cast<std::size_t>(c)] > score[static_cast<std::size_t>(best)]) best = c;
    return best;
}

}  // namespace

TEST_CASE("knn agrees with an exhaustive rebuild on every metric and weighting") {
    Rng rng(2024);
    ml::KnnModel model;
    model.n_classes = 2;
    model.k = 10;
    for (int i = 0; i < 60; ++i) {
        // Offset keeps every vector away from zero so cosine stays defined.
        const double cx = (i % 2 == 0) ? 2.0 : 3.0;
        model.x.push_back({cx + rng.gaussian(), 2.5 + rng.gaussian()});
        model.y.push_back(i % 2);
    }

    Matrix queries;
    for (int i = 0; i < 100; ++i)
        queries.push_back({2.5 + 1.5 * rng.gaussian(), 2.5 + 1.5 * rng.gaussian()});

    for (auto metric : {ml::KnnMetric::euclidean, ml::KnnMetric::cosine, ml::KnnMetric::minkowski3})
        for (auto weight : {ml::KnnWeight::uniform, ml::KnnWeight::squared_inverse}) {
            model.metric = metric;
            model.weight = weight;
            for (const auto& q : queries)
                CHECK(ml::knn_predict(model, q) == oracle_knn(model, q));
        }
}

TEST_CASE("linear svm separates 1-d classes with a boundary between them") {
    const Matrix x = {{-1.3}, {-1.1}, {-0.9}, {0.9}, {1.1}, {1.3}};
    const std::vector<int> y = {0, 0, 0, 1, 1, 1};
    ml::SvmParams params;
    params.kernel = ml::SvmKernel::linear;
    const auto model = ml::svm_fit(x, y, 2, params, 9);
    CHECK(model.converged);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(ml::svm_predict(model, x[i]) == y[i]);
    CHECK(ml::svm_predict(model, {-5.0}) == 0);
    CHECK(ml::svm_predict(model, {5.0}) == 1);

    REQUIRE(model.pairs.size() == 1);
    const auto& pair = model.pairs[0];
    auto decision = [&](double v) {
        double acc = pair.bias;
        for (std::size_t i = 0; i < pair.support.size(); ++i)
            acc += pair.coef[i] * pair.support[i][0] * v;
        return acc;
    };
    CHECK(decision(-1.0) > 0.0);
    CHECK(decision(1.0) < 0.0);
    for (double c : pair.coef) CHECK(std::abs(c) <= params.c + 1e-12);
}

TEST_CASE("gaussian svm fits xor") {
    const Matrix x = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
    const std::vector<int> y = {0, 0, 1, 1};
    ml::SvmParams params;
    params.kernel = ml::SvmKernel::gaussian;
    params.c = 10.0;
    const auto model = ml::svm_fit(x, y, 2, params, 3);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(ml::svm_predict(model, x[i]) == y[i]);
    for (const auto& pair : model.pairs)
        for (double c : pair.coef) CHECK(std::abs(c) <= params.c + 1e-12);
}

TEST_CASE("svm satisfies the kkt conditions at convergence") {
    Rng rng(808);
    const auto data = make_blobs(rng, {{-2.0, 0.0}, {2.0, 0.0}, {0.0, 3.0}}, 15, 0.5);
    ml::SvmParams params;
    params.kernel = ml::SvmKernel::linear;
    const auto model = ml::svm_fit(data.x, data.y, 3, params, 21);
    REQUIRE(model.converged);
    REQUIRE(model.pairs.size() == 3);

    for (const auto& pair : model.pairs) {
        // Recover every training alpha of this pair; rows absent from the
        // support list carry alpha zero.
        std::vector<std::vector<double>> rows;
        std::vector<int> signs;
        for (std::size_t i = 0; i < data.x.size(); ++i) {
            if (data.y[i] == pair.class_a) {
                rows.push_back(data.x[i]);
                signs.push_back(1);
            } else if (data.y[i] == pair.class_b) {
                rows.push_back(data.x[i]);
                signs.push_back(-1);
            }
        }
        auto decision = [&](const std::vector<double>& v) {
            double acc = pair.bias;
            for (std::size_t i = 0; i < pair.support.size(); ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < v.size(); ++j) dot += pair.support[i][j] * v[j];
                acc += pair.coef[i] * dot;
            }
            return acc;
        };
        for (std::size_t i = 0; i < rows.size(); ++i) {
            double alpha = 0.0;
            for (std::size_t s = 0; s < pair.support.size(); ++s)
                if (pair.support[s] == rows[i]) alpha = std::abs(pair.coef[s]);
            const double margin = signs[i] * decision(rows[i]);
            if (alpha <= 1e-12) {
                CHECK(margin >= 1.0 - params.tol);
            } else if (alpha >= params.c - 1e-12) {
                CHECK(margin <= 1.0 + params.tol);
            } else {
                CHECK(std::abs(margin - 1.0) <= params.tol + 1e-9);
            }
        }
        // Dual feasibility: sum of signed coefficients vanishes.
        double net = 0.0;
        for (double c : pair.coef) net += c;
        CHECK(net == doctest::Approx(0.0).epsilon(1e-6));
    }

    for (std::size_t i = 0; i < data.x.size(); ++i)
        CHECK(ml::svm_predict(model, data.x[i]) == data.y[i]);
}

TEST_CASE("damped least squares solves a linear problem in one accepted step") {
    Rng rng(606);
    const int m = 20, p = 4;
    Eigen::MatrixXd a(m, p);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < p; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
        b(i) = rng.uniform(-1.0, 1.0);
    }
    const ml::ResidualFn fn = [&](const Eigen::VectorXd& w, Eigen::VectorXd& e, Eigen::MatrixXd* jac) {
        e = a * w - b;
        if (jac) *jac = a;
    };

    ml::LmOptions opt;
    opt.lambda0 = 0.0;
    const auto out = ml::lm_minimize(fn, Eigen::VectorXd::Zero(p), opt);
    CHECK(out.iterations == 1);
    CHECK(!out.hit_max);
    const Eigen::VectorXd exact = a.colPivHouseholderQr().solve(b);
    for (int j = 0; j < p; ++j) CHECK(out.w(j) == doctest::Approx(exact(j)).epsilon(1e-8));
    CHECK(out.sse == doctest::Approx((a * exact - b).squaredNorm()).epsilon(1e-10));

    // Heavy damping shrinks the first step toward zero.
    ml::LmOptions heavy;
    heavy.lambda0 = 1e10;
    Eigen::VectorXd first;
    const ml::StepHook capture = [&](const Eigen::VectorXd& w, int) {
        first = w;
        return false;
    };
    ml::lm_minimize(fn, Eigen::VectorXd::Zero(p), heavy, capture);
    REQUIRE(first.size() == p);
    CHECK(first.norm() < 1e-6);
    CHECK(first.norm() > 0.0);
}

TEST_CASE("network jacobian matches central differences") {
    Rng rng(707);
    ml::MlpModel model;
    model.d_in = 3;
    model.hidden = 4;
    model.n_out = 2;
    Eigen::VectorXd w(model.param_count());
    for (int i = 0; i < w.size(); ++i) w(i) = rng.uniform(-1.0, 1.0);

    Matrix x;
    std::vector<int> y;
    for (int i = 0; i < 5; ++i) {
        x.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
        y.push_back(static_cast<int>(rng.uniform_int(0, 1)));
    }

    Eigen::VectorXd e;
    Eigen::MatrixXd jac;
    ml::mlp_residual(model, w, x, y, e, &jac);
    REQUIRE(e.size() == 10);
    REQUIRE(jac.rows() == 10);
    REQUIRE(jac.cols() == w.size());

    const double step = 1e-5;
    for (int j = 0; j < w.size(); ++j) {
        Eigen::VectorXd wp = w, wm = w;
        wp(j) += step;
        wm(j) -= step;
        Eigen::VectorXd ep, em;
        ml::mlp_residual(model, wp, x, y, ep, nullptr);
        ml::mlp_residual(model, wm, x, y, em, nullptr);
        for (int r = 0; r < e.size(); ++r) {
            const double numeric = (ep(r) - em(r)) / (2.0 * step);
            const double analytic = jac(r, j);
            CHECK(std::abs(numeric - analytic) <= 1e-6 * std::max(1.0, std::abs(analytic)));
        }
    }
}

TEST_CASE("network learns xor on nearly every seed") {
    const Matrix x = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    const std::vector<int> y = {0, 1, 1, 0};
    ml::MlpOptions opt;
    opt.hidden = 4;
    opt.method = ml::MlpMethod::levenberg_marquardt;

    int solved = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        ml::MlpFitInfo info;
        const auto model = ml::mlp_fit(x, y, {}, {}, 2, opt, seed, &info);
        bool ok = info.iterations <= 200;
        for (std::size_t i = 0; i < x.size(); ++i)
            ok = ok && ml::mlp_predict(model, x[i]) == y[i];
        if (ok) ++solved;
    }
    CHECK(solved >= 9);
}

TEST_CASE("network with validation rows stops early and classifies them") {
    Rng rng(909);
    const auto train = make_blobs(rng, {{-2.0, -2.0}, {2.0, 2.0}}, 15, 0.3);
    const auto val = make_blobs(rng, {{-2.0, -2.0}, {2.0, 2.0}}, 5, 0.3);

    ml::MlpOptions opt;
    opt.hidden = 5;
    ml::MlpFitInfo info;
    const auto model = ml::mlp_fit(train.x, train.y, val.x, val.y, 2, opt, 11, &info);
    CHECK(info.iterations >= 1);
    CHECK(std::isfinite(info.val_sse));
    for (std::size_t i = 0; i < val.x.size(); ++i)
        CHECK(ml::mlp_predict(model, val.x[i]) == val.y[i]);

    ml::MlpOptions br = opt;
    br.method = ml::MlpMethod::bayesian_regularization;
    const auto reg = ml::mlp_fit(train.x, train.y, val.x, val.y, 2, br, 11, nullptr);
    for (std::size_t i = 0; i < val.x.size(); ++i)
        CHECK(ml::mlp_predict(reg, val.x[i]) == val.y[i]);
}

TEST_CASE("network probabilities") {
    ml::MlpModel zero;
    zero.d_in = 2;
    zero.hidden = 3;
    zero.n_out = 4;
    zero.w.assign(static_cast<std::size_t>(zero.param_count()), 0.0);
    std::vector<double> probs;
    CHECK(ml::mlp_predict(zero, {0.4, -0.7}, &probs) == 0);
    REQUIRE(probs.size() == 4);
    for (double p : probs) CHECK(p == doctest::Approx(0.25));

    Rng rng(515);
    ml::MlpModel rand_net = zero;
    for (auto& v : rand_net.w) v = rng.uniform(-2.0, 2.0);
    for (int t = 0; t < 20; ++t) {
        const std::vector<double> q = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
        const int cls = ml::mlp_predict(rand_net, q, &probs);
        double sum = 0.0;
        int arg = 0;
        for (std::size_t c = 0; c < probs.size(); ++c) {
            CHECK(probs[c] > 0.0);
            CHECK(probs[c] < 1.0);
            sum += probs[c];
            if (probs[c] > probs[static_cast<std::size_t>(arg)]) arg = static_cast<int>(c);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(arg == cls);
    }
}

TEST_CASE("prediction scoring") {
    const std::vector<int> truth = {0, 0, 0, 1, 1, 1, 2, 2, 2};
    const auto perfect = ml::evaluate_predictions(truth, truth, 3);
    CHECK(perfect.accuracy == doctest::Approx(1.0));
    for (int t = 0; t < 3; ++t)
        for (int p = 0; p < 3; ++p)
            CHECK(perfect.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] ==
                  (t == p ? 3 : 0));

    const std::vector<int> constant(truth.size(), 1);
    const auto flat = ml::evaluate_predictions(truth, constant, 3);
    CHECK(flat.accuracy == doctest::Approx(1.0 / 3.0));
    for (int t = 0; t < 3; ++t) {
        CHECK(flat.confusion[static_cast<std::size_t>(t)][1] == 3);
        CHECK(flat.confusion[static_cast<std::size_t>(t)][0] == 0);
    }

    CHECK_THROWS_AS(ml::evaluate_predictions({0, 1}, {0}, 2), DimensionMismatch);
}
