#include "fruitgrade/learn.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <utility>

#include "fruitgrade/errors.hpp"
#include "fruitgrade/rng.hpp"

namespace fruitgrade::ml {

int Dataset::num_classes() const {
    int top = -1;
    for (int c : y) top = std::max(top, c);
    return top + 1;
}

// ---- splits ----

namespace {

/// Largest-remainder apportionment of quota over groups sized n[], honoring
/// per-group capacity. Group order breaks remainder ties toward lower ids.
std::vector<int> apportion(const std::vector<int>& n, const std::vector<int>& cap, int quota) {
    const int groups = static_cast<int>(n.size());
    const long long total = std::accumulate(n.begin(), n.end(), 0LL);
    std::vector<int> out(static_cast<std::size_t>(groups), 0);
    if (total == 0 || quota <= 0) return out;
    std::vector<double> frac(static_cast<std::size_t>(groups), 0.0);
    int placed = 0;
    for (int g = 0; g < groups; ++g) {
        const double ideal = static_cast<double>(n[static_cast<std::size_t>(g)]) * quota / static_cast<double>(total);
        int base = static_cast<int>(std::floor(ideal));
        base = std::min(base, cap[static_cast<std::size_t>(g)]);
        out[static_cast<std::size_t>(g)] = base;
        frac[static_cast<std::size_t>(g)] = ideal - std::floor(ideal);
        placed += base;
    }
    std::vector<int> order(static_cast<std::size_t>(groups));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return frac[static_cast<std::size_t>(a)] > frac[static_cast<std::size_t>(b)];
    });
    while (placed < quota) {
        bool moved = false;
        for (int g : order) {
            if (placed >= quota) break;
            if (out[static_cast<std::size_t>(g)] < cap[static_cast<std::size_t>(g)]) {
                ++out[static_cast<std::size_t>(g)];
                ++placed;
                moved = true;
            }
        }
        if (!moved) break;  // no capacity anywhere
    }
    return out;
}

}  // namespace

SplitPlan split_dataset(const Dataset& data, std::uint64_t seed) {
    const int n = static_cast<int>(data.size());
    if (n < 10) throw TooFewSamples("need at least 10 rows to split, got " + std::to_string(n));
    if (data.y.size() != data.x.size()) throw DimensionMismatch("labels do not match rows");
    const int c = data.num_classes();

    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(c));
    for (int i = 0; i < n; ++i) {
        const int cls = data.y[static_cast<std::size_t>(i)];
        if (cls < 0) throw DimensionMismatch("negative class id");
        by_class[static_cast<std::size_t>(cls)].push_back(i);
    }
    for (int g = 0; g < c; ++g) {
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(g)));
        rng.shuffle(by_class[static_cast<std::size_t>(g)]);
    }

    const int want_train = static_cast<int>(std::floor(0.70 * n));
    const int want_val = static_cast<int>(std::floor(0.15 * n));

    std::vector<int> counts(static_cast<std::size_t>(c));
    for (int g = 0; g < c; ++g) counts[static_cast<std::size_t>(g)] = static_cast<int>(by_class[static_cast<std::size_t>(g)].size());
    const std::vector<int> train_q = apportion(counts, counts, want_train);
    std::vector<int> left(static_cast<std::size_t>(c));
    for (int g = 0; g < c; ++g) left[static_cast<std::size_t>(g)] = counts[static_cast<std::size_t>(g)] - train_q[static_cast<std::size_t>(g)];
    const std::vector<int> val_q = apportion(counts, left, want_val);

    SplitPlan plan;
    for (int g = 0; g < c; ++g) {
        const auto& rows = by_class[static_cast<std::size_t>(g)];
        const int t = train_q[static_cast<std::size_t>(g)];
        const int v = val_q[static_cast<std::size_t>(g)];
        for (int i = 0; i < t; ++i) plan.train.push_back(rows[static_cast<std::size_t>(i)]);
        for (int i = t; i < t + v; ++i) plan.validation.push_back(rows[static_cast<std::size_t>(i)]);
        for (int i = t + v; i < static_cast<int>(rows.size()); ++i) plan.test.push_back(rows[static_cast<std::size_t>(i)]);
    }
    std::sort(plan.train.begin(), plan.train.end());
    std::sort(plan.validation.begin(), plan.validation.end());
    std::sort(plan.test.begin(), plan.test.end());
    return plan;
}

std::vector<std::vector<int>> kfold_indices(int n, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("need at least 2 folds");
    if (n < k) throw TooFewSamples("cannot deal " + std::to_string(n) + " rows into " + std::to_string(k) + " folds");
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    rng.shuffle(perm);

    std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
    const int base = n / k;
    const int extra = n % k;
    int pos = 0;
    for (int f = 0; f < k; ++f) {
        const int take = base + (f < extra ? 1 : 0);
        auto& fold = folds[static_cast<std::size_t>(f)];
        fold.assign(perm.begin() + pos, perm.begin() + pos + take);
        std::sort(fold.begin(), fold.end());
        pos += take;
    }
    return folds;
}

// ---- decision tree ----

namespace {

double gini(const std::vector<long long>& counts, long long total) {
    if (total <= 0) return 0.0;
    double acc = 0.0;
    for (long long v : counts) {
        const double p = static_cast<double>(v) / static_cast<double>(total);
        acc += p * p;
    }
    return 1.0 - acc;
}

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

/// Best axis-aligned split of the given rows by weighted Gini decrease.
/// Scanning features then thresholds in ascending order keeps the first of
/// any tied candidates, which is the lowest feature and lowest threshold.
SplitChoice best_split(const Matrix& x, const std::vector<int>& y, const std::vector<int>& rows,
                       const std::vector<long long>& counts, int n_classes) {
    SplitChoice best;
    const long long total = static_cast<long long>(rows.size());
    if (total < 2) return best;
    const double parent = static_cast<double>(total) * gini(counts, total);
    const int d = static_cast<int>(x.front().size());

    std::vector<std::pair<double, int>> vals(rows.size());
    std::vector<long long> left_counts(static_cast<std::size_t>(n_classes));
    for (int f = 0; f < d; ++f) {
        for (std::size_t i = 0; i < rows.size(); ++i)
            vals[i] = {x[static_cast<std::size_t>(rows[i])][static_cast<std::size_t>(f)], y[static_cast<std::size_t>(rows[i])]};
        std::sort(vals.begin(), vals.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (vals.front().first == vals.back().first) continue;

        std::fill(left_counts.begin(), left_counts.end(), 0);
        long long n_left = 0;
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
            ++left_counts[static_cast<std::size_t>(vals[i].second)];
            ++n_left;
            if (vals[i].first == vals[i + 1].first) continue;
            const double mid = vals[i].first + (vals[i + 1].first - vals[i].first) / 2.0;
            if (!(vals[i].first < mid)) continue;  // adjacent doubles, no usable cut
            std::vector<long long> right_counts(counts);
            for (int cls = 0; cls < n_classes; ++cls) right_counts[static_cast<std::size_t>(cls)] -= left_counts[static_cast<std::size_t>(cls)];
            const long long n_right = total - n_left;
            const double gain = parent - static_cast<double>(n_left) * gini(left_counts, n_left) -
                                static_cast<double>(n_right) * gini(right_counts, n_right);
            if (gain > best.gain + 1e-12) {
                best.gain = gain;
                best.feature = f;
                best.threshold = mid;
            }
        }
    }
    return best;
}

}  // namespace

DecisionTreeModel tree_fit(const Matrix& x, const std::vector<int>& y, int n_classes,
                           int max_splits) {
    if (x.empty()) throw EmptySamples("no training rows");
    if (y.size() != x.size()) throw DimensionMismatch("labels do not match rows");
    if (n_classes < 1) throw ConfigError("need at least one class");
    if (max_splits < 0) throw ConfigError("split budget must be nonnegative");

    DecisionTreeModel model;
    model.n_classes = n_classes;

    struct Pending {
        std::vector<int> rows;
        SplitChoice choice;
    };
    std::vector<Pending> open;  // indexed by node id; shrinks to empty rows once expanded

    auto make_leaf = [&](std::vector<int> rows) {
        TreeNode node;
        node.counts.assign(static_cast<std::size_t>(n_classes), 0);
        for (int r : rows) ++node.counts[static_cast<std::size_t>(y[static_cast<std::size_t>(r)])];
        const int id = static_cast<int>(model.nodes.size());
        model.nodes.push_back(std::move(node));
        Pending p;
        p.choice = best_split(x, y, rows, model.nodes[static_cast<std::size_t>(id)].counts, n_classes);
        p.rows = std::move(rows);
        open.resize(model.nodes.size());
        open[static_cast<std::size_t>(id)] = std::move(p);
        return id;
    };

    std::vector<int> all(x.size());
    std::iota(all.begin(), all.end(), 0);
    make_leaf(std::move(all));

    while (model.split_count < max_splits) {
        int pick = -1;
        for (std::size_t id = 0; id < open.size(); ++id) {
            if (open[id].rows.empty() || open[id].choice.feature < 0) continue;
            if (open[id].choice.gain <= 1e-12) continue;
            if (pick < 0 || open[id].choice.gain > open[static_cast<std::size_t>(pick)].choice.gain + 1e-12) pick = static_cast<int>(id);
        }
        if (pick < 0) break;

        Pending pending = std::move(open[static_cast<std::size_t>(pick)]);
        open[static_cast<std::size_t>(pick)] = Pending{};
        std::vector<int> left_rows, right_rows;
        for (int r : pending.rows) {
            if (x[static_cast<std::size_t>(r)][static_cast<std::size_t>(pending.choice.feature)] < pending.choice.threshold)
                left_rows.push_back(r);
            else
                right_rows.push_back(r);
        }
        const int left_id = make_leaf(std::move(left_rows));
        const int right_id = make_leaf(std::move(right_rows));
        TreeNode& node = model.nodes[static_cast<std::size_t>(pick)];
        node.feature = pending.choice.feature;
        node.threshold = pending.choice.threshold;
        node.left = left_id;
        node.right = right_id;
        ++model.split_count;
    }
    return model;
}

int tree_predict(const DecisionTreeModel& model, const std::vector<double>& v) {
    if (model.nodes.empty()) throw EmptySamples("untrained tree");
    int id = 0;
    while (model.nodes[static_cast<std::size_t>(id)].feature >= 0) {
        const TreeNode& node = model.nodes[static_cast<std::size_t>(id)];
        if (static_cast<std::size_t>(node.feature) >= v.size()) throw DimensionMismatch("tree expects more features");
        id = (v[static_cast<std::size_t>(node.feature)] < node.threshold) ? node.left : node.right;
    }
    const auto& counts = model.nodes[static_cast<std::size_t>(id)].counts;
    int best = 0;
    for (int c = 1; c < static_cast<int>(counts.size()); ++c)
        if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(best)]) best = c;
    return best;
}

// ---- k nearest neighbors ----

namespace {

double knn_distance(const KnnModel& model, const std::vector<double>& a, const std::vector<double>& b) {
    switch (model.metric) {
        case KnnMetric::euclidean: {
            double acc = 0.0;
            for (std::size_t j = 0; j < a.size(); ++j) {
                const double d = a[j] - b[j];
                acc += d * d;
            }
            return std::sqrt(acc);
        }
        case KnnMetric::cosine: {
            double dot = 0.0, na = 0.0, nb = 0.0;
            for (std::size_t j = 0; j < a.size(); ++j) {
                dot += a[j] * b[j];
                na += a[j] * a[j];
                nb += b[j] * b[j];
            }
            if (!(na > 0.0) || !(nb > 0.0)) throw ZeroVector("cosine distance of a zero vector");
            return 1.0 - dot / std::sqrt(na * nb);
        }
        case KnnMetric::minkowski3: {
            double acc = 0.0;
            for (std::size_t j = 0; j < a.size(); ++j) {
                const double d = std::abs(a[j] - b[j]);
                acc += d * d * d;
            }
            return std::cbrt(acc);
        }
    }
    return 0.0;
}

}  // namespace

int knn_predict(const KnnModel& model, const std::vector<double>& v) {
    if (model.x.empty()) throw EmptySamples("knn model has no reference rows");
    if (v.size() != model.x.front().size()) throw DimensionMismatch("knn expects " + std::to_string(model.x.front().size()) + " features");
    const int n = static_cast<int>(model.x.size());
    const int k = std::min(model.k, n);
    if (k < 1) throw ConfigError("k must be positive");

    std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        dist[static_cast<std::size_t>(i)] = {knn_distance(model, model.x[static_cast<std::size_t>(i)], v), i};
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());

    std::vector<double> score(static_cast<std::size_t>(model.n_classes), 0.0);
    if (model.weight == KnnWeight::squared_inverse) {
        std::vector<long long> exact(static_cast<std::size_t>(model.n_classes), 0);
        bool any_exact = false;
        for (int i = 0; i < k; ++i) {
            if (dist[static_cast<std::size_t>(i)].first <= 1e-12) {
                ++exact[static_cast<std::size_t>(model.y[static_cast<std::size_t>(dist[static_cast<std::size_t>(i)].second)])];
                any_exact = true;
            }
        }
        if (any_exact) {
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

// ---- support vector machine ----

namespace {

double kernel_eval(const SvmParams& p, const std::vector<double>& a, const std::vector<double>& b) {
    switch (p.kernel) {
        case SvmKernel::linear: {
            double dot = 0.0;
            for (std::size_t j = 0; j < a.size(); ++j) dot += a[j] * b[j];
            return dot;
        }
        case SvmKernel::poly: {
            double dot = 0.0;
            for (std::size_t j = 0; j < a.size(); ++j) dot += a[j] * b[j];
            return std::pow(dot + 1.0, p.degree);
        }
        case SvmKernel::gaussian: {
            double acc = 0.0;
            for (std::size_t j = 0; j < a.size(); ++j) {
                const double d = a[j] - b[j];
                acc += d * d;
            }
            return std::exp(-p.gamma * acc);
        }
    }
    return 0.0;
}

SvmPairModel smo_train(const Matrix& rows, const std::vector<int>& signs, const SvmParams& p,
                       Rng& rng, int class_a, int class_b) {
    const int n = static_cast<int>(rows.size());
    std::vector<double> kmat(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const double v = kernel_eval(p, rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]);
            kmat[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] = v;
            kmat[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = v;
        }
    auto kk = [&](int i, int j) {
        return kmat[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
    };

    std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
    double bias = 0.0;
    auto decision = [&](int i) {
        double acc = bias;
        for (int j = 0; j < n; ++j)
            if (alpha[static_cast<std::size_t>(j)] > 0.0)
                acc += alpha[static_cast<std::size_t>(j)] * signs[static_cast<std::size_t>(j)] * kk(j, i);
        return acc;
    };

    // Joint update of alpha[i] and alpha[j]; false when the pair cannot move
    // (box already tight, flat curvature, or a below-threshold step).
    auto try_pair = [&](int i, int j, double ei) {
        const double ej = decision(j) - signs[static_cast<std::size_t>(j)];
        const double ai_old = alpha[static_cast<std::size_t>(i)];
        const double aj_old = alpha[static_cast<std::size_t>(j)];
        double lo, hi;
        if (signs[static_cast<std::size_t>(i)] != signs[static_cast<std::size_t>(j)]) {
            lo = std::max(0.0, aj_old - ai_old);
            hi = std::min(p.c, p.c + aj_old - ai_old);
        } else {
            lo = std::max(0.0, ai_old + aj_old - p.c);
            hi = std::min(p.c, ai_old + aj_old);
        }
        if (!(lo < hi)) return false;
        const double eta = 2.0 * kk(i, j) - kk(i, i) - kk(j, j);
        if (eta >= 0.0) return false;

        double aj = aj_old - signs[static_cast<std::size_t>(j)] * (ei - ej) / eta;
        aj = std::clamp(aj, lo, hi);
        if (std::abs(aj - aj_old) < 1e-12 * (aj + aj_old + 1e-12)) return false;
        const double ai = ai_old + signs[static_cast<std::size_t>(i)] * signs[static_cast<std::size_t>(j)] * (aj_old - aj);
        alpha[static_cast<std::size_t>(i)] = ai;
        alpha[static_cast<std::size_t>(j)] = aj;

        const double b1 = bias - ei - signs[static_cast<std::size_t>(i)] * (ai - ai_old) * kk(i, i) -
                          signs[static_cast<std::size_t>(j)] * (aj - aj_old) * kk(i, j);
        const double b2 = bias - ej - signs[static_cast<std::size_t>(i)] * (ai - ai_old) * kk(i, j) -
                          signs[static_cast<std::size_t>(j)] * (aj - aj_old) * kk(j, j);
        if (ai > 0.0 && ai < p.c)
            bias = b1;
        else if (aj > 0.0 && aj < p.c)
            bias = b2;
        else
            bias = 0.5 * (b1 + b2);
        return true;
    };

    bool converged = false;
    for (int sweep = 0; sweep < p.max_sweeps; ++sweep) {
        int violations = 0;
        int changed = 0;
        for (int i = 0; i < n; ++i) {
            const double ei = decision(i) - signs[static_cast<std::size_t>(i)];
            const double r = signs[static_cast<std::size_t>(i)] * ei;
            const bool violates = (r < -p.tol && alpha[static_cast<std::size_t>(i)] < p.c) ||
                                  (r > p.tol && alpha[static_cast<std::size_t>(i)] > 0.0);
            if (!violates) continue;
            ++violations;

            // Random partner first, then every other row, so a violator only
            // stays stuck when no pair at all can move.
            int j0 = static_cast<int>(rng.uniform_int(0, n - 2));
            if (j0 >= i) ++j0;
            bool moved = try_pair(i, j0, ei);
            for (int step = 1; step < n && !moved; ++step) {
                const int j = (j0 + step) % n;
                if (j == i || j == j0) continue;
                moved = try_pair(i, j, ei);
            }
            if (moved) ++changed;
        }
        if (violations == 0) {
            converged = true;
            break;
        }
        if (changed == 0) break;  // violators remain but nothing can move
    }

    SvmPairModel pair;
    pair.class_a = class_a;
    pair.class_b = class_b;
    pair.bias = bias;
    pair.converged = converged;
    for (int i = 0; i < n; ++i) {
        if (alpha[static_cast<std::size_t>(i)] > 1e-12) {
            pair.support.push_back(rows[static_cast<std::size_t>(i)]);
            pair.coef.push_back(alpha[static_cast<std::size_t>(i)] * signs[static_cast<std::size_t>(i)]);
        }
    }
    return pair;
}

}  // namespace

SvmModel svm_fit(const Matrix& x, const std::vector<int>& y, int n_classes,
                 const SvmParams& params, std::uint64_t seed) {
    if (x.empty()) throw EmptySamples("no training rows");
    if (y.size() != x.size()) throw DimensionMismatch("labels do not match rows");
    SvmModel model;
    model.params = params;
    model.dim = static_cast<int>(x.front().size());
    model.n_classes = n_classes;
    if (model.params.kernel == SvmKernel::gaussian && !(model.params.gamma > 0.0))
        model.params.gamma = 1.0 / static_cast<double>(model.dim);

    for (int a = 0; a < n_classes; ++a) {
        for (int b = a + 1; b < n_classes; ++b) {
            Matrix rows;
            std::vector<int> signs;
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (y[i] == a) {
                    rows.push_back(x[i]);
                    signs.push_back(1);
                } else if (y[i] == b) {
                    rows.push_back(x[i]);
                    signs.push_back(-1);
                }
            }
            const bool has_a = std::find(signs.begin(), signs.end(), 1) != signs.end();
            const bool has_b = std::find(signs.begin(), signs.end(), -1) != signs.end();
            if (!has_a || !has_b) continue;
            Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(b)));
            SvmPairModel pair = smo_train(rows, signs, model.params, rng, a, b);
            if (!pair.converged) model.converged = false;
            model.pairs.push_back(std::move(pair));
        }
    }
    return model;
}

int svm_predict(const SvmModel& model, const std::vector<double>& v) {
    if (v.size() != static_cast<std::size_t>(model.dim)) throw DimensionMismatch("svm expects " + std::to_string(model.dim) + " features");
    std::vector<int> votes(static_cast<std::size_t>(model.n_classes), 0);
    for (const auto& pair : model.pairs) {
        double acc = pair.bias;
        for (std::size_t i = 0; i < pair.support.size(); ++i)
            acc += pair.coef[i] * kernel_eval(model.params, pair.support[i], v);
        ++votes[static_cast<std::size_t>(acc > 0.0 ? pair.class_a : pair.class_b)];
    }
    int best = 0;
    for (int c = 1; c < model.n_classes; ++c)
        if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)]) best = c;
    return best;
}

// ---- damped least squares ----

namespace {

/// Solve (A) dw = -g, reporting failure on non-finite or inconsistent results.
bool solve_step(const Eigen::MatrixXd& a, const Eigen::VectorXd& g, Eigen::VectorXd& dw) {
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success) return false;
    dw = ldlt.solve(-g);
    if (!dw.allFinite()) return false;
    const double gnorm = g.norm();
    if (gnorm > 0.0 && (a * dw + g).norm() > 1e-6 * std::max(1.0, gnorm)) return false;
    return true;
}

}  // namespace

LmOutcome lm_minimize(const ResidualFn& fn, Eigen::VectorXd w0, const LmOptions& opt,
                      const StepHook& hook) {
    const Eigen::Index p = w0.size();
    Eigen::VectorXd e;
    Eigen::MatrixXd jac;
    fn(w0, e, &jac);

    LmOutcome out;
    out.w = std::move(w0);
    out.sse = e.squaredNorm();
    double lambda = opt.lambda0;
    int singular_streak = 0;

    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);
    while (out.iterations < opt.max_iterations) {
        const Eigen::VectorXd g = jac.transpose() * e;
        if (g.lpNorm<Eigen::Infinity>() < opt.min_gradient) return out;

        const Eigen::MatrixXd a = jac.transpose() * jac + lambda * eye;
        Eigen::VectorXd dw;
        if (!solve_step(a, g, dw)) {
            ++singular_streak;
            if (singular_streak >= opt.max_singular_retries)
                throw SingularNormalEquations("normal equations unusable after " + std::to_string(singular_streak) + " retries");
            lambda = lambda > 0.0 ? lambda * opt.lambda_factor : 1e-6;
            if (lambda > opt.lambda_max) throw SingularNormalEquations("damping exhausted on singular system");
            continue;
        }
        singular_streak = 0;

        const Eigen::VectorXd w_try = out.w + dw;
        Eigen::VectorXd e_try;
        fn(w_try, e_try, nullptr);
        const double sse_try = e_try.squaredNorm();
        if (sse_try < out.sse) {
            out.w = w_try;
            out.sse = sse_try;
            ++out.iterations;
            lambda = std::max(lambda / opt.lambda_factor, 1e-15);
            fn(out.w, e, &jac);
            if (hook && !hook(out.w, out.iterations)) return out;
            if (out.sse == 0.0) return out;
        } else {
            lambda = lambda > 0.0 ? lambda * opt.lambda_factor : 1e-6;
            if (lambda > opt.lambda_max) return out;
        }
    }
    out.hit_max = true;
    return out;
}

// ---- multilayer perceptron ----

namespace {

struct MlpShape {
    int d_in, hidden, n_out;
    int w1_at(int h, int j) const { return h * d_in + j; }
    int b1_at(int h) const { return hidden * d_in + h; }
    int w2_at(int c, int h) const { return hidden * d_in + hidden + c * hidden + h; }
    int b2_at(int c) const { return hidden * d_in + hidden + n_out * hidden + c; }
    int total() const { return hidden * d_in + hidden + n_out * hidden + n_out; }
};

void mlp_forward(const MlpShape& s, const double* w, const std::vector<double>& x,
                 std::vector<double>& a1, std::vector<double>& z2) {
    a1.resize(static_cast<std::size_t>(s.hidden));
    z2.resize(static_cast<std::size_t>(s.n_out));
    for (int h = 0; h < s.hidden; ++h) {
        double acc = w[s.b1_at(h)];
        for (int j = 0; j < s.d_in; ++j) acc += w[s.w1_at(h, j)] * x[static_cast<std::size_t>(j)];
        a1[static_cast<std::size_t>(h)] = std::tanh(acc);
    }
    for (int c = 0; c < s.n_out; ++c) {
        double acc = w[s.b2_at(c)];
        for (int h = 0; h < s.hidden; ++h) acc += w[s.w2_at(c, h)] * a1[static_cast<std::size_t>(h)];
        z2[static_cast<std::size_t>(c)] = acc;
    }
}

void mlp_residual_impl(const MlpShape& s, const Eigen::VectorXd& w, const Matrix& x,
                       const std::vector<int>& y, Eigen::VectorXd& e, Eigen::MatrixXd* jac) {
    const int n = static_cast<int>(x.size());
    const int c_out = s.n_out;
    e.resize(static_cast<Eigen::Index>(n) * c_out);
    if (jac) jac->setZero(static_cast<Eigen::Index>(n) * c_out, s.total());

    std::vector<double> a1, z2;
    for (int i = 0; i < n; ++i) {
        mlp_forward(s, w.data(), x[static_cast<std::size_t>(i)], a1, z2);
        for (int c = 0; c < c_out; ++c) {
            const double target = (y[static_cast<std::size_t>(i)] == c) ? 1.0 : 0.0;
            const Eigen::Index row = static_cast<Eigen::Index>(i) * c_out + c;
            e(row) = z2[static_cast<std::size_t>(c)] - target;
            if (!jac) continue;
            for (int h = 0; h < s.hidden; ++h) {
                const double t1 = 1.0 - a1[static_cast<std::size_t>(h)] * a1[static_cast<std::size_t>(h)];
                const double back = w(s.w2_at(c, h)) * t1;
                for (int j = 0; j < s.d_in; ++j)
                    (*jac)(row, s.w1_at(h, j)) = back * x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                (*jac)(row, s.b1_at(h)) = back;
                (*jac)(row, s.w2_at(c, h)) = a1[static_cast<std::size_t>(h)];
            }
            (*jac)(row, s.b2_at(c)) = 1.0;
        }
    }
}

/// Bayesian-regularized damped least squares: minimize beta*Ed + alpha*Ew
/// with evidence updates of alpha and beta after each accepted step.
Eigen::VectorXd br_minimize(const ResidualFn& fn, Eigen::VectorXd w, const LmOptions& opt,
                            const StepHook& hook, int* iterations_out) {
    const Eigen::Index p = w.size();
    Eigen::VectorXd e;
    Eigen::MatrixXd jac;
    fn(w, e, &jac);

    double alpha = 0.0, beta = 1.0;
    double ed = 0.5 * e.squaredNorm();
    double ew = 0.5 * w.squaredNorm();
    double objective = beta * ed + alpha * ew;
    double lambda = opt.lambda0;
    const double n_res = static_cast<double>(e.size());
    int iterations = 0;
    int singular_streak = 0;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);

    while (iterations < opt.max_iterations) {
        const Eigen::VectorXd g = beta * (jac.transpose() * e) + alpha * w;
        if (g.lpNorm<Eigen::Infinity>() < opt.min_gradient) break;

        const Eigen::MatrixXd a = beta * (jac.transpose() * jac) + (alpha + lambda) * eye;
        Eigen::VectorXd dw;
        if (!solve_step(a, g, dw)) {
            ++singular_streak;
            if (singular_streak >= opt.max_singular_retries)
                throw SingularNormalEquations("normal equations unusable after " + std::to_string(singular_streak) + " retries");
            lambda = lambda > 0.0 ? lambda * opt.lambda_factor : 1e-6;
            if (lambda > opt.lambda_max) throw SingularNormalEquations("damping exhausted on singular system");
            continue;
        }
        singular_streak = 0;

        const Eigen::VectorXd w_try = w + dw;
        Eigen::VectorXd e_try;
        fn(w_try, e_try, nullptr);
        const double ed_try = 0.5 * e_try.squaredNorm();
        const double ew_try = 0.5 * w_try.squaredNorm();
        if (beta * ed_try + alpha * ew_try < objective) {
            w = w_try;
            ed = ed_try;
            ew = ew_try;
            ++iterations;
            lambda = std::max(lambda / opt.lambda_factor, 1e-15);
            fn(w, e, &jac);

            double gamma;
            if (alpha == 0.0) {
                gamma = static_cast<double>(p);
            } else {
                const Eigen::MatrixXd hess = beta * (jac.transpose() * jac) + alpha * eye;
                const Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
                const double tr = ldlt.info() == Eigen::Success ? ldlt.solve(eye).trace()
                                                                : std::numeric_limits<double>::quiet_NaN();
                gamma = std::isfinite(tr) ? static_cast<double>(p) - alpha * tr : static_cast<double>(p);
            }
            gamma = std::clamp(gamma, 0.0, static_cast<double>(p));
            alpha = gamma / (2.0 * std::max(ew, 1e-12));
            beta = std::max((n_res - gamma), 1e-6) / (2.0 * std::max(ed, 1e-12));
            objective = beta * ed + alpha * ew;

            if (hook && !hook(w, iterations)) break;
            if (ed == 0.0) break;
        } else {
            lambda = lambda > 0.0 ? lambda * opt.lambda_factor : 1e-6;
            if (lambda > opt.lambda_max) break;
        }
    }
    if (iterations_out) *iterations_out = iterations;
    return w;
}

}  // namespace

void mlp_residual(const MlpModel& model, const Eigen::VectorXd& w, const Matrix& x,
                  const std::vector<int>& y, Eigen::VectorXd& e, Eigen::MatrixXd* jac) {
    const MlpShape s{model.d_in, model.hidden, model.n_out};
    if (w.size() != s.total()) throw DimensionMismatch("weight vector does not match network shape");
    if (x.size() != y.size()) throw DimensionMismatch("labels do not match rows");
    mlp_residual_impl(s, w, x, y, e, jac);
}

MlpModel mlp_fit(const Matrix& x_train, const std::vector<int>& y_train, const Matrix& x_val,
                 const std::vector<int>& y_val, int n_classes, const MlpOptions& opt,
                 std::uint64_t seed, MlpFitInfo* info) {
    if (x_train.empty()) throw EmptySamples("no training rows");
    if (y_train.size() != x_train.size() || y_val.size() != x_val.size())
        throw DimensionMismatch("labels do not match rows");
    if (opt.hidden < 1) throw ConfigError("need at least one hidden unit");
    if (n_classes < 1) throw ConfigError("need at least one class");

    MlpModel model;
    model.d_in = static_cast<int>(x_train.front().size());
    model.hidden = opt.hidden;
    model.n_out = n_classes;
    const MlpShape s{model.d_in, model.hidden, model.n_out};

    Rng rng(Rng::derive(seed, 0x6d6c70));
    Eigen::VectorXd w0(s.total());
    const double scale1 = 1.0 / std::sqrt(static_cast<double>(std::max(1, s.d_in)));
    const double scale2 = 1.0 / std::sqrt(static_cast<double>(s.hidden));
    for (int h = 0; h < s.hidden; ++h) {
        for (int j = 0; j < s.d_in; ++j) w0(s.w1_at(h, j)) = rng.uniform(-scale1, scale1);
    }
    for (int h = 0; h < s.hidden; ++h) w0(s.b1_at(h)) = rng.uniform(-scale1, scale1);
    for (int c = 0; c < s.n_out; ++c) {
        for (int h = 0; h < s.hidden; ++h) w0(s.w2_at(c, h)) = rng.uniform(-scale2, scale2);
    }
    for (int c = 0; c < s.n_out; ++c) w0(s.b2_at(c)) = rng.uniform(-scale2, scale2);

    const ResidualFn fn = [&](const Eigen::VectorXd& w, Eigen::VectorXd& e, Eigen::MatrixXd* jac) {
        mlp_residual_impl(s, w, x_train, y_train, e, jac);
    };

    const bool use_val = !x_val.empty();
    double best_val = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_w;
    int val_fails = 0;
    const StepHook hook = [&](const Eigen::VectorXd& w, int) {
        if (!use_val) return true;
        Eigen::VectorXd ev;
        mlp_residual_impl(s, w, x_val, y_val, ev, nullptr);
        const double sse = ev.squaredNorm();
        if (sse < best_val - 1e-12) {
            best_val = sse;
            best_w = w;
            val_fails = 0;
        } else {
            ++val_fails;
        }
        return val_fails < opt.val_patience;
    };

    LmOptions lm;
    lm.max_iterations = opt.max_iterations;
    Eigen::VectorXd w_final;
    int iterations = 0;
    if (opt.method == MlpMethod::levenberg_marquardt) {
        LmOutcome out = lm_minimize(fn, w0, lm, hook);
        w_final = std::move(out.w);
        iterations = out.iterations;
    } else {
        w_final = br_minimize(fn, w0, lm, hook, &iterations);
    }
    if (use_val && best_w.size() == w_final.size()) w_final = best_w;

    model.w.assign(w_final.data(), w_final.data() + w_final.size());
    if (info) {
        info->iterations = iterations;
        Eigen::VectorXd e;
        mlp_residual_impl(s, w_final, x_train, y_train, e, nullptr);
        info->train_sse = e.squaredNorm();
        if (use_val) {
            Eigen::VectorXd ev;
            mlp_residual_impl(s, w_final, x_val, y_val, ev, nullptr);
            info->val_sse = ev.squaredNorm();
        }
    }
    return model;
}

int mlp_predict(const MlpModel& model, const std::vector<double>& v, std::vector<double>* probs) {
    if (v.size() != static_cast<std::size_t>(model.d_in)) throw DimensionMismatch("network expects " + std::to_string(model.d_in) + " features");
    const MlpShape s{model.d_in, model.hidden, model.n_out};
    if (static_cast<int>(model.w.size()) != s.total()) throw DimensionMismatch("weight vector does not match network shape");
    std::vector<double> a1, z2;
    mlp_forward(s, model.w.data(), v, a1, z2);
    int best = 0;
    for (int c = 1; c < s.n_out; ++c)
        if (z2[static_cast<std::size_t>(c)] > z2[static_cast<std::size_t>(best)]) best = c;
    if (probs) {
        probs->assign(static_cast<std::size_t>(s.n_out), 0.0);
        const double top = z2[static_cast<std::size_t>(best)];
        double denom = 0.0;
        for (int c = 0; c < s.n_out; ++c) {
            (*probs)[static_cast<std::size_t>(c)] = std::exp(z2[static_cast<std::size_t>(c)] - top);
            denom += (*probs)[static_cast<std::size_t>(c)];
        }
        for (double& p : *probs) p /= denom;
    }
    return best;
}

// ---- evaluation ----

EvalReport evaluate_predictions(const std::vector<int>& truth, const std::vector<int>& predicted,
                                int n_classes) {
    if (truth.size() != predicted.size()) throw DimensionMismatch("prediction count does not match truth");
    EvalReport report;
    report.confusion.assign(static_cast<std::size_t>(n_classes),
                            std::vector<long long>(static_cast<std::size_t>(n_classes), 0));
    long long hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i];
        const int p = predicted[i];
        if (t < 0 || t >= n_classes || p < 0 || p >= n_classes) throw DimensionMismatch("class id out of range");
        ++report.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
        if (t == p) ++hits;
    }
    report.accuracy = truth.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(truth.size());
    return report;
}

}  // namespace fruitgrade::ml
