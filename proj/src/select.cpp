#include "fruitgrade/select.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "fruitgrade/errors.hpp"

namespace fruitgrade::sel {

namespace {

void check_rect(const Matrix& data) {
    if (data.size() < 2) throw TooFewRows("need at least 2 rows, got " + std::to_string(data.size()));
    const std::size_t d = data.front().size();
    if (d == 0) throw TooFewRows("rows have no columns");
    for (const auto& row : data)
        if (row.size() != d) throw DimensionMismatch("ragged matrix");
}

Eigen::MatrixXd to_eigen(const Matrix& data) {
    const Eigen::Index n = static_cast<Eigen::Index>(data.size());
    const Eigen::Index d = static_cast<Eigen::Index>(data.front().size());
    Eigen::MatrixXd m(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = data[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

}  // namespace

Standardizer Standardizer::fit(const Matrix& data) {
    check_rect(data);
    const std::size_t n = data.size();
    const std::size_t d = data.front().size();
    Standardizer s;
    s.means.assign(d, 0.0);
    s.stds.assign(d, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += data[i][j];
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dv = data[i][j] - mean;
            ss += dv * dv;
        }
        const double sd = std::sqrt(ss / static_cast<double>(n));
        s.means[j] = mean;
        // Columns whose spread is at rounding level count as constant.
        s.stds[j] = (sd > 1e-9 * (1.0 + std::abs(mean))) ? sd : 1.0;
    }
    return s;
}

std::vector<double> Standardizer::apply(const std::vector<double>& x) const {
    if (x.size() != means.size()) throw DimensionMismatch("standardizer expects " + std::to_string(means.size()) + " values");
    std::vector<double> z(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - means[j]) / stds[j];
    return z;
}

Matrix Standardizer::apply(const Matrix& data) const {
    Matrix out;
    out.reserve(data.size());
    for (const auto& row : data) out.push_back(apply(row));
    return out;
}

std::vector<double> Standardizer::invert(const std::vector<double>& z) const {
    if (z.size() != means.size()) throw DimensionMismatch("standardizer expects " + std::to_string(means.size()) + " values");
    std::vector<double> x(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) x[j] = z[j] * stds[j] + means[j];
    return x;
}

PcaModel pca_fit(const Matrix& data, double explained_target) {
    check_rect(data);
    if (!(explained_target > 0.0) || explained_target > 1.0)
        throw ConfigError("explained variance target must lie in (0, 1]");
    const Eigen::MatrixXd x = to_eigen(data);
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();

    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw NumericalFailure("eigendecomposition did not converge");

    // Solver orders eigenvalues ascending; read them back to front.
    std::vector<double> evals(static_cast<std::size_t>(d));
    double total = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        const double v = std::max(0.0, solver.eigenvalues()(d - 1 - i));
        evals[static_cast<std::size_t>(i)] = v;
        total += v;
    }

    Eigen::Index k = d;
    if (total > 0.0) {
        double cum = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) {
            cum += evals[static_cast<std::size_t>(i)];
            if (cum >= explained_target * total - 1e-12 * total) {
                k = i + 1;
                break;
            }
        }
    } else {
        k = 1;  // no variance at all; keep a single direction
    }

    PcaModel model;
    model.mean.assign(mean.data(), mean.data() + d);
    model.eigenvalues.assign(evals.begin(), evals.begin() + k);
    model.components.resize(static_cast<std::size_t>(k));
    double kept = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
        Eigen::VectorXd comp = solver.eigenvectors().col(d - 1 - i);
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index j = 0; j < d; ++j) {
            const double mag = std::abs(comp(j));
            if (mag > best) {
                best = mag;
                arg = j;
            }
        }
        if (comp(arg) < 0.0) comp = -comp;
        if (!comp.allFinite()) throw NumericalFailure("eigenvector has non-finite entries");
        model.components[static_cast<std::size_t>(i)].assign(comp.data(), comp.data() + d);
        kept += evals[static_cast<std::size_t>(i)];
    }
    model.explained_fraction = total > 0.0 ? kept / total : 1.0;
    return model;
}

std::vector<double> pca_project(const PcaModel& model, const std::vector<double>& x) {
    const std::size_t d = model.mean.size();
    if (x.size() != d) throw DimensionMismatch("projection expects " + std::to_string(d) + " values");
    std::vector<double> y(model.components.size(), 0.0);
    for (std::size_t i = 0; i < model.components.size(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += model.components[i][j] * (x[j] - model.mean[j]);
        y[i] = acc;
    }
    return y;
}

std::vector<double> pca_reconstruct(const PcaModel& model, const std::vector<double>& y) {
    const std::size_t k = model.components.size();
    if (y.size() != k) throw DimensionMismatch("reconstruction expects " + std::to_string(k) + " values");
    std::vector<double> x(model.mean);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < x.size(); ++j) x[j] += y[i] * model.components[i][j];
    return x;
}

namespace {

/// |Pearson correlation| between two columns; 0 when either is constant.
double abs_corr(const Matrix& data, int col_a, const std::vector<double>& col_b_vals,
                double mean_b, double ss_b) {
    const std::size_t n = data.size();
    double sum_a = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum_a += data[i][static_cast<std::size_t>(col_a)];
    const double mean_a = sum_a / static_cast<double>(n);
    double ss_a = 0.0, cross = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = data[i][static_cast<std::size_t>(col_a)] - mean_a;
        ss_a += da * da;
        cross += da * (col_b_vals[i] - mean_b);
    }
    const double denom = std::sqrt(ss_a * ss_b);
    if (!(denom > 0.0)) return 0.0;
    return std::min(1.0, std::abs(cross / denom));
}

struct CorrCache {
    const Matrix& data;
    std::vector<double> label_vals;
    double label_mean = 0.0;
    double label_ss = 0.0;
    std::vector<double> col_mean, col_ss;
    std::vector<double> feat_label;            // |corr(feature, label)|
    std::vector<double> pair;                  // lazily filled d*d, NaN = unknown
    int d;

    CorrCache(const Matrix& m, const std::vector<int>& labels)
        : data(m), d(static_cast<int>(m.front().size())) {
        const std::size_t n = m.size();
        label_vals.resize(n);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            label_vals[i] = static_cast<double>(labels[i]);
            sum += label_vals[i];
        }
        label_mean = sum / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double dv = label_vals[i] - label_mean;
            label_ss += dv * dv;
        }
        col_mean.assign(static_cast<std::size_t>(d), 0.0);
        col_ss.assign(static_cast<std::size_t>(d), 0.0);
        for (int j = 0; j < d; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += m[i][static_cast<std::size_t>(j)];
            col_mean[static_cast<std::size_t>(j)] = s / static_cast<double>(n);
            double ss = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double dv = m[i][static_cast<std::size_t>(j)] - col_mean[static_cast<std::size_t>(j)];
                ss += dv * dv;
            }
            col_ss[static_cast<std::size_t>(j)] = ss;
        }
        feat_label.assign(static_cast<std::size_t>(d), 0.0);
        for (int j = 0; j < d; ++j)
            feat_label[static_cast<std::size_t>(j)] = abs_corr(m, j, label_vals, label_mean, label_ss);
        pair.assign(static_cast<std::size_t>(d) * static_cast<std::size_t>(d),
                    std::numeric_limits<double>::quiet_NaN());
    }

    double feature_pair(int a, int b) {
        if (a == b) return 1.0;
        const std::size_t idx = static_cast<std::size_t>(a) * static_cast<std::size_t>(d) + static_cast<std::size_t>(b);
        if (std::isnan(pair[idx])) {
            const std::size_t n = data.size();
            double cross = 0.0;
            const double ma = col_mean[static_cast<std::size_t>(a)];
            const double mb = col_mean[static_cast<std::size_t>(b)];
            for (std::size_t i = 0; i < n; ++i)
                cross += (data[i][static_cast<std::size_t>(a)] - ma) * (data[i][static_cast<std::size_t>(b)] - mb);
            const double denom = std::sqrt(col_ss[static_cast<std::size_t>(a)] * col_ss[static_cast<std::size_t>(b)]);
            const double r = (denom > 0.0) ? std::min(1.0, std::abs(cross / denom)) : 0.0;
            pair[idx] = r;
            pair[static_cast<std::size_t>(b) * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] = r;
        }
        return pair[idx];
    }
};

double merit_from_sums(int k, double sum_cf, double sum_ff) {
    if (k == 0) return 0.0;
    const double kk = static_cast<double>(k);
    const double mean_cf = sum_cf / kk;
    const double pairs = kk * (kk - 1.0) / 2.0;
    const double mean_ff = pairs > 0.0 ? sum_ff / pairs : 0.0;
    const double denom = std::sqrt(kk + kk * (kk - 1.0) * mean_ff);
    return kk * mean_cf / denom;
}

void check_labeled(const Matrix& data, const std::vector<int>& labels) {
    check_rect(data);
    if (labels.size() != data.size()) throw DimensionMismatch("labels do not match rows");
}

}  // namespace

double cfs_merit(const std::vector<int>& subset, const Matrix& data,
                 const std::vector<int>& labels) {
    check_labeled(data, labels);
    if (subset.empty()) return 0.0;
    const int d = static_cast<int>(data.front().size());
    for (int idx : subset)
        if (idx < 0 || idx >= d) throw DimensionMismatch("feature index out of range");
    CorrCache cache(data, labels);
    double sum_cf = 0.0, sum_ff = 0.0;
    for (std::size_t i = 0; i < subset.size(); ++i) {
        sum_cf += cache.feat_label[static_cast<std::size_t>(subset[i])];
        for (std::size_t j = i + 1; j < subset.size(); ++j)
            sum_ff += cache.feature_pair(subset[i], subset[j]);
    }
    return merit_from_sums(static_cast<int>(subset.size()), sum_cf, sum_ff);
}

FeatureSubset cfs_search(const Matrix& data, const std::vector<int>& labels, int stall_limit) {
    check_labeled(data, labels);
    if (stall_limit < 0) throw ConfigError("stall limit must be nonnegative");
    const int d = static_cast<int>(data.front().size());
    CorrCache cache(data, labels);

    std::vector<char> in_subset(static_cast<std::size_t>(d), 0);
    std::vector<int> current;
    double current_cf = 0.0, current_ff = 0.0;
    FeatureSubset best;
    int stalls = 0;

    while (static_cast<int>(current.size()) < d) {
        int pick = -1;
        double pick_merit = -1.0, pick_cf = 0.0, pick_ff = 0.0;
        for (int f = 0; f < d; ++f) {
            if (in_subset[static_cast<std::size_t>(f)]) continue;
            double add_ff = 0.0;
            for (int s : current) add_ff += cache.feature_pair(s, f);
            const double m = merit_from_sums(static_cast<int>(current.size()) + 1,
                                             current_cf + cache.feat_label[static_cast<std::size_t>(f)],
                                             current_ff + add_ff);
            if (m > pick_merit) {
                pick_merit = m;
                pick = f;
                pick_cf = current_cf + cache.feat_label[static_cast<std::size_t>(f)];
                pick_ff = current_ff + add_ff;
            }
        }
        if (pick < 0) break;
        current.push_back(pick);
        in_subset[static_cast<std::size_t>(pick)] = 1;
        current_cf = pick_cf;
        current_ff = pick_ff;

        if (pick_merit > best.merit + 1e-12 || best.indices.empty()) {
            best.merit = pick_merit;
            best.indices = current;
            stalls = 0;
        } else {
            ++stalls;
        }
        if (stalls >= stall_limit) break;
    }

    std::sort(best.indices.begin(), best.indices.end());
    return best;
}

}  // namespace fruitgrade::sel
