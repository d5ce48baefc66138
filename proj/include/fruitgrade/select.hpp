#pragma once

#include <vector>

namespace fruitgrade::sel {

/// Row-major sample matrix; every row is one feature vector.
using Matrix = std::vector<std::vector<double>>;

/// Per-feature z-scoring with population standard deviation. Constant
/// features store std 1 so they map to 0.
struct Standardizer {
    std::vector<double> means;
    std::vector<double> stds;

    static Standardizer fit(const Matrix& data);  // throws TooFewRows below 2 rows
    std::vector<double> apply(const std::vector<double>& x) const;
    Matrix apply(const Matrix& data) const;
    std::vector<double> invert(const std::vector<double>& z) const;
};

struct PcaModel {
    std::vector<double> mean;                     // length d
    std::vector<std::vector<double>> components;  // k orthonormal rows of length d
    std::vector<double> eigenvalues;              // k values, nonincreasing
    double explained_fraction = 0.0;

    int input_dim() const { return static_cast<int>(mean.size()); }
    int output_dim() const { return static_cast<int>(components.size()); }
};

/// Eigendecomposition of the sample covariance (divisor N-1). Keeps the
/// smallest k whose eigenvalue sum reaches explained_target of the total.
/// Sign convention: each component's largest-magnitude entry is positive
/// (ties broken toward the lowest index). Throws TooFewRows or
/// NumericalFailure.
PcaModel pca_fit(const Matrix& data, double explained_target);

/// components * (x - mean). Throws DimensionMismatch.
std::vector<double> pca_project(const PcaModel& model, const std::vector<double>& x);

/// mean + components^T * y; exact inverse of projection when k = d.
std::vector<double> pca_reconstruct(const PcaModel& model, const std::vector<double>& y);

struct FeatureSubset {
    std::vector<int> indices;  // strictly increasing canonical slots
    double merit = 0.0;
};

/// Hall's merit k*rcf / sqrt(k + k(k-1)*rff) with mean absolute Pearson
/// correlations: rcf against the integer-coded labels, rff over feature
/// pairs. Zero-variance columns contribute correlation 0.
double cfs_merit(const std::vector<int>& subset, const Matrix& data,
                 const std::vector<int>& labels);

/// Best-first forward search: repeatedly add the merit-maximizing feature
/// (ties to the lowest slot index), remember the best subset ever seen, and
/// stop after stall_limit consecutive non-improving expansions.
FeatureSubset cfs_search(const Matrix& data, const std::vector<int>& labels,
                         int stall_limit = 5);

}  // namespace fruitgrade::sel
