#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fruitgrade/lsq.hpp"
#include "fruitgrade/select.hpp"

namespace fruitgrade::ml {

using sel::Matrix;

struct Dataset {
    Matrix x;
    std::vector<int> y;  // contiguous class ids starting at 0

    std::size_t size() const { return x.size(); }
    int num_classes() const;
};

struct SplitPlan {
    std::vector<int> train, validation, test;  // row indices
};

/// Stratified 70/15/15 split: floor(0.7 N) train, floor(0.15 N) validation,
/// remainder test, with per-class quotas by largest remainder and per-class
/// seeded shuffles. Throws TooFewSamples below 10 rows.
SplitPlan split_dataset(const Dataset& data, std::uint64_t seed);

/// Seeded shuffle of 0..n-1 dealt into k folds; the first n%k folds get one
/// extra row. Throws TooFewSamples when n < k.
std::vector<std::vector<int>> kfold_indices(int n, int k, std::uint64_t seed);

// ---- decision tree ----

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    std::vector<long long> counts;  // per-class row counts reaching the node
};

struct DecisionTreeModel {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    int n_classes = 0;
    int split_count = 0;
};

/// Greedy CART on Gini impurity, growing best-first by impurity decrease
/// until max_splits internal nodes or no split helps. Single-class input
/// yields a one-leaf model.
DecisionTreeModel tree_fit(const Matrix& x, const std::vector<int>& y, int n_classes,
                           int max_splits);
int tree_predict(const DecisionTreeModel& model, const std::vector<double>& v);

// ---- k nearest neighbors ----

enum class KnnMetric { euclidean, cosine, minkowski3 };
enum class KnnWeight { uniform, squared_inverse };

struct KnnModel {
    Matrix x;
    std::vector<int> y;
    int k = 10;
    KnnMetric metric = KnnMetric::euclidean;
    KnnWeight weight = KnnWeight::uniform;
    int n_classes = 0;
};

int knn_predict(const KnnModel& model, const std::vector<double>& v);

// ---- support vector machine ----

enum class SvmKernel { linear, poly, gaussian };

struct SvmParams {
    SvmKernel kernel = SvmKernel::linear;
    int degree = 2;      // poly kernel only
    double gamma = 0.0;  // gaussian kernel; <=0 means 1/dim
    double c = 1.0;
    double tol = 1e-3;
    int max_sweeps = 2000;
};

struct SvmPairModel {
    int class_a = 0, class_b = 0;  // a votes +1, b votes -1
    Matrix support;
    std::vector<double> coef;  // alpha * sign per support vector
    double bias = 0.0;
    bool converged = true;
};

struct SvmModel {
    std::vector<SvmPairModel> pairs;
    SvmParams params;
    int dim = 0;
    int n_classes = 0;
    bool converged = true;  // false when any pair hit the sweep cap
};

/// One-vs-one SMO. Non-convergence of a pair sets the converged flags and
/// returns the best iterate instead of throwing.
SvmModel svm_fit(const Matrix& x, const std::vector<int>& y, int n_classes,
                 const SvmParams& params, std::uint64_t seed);
int svm_predict(const SvmModel& model, const std::vector<double>& v);

// ---- multilayer perceptron ----

enum class MlpMethod { levenberg_marquardt, bayesian_regularization };

struct MlpModel {
    int d_in = 0;
    int hidden = 0;
    int n_out = 0;
    // Layout: W1 row-major (hidden x d_in), b1, W2 row-major (n_out x hidden), b2.
    std::vector<double> w;

    int param_count() const { return hidden * d_in + hidden + n_out * hidden + n_out; }
};

struct MlpOptions {
    int hidden = 10;
    MlpMethod method = MlpMethod::levenberg_marquardt;
    int max_iterations = 200;
    int val_patience = 6;  // consecutive validation failures before stopping
};

struct MlpFitInfo {
    int iterations = 0;
    double train_sse = 0.0;
    double val_sse = 0.0;
};

/// Hidden tanh layer, linear output logits, trained on one-hot targets by
/// damped least squares (optionally with Bayesian regularization updates of
/// the weight/error trade-off). Validation rows drive early stopping; pass
/// empty validation arrays to disable it. Throws SingularNormalEquations.
MlpModel mlp_fit(const Matrix& x_train, const std::vector<int>& y_train,
                 const Matrix& x_val, const std::vector<int>& y_val, int n_classes,
                 const MlpOptions& opt, std::uint64_t seed, MlpFitInfo* info = nullptr);

/// Logits of the network; probabilities (softmax of logits) go to probs when
/// non-null. Returns the argmax class, ties to the lowest id.
int mlp_predict(const MlpModel& model, const std::vector<double>& v,
                std::vector<double>* probs = nullptr);

/// Residuals z - onehot(y) over the rows of x, sample-major, and optionally
/// the Jacobian with respect to the flat weight vector.
void mlp_residual(const MlpModel& model, const Eigen::VectorXd& w, const Matrix& x,
                  const std::vector<int>& y, Eigen::VectorXd& e, Eigen::MatrixXd* jac);

// ---- evaluation ----

struct EvalReport {
    double accuracy = 0.0;
    std::vector<std::vector<long long>> confusion;  // confusion[truth][predicted]
};

EvalReport evaluate_predictions(const std::vector<int>& truth, const std::vector<int>& predicted,
                                int n_classes);

}  // namespace fruitgrade::ml
