#pragma once

#include <Eigen/Dense>

#include <functional>

namespace fruitgrade::ml {

struct LmOptions {
    double lambda0 = 1e-3;          // initial damping; 0 gives an undamped Gauss-Newton step
    double lambda_factor = 10.0;    // divide on accept, multiply on reject
    double lambda_max = 1e12;       // give up once damping exceeds this
    int max_iterations = 200;       // accepted steps
    int max_singular_retries = 10;  // consecutive unusable steps before SingularNormalEquations
    double min_gradient = 1e-10;    // stop when the gradient infinity norm drops below
};

struct LmOutcome {
    Eigen::VectorXd w;
    double sse = 0.0;
    int iterations = 0;     // accepted steps taken
    bool hit_max = false;   // stopped by the iteration cap
};

/// Fills e with residuals at w and, when jac is non-null, the Jacobian de/dw.
using ResidualFn =
    std::function<void(const Eigen::VectorXd& w, Eigen::VectorXd& e, Eigen::MatrixXd* jac)>;

/// Called after every accepted step with the new iterate; return false to stop.
using StepHook = std::function<bool(const Eigen::VectorXd& w, int iteration)>;

/// Damped least squares: solve (J'J + lambda I) dw = -J'e, accept steps that
/// lower the sum of squared residuals. Throws SingularNormalEquations when
/// max_singular_retries consecutive solves produce unusable steps.
LmOutcome lm_minimize(const ResidualFn& fn, Eigen::VectorXd w0, const LmOptions& opt,
                      const StepHook& hook = {});

}  // namespace fruitgrade::ml
