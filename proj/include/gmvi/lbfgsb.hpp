// Bound-constrained limited-memory quasi-Newton minimizer: gradient-projection
// search for the active set (generalized Cauchy point), a Newton solve of the
// quadratic model on the free variables, and a strong Wolfe line search.
//
// The limited-memory matrix is assembled densely from the compact
// representation; problem sizes here are a few dozen variables, so the O(n^2)
// products are irrelevant next to the objective evaluations.

#ifndef GMVI_LBFGSB_HPP
#define GMVI_LBFGSB_HPP

#include <functional>

#include <Eigen/Dense>

namespace gmvi {

/// Objective callback: returns f(x) and fills grad (same size as x).
/// May return non-finite values; the line search backs off from those.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct MinimizeOptions {
    int max_iterations = 500;
    int memory = 10;             // stored correction pairs
    double pg_tolerance = 1e-5;  // infinity norm of the projected gradient
};

enum class MinimizeStatus { Converged, IterationLimit, LineSearchFailed };

struct MinimizeResult {
    Eigen::VectorXd x;
    double f = 0.0;
    double f_initial = 0.0;  // objective at x0, for monotonicity accounting
    Eigen::VectorXd grad;
    double pg_norm = 0.0;
    int iterations = 0;
    int evaluations = 0;
    MinimizeStatus status = MinimizeStatus::Converged;
};

/// Minimizes fn over the box [lower, upper] starting from x0. Components of
/// the bounds may be +-infinity. Throws std::invalid_argument if x0 is
/// infeasible or fn(x0) is not finite.
MinimizeResult lbfgsb_minimize(const Objective& fn, const Eigen::VectorXd& x0,
                               const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper,
                               const MinimizeOptions& opts = {});

}  // namespace gmvi

#endif
