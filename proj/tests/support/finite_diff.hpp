// Central-difference helpers for checking analytic derivatives in tests.

#ifndef GMVI_TESTS_FINITE_DIFF_HPP
#define GMVI_TESTS_FINITE_DIFF_HPP

#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace testsupport {

// (f(x+h e_j) - f(x-h e_j)) / 2h for every coordinate.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h = 1e-5) {
    Eigen::VectorXd g(x.size());
    for (int j = 0; j < x.size(); ++j) {
        Eigen::VectorXd xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        g[j] = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

// Second central difference (f(x+h) - 2f(x) + f(x-h)) / h^2 per coordinate.
inline Eigen::VectorXd fd_hessian_diag(const std::function<double(const Eigen::VectorXd&)>& f,
                                       const Eigen::VectorXd& x, double h = 1e-4) {
    Eigen::VectorXd d(x.size());
    const double f0 = f(x);
    for (int j = 0; j < x.size(); ++j) {
        Eigen::VectorXd xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        d[j] = (f(xp) - 2.0 * f0 + f(xm)) / (h * h);
    }
    return d;
}

// Jacobian of a vector-valued map, one column of differences per input.
inline Eigen::MatrixXd fd_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h = 1e-6) {
    const Eigen::VectorXd f0 = f(x);
    Eigen::MatrixXd jac(f0.size(), x.size());
    for (int j = 0; j < x.size(); ++j) {
        Eigen::VectorXd xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        jac.col(j) = (f(xp) - f(xm)) / (2.0 * h);
    }
    return jac;
}

// |a - b| / max(1, |a|, |b|), elementwise maximum over the arrays.
inline double max_rel_error(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
    double worst = 0.0;
    for (int i = 0; i < got.rows(); ++i)
        for (int j = 0; j < got.cols(); ++j) {
            const double scale =
                std::max({1.0, std::abs(got(i, j)), std::abs(want(i, j))});
            worst = std::max(worst, std::abs(got(i, j) - want(i, j)) / scale);
        }
    return worst;
}

}  // namespace testsupport

#endif
