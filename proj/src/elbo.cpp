#include "gmvi/elbo.hpp"

#include <stdexcept>

namespace gmvi {

namespace {

void check_shapes(const MixtureState& q, const ComponentLinearization& lin,
                  bool need_hess) {
    if (lin.values.size() != q.components() || lin.grads.rows() != q.components() ||
        lin.grads.cols() != q.dim())
        throw std::invalid_argument("linearization shape does not match mixture");
    if (need_hess && !lin.has_hess)
        throw std::invalid_argument("linearization lacks second derivatives");
}

}  // namespace

ComponentLinearization linearize(const LogDensity& target, const Eigen::MatrixXd& means,
                                 bool want_hess) {
    const int L = static_cast<int>(means.rows());
    const int d = static_cast<int>(means.cols());
    ComponentLinearization lin;
    lin.values.resize(L);
    lin.grads.resize(L, d);
    if (want_hess) lin.hess_diags.resize(L, d);
    lin.has_hess = want_hess;
    for (int i = 0; i < L; ++i) {
        const DensityEval e = target.evaluate(means.row(i).transpose(), want_hess);
        lin.values[i] = e.value;
        lin.grads.row(i) = e.grad.transpose();
        if (want_hess) lin.hess_diags.row(i) = e.hess_diag.transpose();
    }
    return lin;
}

double elbo_L0(const MixtureState& q, const ComponentLinearization& lin) {
    check_shapes(q, lin, false);
    return q.weights.dot(lin.values);
}

double elbo_L2(const MixtureState& q, const ComponentLinearization& lin) {
    check_shapes(q, lin, true);
    const Eigen::VectorXd traces =
        (q.variances.array() * lin.hess_diags.array()).rowwise().sum();
    return q.weights.dot(lin.values) + 0.5 * q.weights.dot(traces);
}

double elbo_F(const MixtureState& q, const ComponentLinearization& lin, int order) {
    if (order == 0) return entropy_bound(q) + elbo_L0(q, lin);
    if (order == 2) return entropy_bound(q) + elbo_L2(q, lin);
    throw std::invalid_argument("approximation order must be 0 or 2");
}

ElboGradients::ElboGradients(int order, Eigen::VectorXd dweights, Eigen::MatrixXd dmeans,
                             Eigen::MatrixXd dvariances)
    : order_(order),
      dweights_(std::move(dweights)),
      dmeans_(std::move(dmeans)),
      dvariances_(std::move(dvariances)) {}

const Eigen::MatrixXd& ElboGradients::dmeans() const {
    if (order_ != 0)
        throw std::logic_error(
            "mean gradient of the order-2 bound is unavailable; use order 0");
    return dmeans_;
}

ElboGradients elbo_grads(const MixtureState& q, const ComponentLinearization& lin,
                         int order) {
    if (order != 0 && order != 2)
        throw std::invalid_argument("approximation order must be 0 or 2");
    check_shapes(q, lin, order == 2);
    const EntropyGradients ent = entropy_bound_gradients(q);

    if (order == 0) {
        Eigen::VectorXd dw = ent.dweights + lin.values;
        Eigen::MatrixXd dmu =
            ent.dmeans + q.weights.asDiagonal() * lin.grads;
        return ElboGradients(0, std::move(dw), std::move(dmu), ent.dvariances);
    }

    const Eigen::VectorXd traces =
        (q.variances.array() * lin.hess_diags.array()).rowwise().sum();
    Eigen::VectorXd dw = ent.dweights + lin.values + 0.5 * traces;
    Eigen::MatrixXd dvar =
        ent.dvariances + 0.5 * q.weights.asDiagonal() * lin.hess_diags;
    return ElboGradients(2, std::move(dw), Eigen::MatrixXd(), std::move(dvar));
}

}  // namespace gmvi
