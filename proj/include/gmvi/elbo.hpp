// Approximate evidence lower bound for a Gaussian-mixture approximation of a
// joint log density J. The intractable cross-entropy term is replaced by a
// Taylor expansion of J around each component mean:
//   L0 = sum_i w_i J(mu_i)
//   L2 = L0 + (1/2) sum_i w_i sum_j var_ij * d^2J/dw_j^2(mu_i)
// and F_a = H0[q] + L_a with the mixture entropy lower bound H0.

#ifndef GMVI_ELBO_HPP
#define GMVI_ELBO_HPP

#include <Eigen/Dense>

#include "gmvi/joint_density.hpp"
#include "gmvi/mixture.hpp"

namespace gmvi {

/// J and its derivatives frozen at the component means: values[i] = J(mu_i),
/// grads(i,j) = dJ/dw_j at mu_i, hess_diags(i,j) = d^2J/dw_j^2 at mu_i.
struct ComponentLinearization {
    Eigen::VectorXd values;
    Eigen::MatrixXd grads;
    Eigen::MatrixXd hess_diags;
    bool has_hess = false;
};

/// Evaluates the target at each row of means. Second derivatives are optional
/// since the order-0 bound never needs them.
ComponentLinearization linearize(const LogDensity& target, const Eigen::MatrixXd& means,
                                 bool want_hess);

double elbo_L0(const MixtureState& q, const ComponentLinearization& lin);
double elbo_L2(const MixtureState& q, const ComponentLinearization& lin);

/// F_a = entropy_bound(q) + L_a, order a in {0, 2}.
double elbo_F(const MixtureState& q, const ComponentLinearization& lin, int order);

/// Gradients of F_a with respect to the mixture parameters, entropy terms
/// included. The mean gradient exists only for order 0: differentiating L2
/// through the means would need third derivatives of J, and the coordinate
/// ascent never uses it, so dmeans() throws std::logic_error for order 2.
class ElboGradients {
  public:
    ElboGradients(int order, Eigen::VectorXd dweights, Eigen::MatrixXd dmeans,
                  Eigen::MatrixXd dvariances);

    int order() const { return order_; }
    const Eigen::VectorXd& dweights() const { return dweights_; }
    const Eigen::MatrixXd& dmeans() const;
    const Eigen::MatrixXd& dvariances() const { return dvariances_; }

  private:
    int order_;
    Eigen::VectorXd dweights_;
    Eigen::MatrixXd dmeans_, dvariances_;
};

ElboGradients elbo_grads(const MixtureState& q, const ComponentLinearization& lin,
                         int order);

}  // namespace gmvi

#endif
