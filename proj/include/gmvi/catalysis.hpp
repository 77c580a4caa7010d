// Nitrate reduction kinetics: six species u = (NO3-, NO2-, X, N2, NH3, N2O)
// evolving as udot = A(kappa) u in scaled units (time in multiples of 180 min,
// concentrations in multiples of 500 mmol/L), with five nonnegative rates
// kappa. The inverse problem works with xi_j = log kappa_j; observations are
// the five measurable species (X is an unobserved intermediate) at six
// equally spaced times.

#ifndef GMVI_CATALYSIS_HPP
#define GMVI_CATALYSIS_HPP

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gmvi/joint_density.hpp"

namespace gmvi {

/// Integrates the scaled system from u(0) = (1,0,0,0,0,0) with an adaptive
/// RK45 (dopri5) stepper, rel/abs tolerances 1e-10/1e-12. Returns one row of
/// six concentrations per requested time. Requires kappa >= 0 elementwise and
/// strictly increasing nonnegative times; throws std::runtime_error when the
/// step size controller gives up.
Eigen::MatrixXd solve_kinetics(const Eigen::VectorXd& kappa,
                               const std::vector<double>& times);

/// Same trajectory together with first and second parameter sensitivities,
/// integrated as one augmented system. Each row holds
/// [u (6) | du/dxi_0 .. du/dxi_4 (30) | d^2u/dxi_0^2 .. d^2u/dxi_4^2 (30)]
/// for xi_j = log kappa_j.
Eigen::MatrixXd solve_kinetics_sensitivities(const Eigen::VectorXd& xi,
                                             const std::vector<double>& times);

/// Forward map xi -> f(xi) in R^30: the five observed species at times
/// tau = 1/6, 2/6, ..., 1, concatenated time-major.
class KineticsForwardModel : public ForwardModel {
  public:
    int input_dim() const override { return 5; }
    int output_dim() const override { return 30; }
    ForwardEval evaluate(const Eigen::VectorXd& xi, bool want_jacobian,
                         bool want_hess_diag) const override;
};

/// Reads the concentration table (columns t, NO3-, NO2-, X, N2, NH3, N2O with
/// "-" marking the unobserved species), checks the t=0 initial condition, and
/// returns the remaining rows scaled by 1/500 in the forward model's layout.
Eigen::VectorXd load_catalysis_observations(const std::string& csv_path);

/// The full calibration target: iso-Gaussian likelihood with inferred log
/// noise theta, N(0,1) priors on each xi_j, N(-1,1) prior on theta.
std::shared_ptr<JointDensityModel> make_catalysis_model(Eigen::VectorXd observations);

}  // namespace gmvi

#endif
