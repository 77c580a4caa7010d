// Joint log density log p(y, w) = L(y, f(xi), theta) + P_xi(xi) + P_theta(theta)
// for an inverse problem with forward map f, Gaussian observation noise and
// independent priors. The parameter vector w stacks xi and (optionally) the
// log noise scale theta. Gradients and diagonal second derivatives are
// assembled by the chain rule from the forward model's sensitivities.

#ifndef GMVI_JOINT_DENSITY_HPP
#define GMVI_JOINT_DENSITY_HPP

#include <memory>

#include <Eigen/Dense>

namespace gmvi {

/// Value, gradient and diagonal Hessian of a log density. A value of
/// -infinity marks a point outside the support; derivatives are zero there.
struct DensityEval {
    double value = 0.0;
    Eigen::VectorXd grad;
    Eigen::VectorXd hess_diag;  // filled only when requested
    bool has_hess = false;
};

/// Anything the optimizers and samplers can target.
class LogDensity {
  public:
    virtual ~LogDensity() = default;
    virtual int dim() const = 0;
    virtual DensityEval evaluate(const Eigen::VectorXd& point, bool want_hess) const = 0;
};

/// Forward map xi -> f(xi) in R^{d_y} with first and (diagonal) second
/// sensitivities. hess_diag(r, j) holds d^2 f_r / d xi_j^2.
struct ForwardEval {
    Eigen::VectorXd value;
    Eigen::MatrixXd jacobian;
    Eigen::MatrixXd hess_diag;
    bool has_jacobian = false;
    bool has_hess_diag = false;
};

class ForwardModel {
  public:
    virtual ~ForwardModel() = default;
    virtual int input_dim() const = 0;
    virtual int output_dim() const = 0;
    virtual ForwardEval evaluate(const Eigen::VectorXd& xi, bool want_jacobian,
                                 bool want_hess_diag) const = 0;
};

/// Log likelihood L(y, f, theta) with partials in f and theta. theta_dim()
/// is 1 when the noise scale is inferred and 0 when it is fixed.
struct LikelihoodEval {
    double value = 0.0;
    Eigen::VectorXd grad_f;
    Eigen::VectorXd hess_ff_diag;
    double grad_theta = 0.0;
    double hess_theta_theta = 0.0;
};

class Likelihood {
  public:
    virtual ~Likelihood() = default;
    virtual int theta_dim() const = 0;
    virtual LikelihoodEval evaluate(const Eigen::VectorXd& y, const Eigen::VectorXd& f,
                                    double theta) const = 0;
};

/// N(y | f, e^{2 theta} I): isotropic Gaussian noise with log scale theta.
class IsoGaussianLikelihood : public Likelihood {
  public:
    int theta_dim() const override { return 1; }
    LikelihoodEval evaluate(const Eigen::VectorXd& y, const Eigen::VectorXd& f,
                            double theta) const override;
};

/// N(y | f, sigma^2 I) with the noise scale held fixed.
class FixedGaussianLikelihood : public Likelihood {
  public:
    explicit FixedGaussianLikelihood(double sigma);
    int theta_dim() const override { return 0; }
    LikelihoodEval evaluate(const Eigen::VectorXd& y, const Eigen::VectorXd& f,
                            double theta) const override;

  private:
    double sigma_;
};

/// Log prior density over a parameter block.
struct PriorEval {
    double value = 0.0;
    Eigen::VectorXd grad;
    Eigen::VectorXd hess_diag;
};

class Prior {
  public:
    virtual ~Prior() = default;
    virtual int dim() const = 0;
    virtual PriorEval evaluate(const Eigen::VectorXd& x) const = 0;
};

/// Independent normals N(mean_j, stddev_j^2).
class GaussianPrior : public Prior {
  public:
    GaussianPrior(Eigen::VectorXd mean, Eigen::VectorXd stddev);
    int dim() const override { return static_cast<int>(mean_.size()); }
    PriorEval evaluate(const Eigen::VectorXd& x) const override;

  private:
    Eigen::VectorXd mean_, stddev_;
};

/// Uniform on the box [lo, hi]; -infinity outside.
class UniformBoxPrior : public Prior {
  public:
    UniformBoxPrior(Eigen::VectorXd lo, Eigen::VectorXd hi);
    int dim() const override { return static_cast<int>(lo_.size()); }
    PriorEval evaluate(const Eigen::VectorXd& x) const override;

  private:
    Eigen::VectorXd lo_, hi_;
    double log_density_;
};

/// Assembles J(w) = L(y, f(xi), theta) + P_xi(xi) + P_theta(theta).
///
/// The forward model and likelihood may both be null for prior-only targets.
/// theta_prior is ignored unless the likelihood infers theta. Forward solves
/// are counted and the most recent bundle is cached by xi, so value and
/// derivative requests at one point cost a single solve; asking for more
/// derivatives than the cached bundle has triggers a fresh solve.
class JointDensityModel : public LogDensity {
  public:
    JointDensityModel(std::shared_ptr<const ForwardModel> forward,
                      std::shared_ptr<const Likelihood> likelihood,
                      std::shared_ptr<const Prior> xi_prior,
                      std::shared_ptr<const Prior> theta_prior,
                      Eigen::VectorXd data);

    int dim() const override { return xi_dim_ + theta_dim_; }
    int xi_dim() const { return xi_dim_; }
    int theta_dim() const { return theta_dim_; }

    DensityEval evaluate(const Eigen::VectorXd& point, bool want_hess) const override;

    long forward_evaluations() const { return forward_evals_; }
    void reset_forward_evaluations() { forward_evals_ = 0; }

  private:
    const ForwardEval& forward_at(const Eigen::VectorXd& xi, bool want_hess) const;

    std::shared_ptr<const ForwardModel> forward_;
    std::shared_ptr<const Likelihood> likelihood_;
    std::shared_ptr<const Prior> xi_prior_, theta_prior_;
    Eigen::VectorXd data_;
    int xi_dim_, theta_dim_;

    mutable Eigen::VectorXd cached_xi_;
    mutable ForwardEval cached_bundle_;
    mutable bool cache_filled_ = false;
    mutable long forward_evals_ = 0;
};

}  // namespace gmvi

#endif
