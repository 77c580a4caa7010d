#include "gmvi/joint_density.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace gmvi {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

LikelihoodEval IsoGaussianLikelihood::evaluate(const Eigen::VectorXd& y,
                                               const Eigen::VectorXd& f,
                                               double theta) const {
    const int dy = static_cast<int>(y.size());
    const double inv_var = std::exp(-2.0 * theta);
    const Eigen::VectorXd resid = y - f;
    const double ss = resid.squaredNorm();

    LikelihoodEval e;
    e.value = -0.5 * dy * kLog2Pi - dy * theta - 0.5 * inv_var * ss;
    e.grad_f = inv_var * resid;
    e.hess_ff_diag = Eigen::VectorXd::Constant(dy, -inv_var);
    e.grad_theta = inv_var * ss - dy;
    e.hess_theta_theta = -2.0 * inv_var * ss;
    return e;
}

FixedGaussianLikelihood::FixedGaussianLikelihood(double sigma) : sigma_(sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("noise scale must be positive");
}

LikelihoodEval FixedGaussianLikelihood::evaluate(const Eigen::VectorXd& y,
                                                 const Eigen::VectorXd& f,
                                                 double) const {
    const int dy = static_cast<int>(y.size());
    const double inv_var = 1.0 / (sigma_ * sigma_);
    const Eigen::VectorXd resid = y - f;

    LikelihoodEval e;
    e.value = -0.5 * dy * kLog2Pi - dy * std::log(sigma_) -
              0.5 * inv_var * resid.squaredNorm();
    e.grad_f = inv_var * resid;
    e.hess_ff_diag = Eigen::VectorXd::Constant(dy, -inv_var);
    return e;
}

GaussianPrior::GaussianPrior(Eigen::VectorXd mean, Eigen::VectorXd stddev)
    : mean_(std::move(mean)), stddev_(std::move(stddev)) {
    if (mean_.size() != stddev_.size() || mean_.size() == 0)
        throw std::invalid_argument("prior mean and stddev sizes disagree");
    if (stddev_.minCoeff() <= 0.0)
        throw std::invalid_argument("prior stddevs must be positive");
}

PriorEval GaussianPrior::evaluate(const Eigen::VectorXd& x) const {
    if (x.size() != mean_.size())
        throw std::invalid_argument("prior input dimension mismatch");
    PriorEval e;
    e.grad.resize(dim());
    e.hess_diag.resize(dim());
    e.value = 0.0;
    for (int j = 0; j < dim(); ++j) {
        const double var = stddev_[j] * stddev_[j];
        const double delta = x[j] - mean_[j];
        e.value += -0.5 * (kLog2Pi + std::log(var)) - 0.5 * delta * delta / var;
        e.grad[j] = -delta / var;
        e.hess_diag[j] = -1.0 / var;
    }
    return e;
}

UniformBoxPrior::UniformBoxPrior(Eigen::VectorXd lo, Eigen::VectorXd hi)
    : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size() || lo_.size() == 0 || ((hi_ - lo_).minCoeff() <= 0.0))
        throw std::invalid_argument("uniform prior box is degenerate");
    log_density_ = -(hi_ - lo_).array().log().sum();
}

PriorEval UniformBoxPrior::evaluate(const Eigen::VectorXd& x) const {
    if (x.size() != lo_.size())
        throw std::invalid_argument("prior input dimension mismatch");
    PriorEval e;
    e.grad = Eigen::VectorXd::Zero(dim());
    e.hess_diag = Eigen::VectorXd::Zero(dim());
    const bool inside = (x.array() >= lo_.array()).all() && (x.array() <= hi_.array()).all();
    e.value = inside ? log_density_ : kNegInf;
    return e;
}

JointDensityModel::JointDensityModel(std::shared_ptr<const ForwardModel> forward,
                                     std::shared_ptr<const Likelihood> likelihood,
                                     std::shared_ptr<const Prior> xi_prior,
                                     std::shared_ptr<const Prior> theta_prior,
                                     Eigen::VectorXd data)
    : forward_(std::move(forward)),
      likelihood_(std::move(likelihood)),
      xi_prior_(std::move(xi_prior)),
      theta_prior_(std::move(theta_prior)),
      data_(std::move(data)) {
    if (static_cast<bool>(forward_) != static_cast<bool>(likelihood_))
        throw std::invalid_argument("forward model and likelihood must come together");
    if (forward_) {
        xi_dim_ = forward_->input_dim();
        if (data_.size() != forward_->output_dim())
            throw std::invalid_argument("data length does not match forward model output");
        if (xi_prior_ && xi_prior_->dim() != xi_dim_)
            throw std::invalid_argument("xi prior dimension does not match forward model");
    } else if (xi_prior_) {
        xi_dim_ = xi_prior_->dim();
    } else {
        throw std::invalid_argument("need a forward model or a prior to define the target");
    }
    theta_dim_ = likelihood_ ? likelihood_->theta_dim() : 0;
    if (theta_dim_ > 0 && theta_prior_ && theta_prior_->dim() != 1)
        throw std::invalid_argument("theta prior must be one dimensional");
}

const ForwardEval& JointDensityModel::forward_at(const Eigen::VectorXd& xi,
                                                 bool want_hess) const {
    if (cache_filled_ && cached_xi_ == xi && cached_bundle_.has_jacobian &&
        (!want_hess || cached_bundle_.has_hess_diag))
        return cached_bundle_;
    cached_bundle_ = forward_->evaluate(xi, true, want_hess);
    cached_xi_ = xi;
    cache_filled_ = true;
    ++forward_evals_;
    return cached_bundle_;
}

DensityEval JointDensityModel::evaluate(const Eigen::VectorXd& point,
                                        bool want_hess) const {
    if (point.size() != dim())
        throw std::invalid_argument("parameter vector has wrong dimension");

    DensityEval out;
    out.grad = Eigen::VectorXd::Zero(dim());
    out.has_hess = want_hess;
    if (want_hess) out.hess_diag = Eigen::VectorXd::Zero(dim());

    const Eigen::VectorXd xi = point.head(xi_dim_);
    const double theta = theta_dim_ > 0 ? point[xi_dim_] : 0.0;

    // Priors first: outside their support the forward solve is skipped.
    if (xi_prior_) {
        const PriorEval pe = xi_prior_->evaluate(xi);
        if (!std::isfinite(pe.value)) {
            out.value = kNegInf;
            out.grad.setZero();
            if (want_hess) out.hess_diag.setZero();
            return out;
        }
        out.value += pe.value;
        out.grad.head(xi_dim_) += pe.grad;
        if (want_hess) out.hess_diag.head(xi_dim_) += pe.hess_diag;
    }
    if (theta_dim_ > 0 && theta_prior_) {
        const PriorEval pe = theta_prior_->evaluate(Eigen::VectorXd::Constant(1, theta));
        if (!std::isfinite(pe.value)) {
            out.value = kNegInf;
            out.grad.setZero();
            if (want_hess) out.hess_diag.setZero();
            return out;
        }
        out.value += pe.value;
        out.grad[xi_dim_] += pe.grad[0];
        if (want_hess) out.hess_diag[xi_dim_] += pe.hess_diag[0];
    }

    if (forward_) {
        const ForwardEval& fe = forward_at(xi, want_hess);
        const LikelihoodEval le = likelihood_->evaluate(data_, fe.value, theta);
        out.value += le.value;
        out.grad.head(xi_dim_) += fe.jacobian.transpose() * le.grad_f;
        if (theta_dim_ > 0) out.grad[xi_dim_] += le.grad_theta;
        if (want_hess) {
            for (int j = 0; j < xi_dim_; ++j) {
                double acc = 0.0;
                for (int r = 0; r < fe.value.size(); ++r)
                    acc += le.hess_ff_diag[r] * fe.jacobian(r, j) * fe.jacobian(r, j) +
                           le.grad_f[r] * fe.hess_diag(r, j);
                out.hess_diag[j] += acc;
            }
            if (theta_dim_ > 0) out.hess_diag[xi_dim_] += le.hess_theta_theta;
        }
    }
    return out;
}

}  // namespace gmvi
