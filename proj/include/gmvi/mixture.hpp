// Gaussian mixture variational family with diagonal covariances.
//
// The family is q(w) = sum_i weights[i] * N(w | means[i], diag(variances[i])).
// Entropy is handled through a Jensen lower bound built from pairwise
// Gaussian convolutions, which has a closed form and closed-form gradients.

#ifndef GMVI_MIXTURE_HPP
#define GMVI_MIXTURE_HPP

#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

namespace gmvi {

/// Default box for the diagonal variances during optimization.
inline constexpr double kDefaultVarianceLo = 1e-6;
inline constexpr double kDefaultVarianceHi = 1e2;

/// Weights, means and diagonal variances of an L-component Gaussian mixture
/// over a d-dimensional parameter vector.
struct MixtureState {
    Eigen::VectorXd weights;    // L, on the probability simplex
    Eigen::MatrixXd means;      // L x d, one row per component
    Eigen::MatrixXd variances;  // L x d, diagonal entries of each covariance

    int components() const { return static_cast<int>(weights.size()); }
    int dim() const { return static_cast<int>(means.cols()); }

    /// Checks simplex, variance-box and shape invariants; throws
    /// std::invalid_argument on violation.
    void validate(double var_lo = kDefaultVarianceLo,
                  double var_hi = kDefaultVarianceHi) const;

    /// Draws one sample: pick a component by weight, then a diagonal Gaussian.
    Eigen::VectorXd sample(std::mt19937_64& rng) const;

    nlohmann::json to_json() const;
    static MixtureState from_json(const nlohmann::json& j);
};

/// log q(w), evaluated with log-sum-exp over components.
double mixture_logpdf(const MixtureState& q, const Eigen::VectorXd& point);

/// Jensen lower bound H0[q] on the mixture entropy:
///   H0 = -sum_i w_i log q_i,   q_i = sum_j w_j N(mu_i | mu_j, S_i + S_j).
/// Exact for L = 1 up to the constant gap (d/2) log(2/e).
double entropy_bound(const MixtureState& q);

struct EntropyGradients {
    Eigen::VectorXd dweights;    // L
    Eigen::MatrixXd dmeans;      // L x d
    Eigen::MatrixXd dvariances;  // L x d (diagonal covariance entries)
};

/// Exact gradients of entropy_bound with respect to all mixture parameters.
/// Weight partials treat the weights as free (unnormalized) coordinates;
/// simplex handling is left to the caller.
EntropyGradients entropy_bound_gradients(const MixtureState& q);

struct MixtureMoments {
    Eigen::VectorXd mean;    // d
    Eigen::VectorXd stddev;  // d
};

/// Exact per-coordinate mean and standard deviation of the mixture:
/// mean_j = sum_i w_i mu_ij, var_j = sum_i w_i (v_ij + mu_ij^2) - mean_j^2.
MixtureMoments mixture_moments(const MixtureState& q);

/// p-quantile of the one-dimensional marginal along coordinate `dim`, found
/// by bisecting the mixture CDF. Requires 0 < p < 1.
double mixture_marginal_quantile(const MixtureState& q, int dim, double p);

}  // namespace gmvi

#endif
