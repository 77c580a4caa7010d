#include <cmath>
#include <memory>
#include <random>

#include <doctest.h>

#include "finite_diff.hpp"
#include "gmvi/elbo.hpp"
#include "oracles.hpp"

using namespace gmvi;

namespace {

// Linear forward map f = A xi.
class LinearModel : public ForwardModel {
  public:
    explicit LinearModel(Eigen::MatrixXd A) : A_(std::move(A)) {}
    int input_dim() const override { return static_cast<int>(A_.cols()); }
    int output_dim() const override { return static_cast<int>(A_.rows()); }
    ForwardEval evaluate(const Eigen::VectorXd& xi, bool want_jacobian,
                         bool want_hess_diag) const override {
        ForwardEval e;
        e.value = A_ * xi;
        if (want_jacobian) {
            e.jacobian = A_;
            e.has_jacobian = true;
        }
        if (want_hess_diag) {
            e.hess_diag = Eigen::MatrixXd::Zero(A_.rows(), A_.cols());
            e.has_hess_diag = true;
        }
        return e;
    }

  private:
    Eigen::MatrixXd A_;
};

// Smooth non-Gaussian 2-d target with an easy diagonal Hessian.
class QuarticTarget : public LogDensity {
  public:
    int dim() const override { return 2; }
    DensityEval evaluate(const Eigen::VectorXd& w, bool want_hess) const override {
        const double a0 = 0.1, a1 = 0.05, b0 = 0.4, b1 = 0.7, c = 0.3;
        DensityEval e;
        e.value = -(a0 * std::pow(w[0], 4) + a1 * std::pow(w[1], 4) +
                    b0 * w[0] * w[0] + b1 * w[1] * w[1] + c * w[0] * w[1]);
        e.grad.resize(2);
        e.grad[0] = -(4 * a0 * std::pow(w[0], 3) + 2 * b0 * w[0] + c * w[1]);
        e.grad[1] = -(4 * a1 * std::pow(w[1], 3) + 2 * b1 * w[1] + c * w[0]);
        if (want_hess) {
            e.hess_diag.resize(2);
            e.hess_diag[0] = -(12 * a0 * w[0] * w[0] + 2 * b0);
            e.hess_diag[1] = -(12 * a1 * w[1] * w[1] + 2 * b1);
            e.has_hess = true;
        }
        return e;
    }
};

MixtureState single(double mean, double var) {
    MixtureState q;
    q.weights = Eigen::VectorXd::Ones(1);
    q.means = Eigen::MatrixXd::Constant(1, 1, mean);
    q.variances = Eigen::MatrixXd::Constant(1, 1, var);
    return q;
}

MixtureState random_state(std::mt19937_64& rng, int L, int d) {
    std::uniform_real_distribution<double> unif(0.3, 1.2);
    std::normal_distribution<double> normal(0.0, 1.0);
    MixtureState q;
    q.weights.resize(L);
    q.means.resize(L, d);
    q.variances.resize(L, d);
    for (int i = 0; i < L; ++i) {
        q.weights[i] = unif(rng);
        for (int j = 0; j < d; ++j) {
            q.means(i, j) = normal(rng);
            q.variances(i, j) = unif(rng);
        }
    }
    q.weights /= q.weights.sum();
    return q;
}

}  // namespace

TEST_CASE("Taylor terms on hand-built linearizations") {
    MixtureState q;
    q.weights = Eigen::Vector2d(0.5, 0.5);
    q.means = Eigen::MatrixXd::Zero(2, 1);
    q.means << -1.0, 1.0;
    q.variances = Eigen::MatrixXd::Ones(2, 1);

    ComponentLinearization lin;
    lin.values = Eigen::Vector2d(-1.0, -3.0);
    lin.grads = Eigen::MatrixXd::Zero(2, 1);
    lin.hess_diags = Eigen::MatrixXd::Zero(2, 1);
    lin.has_hess = true;

    CHECK(elbo_L0(q, lin) == doctest::Approx(-2.0));
    CHECK(elbo_L2(q, lin) == doctest::Approx(-2.0));  // zero curvature

    // J = -w^2/2 around mu = 0 with variance 2: the trace term gives -1.
    MixtureState one = single(0.0, 2.0);
    ComponentLinearization quad;
    quad.values = Eigen::VectorXd::Zero(1);
    quad.grads = Eigen::MatrixXd::Zero(1, 1);
    quad.hess_diags = Eigen::MatrixXd::Constant(1, 1, -1.0);
    quad.has_hess = true;
    CHECK(elbo_L2(one, quad) == doctest::Approx(-1.0));

    // F_a = H0 + L_a, and lowering any C_i lowers F_a.
    const double f0 = elbo_F(q, lin, 0);
    CHECK(f0 == doctest::Approx(entropy_bound(q) + elbo_L0(q, lin)).epsilon(1e-14));
    lin.values[1] -= 0.5;
    CHECK(elbo_F(q, lin, 0) < f0);
    CHECK_THROWS_AS(elbo_F(q, lin, 1), std::invalid_argument);
}

TEST_CASE("order-2 bound reproduces Monte Carlo expectation for a quadratic target") {
    // J is the log density of N(0.7, 0.25) plus its normalizer: curvature -4.
    auto prior = std::make_shared<GaussianPrior>(Eigen::VectorXd::Constant(1, 0.7),
                                                 Eigen::VectorXd::Constant(1, 0.5));
    JointDensityModel target(nullptr, nullptr, prior, nullptr, {});

    MixtureState q;
    q.weights = Eigen::Vector2d(0.3, 0.7);
    q.means = Eigen::MatrixXd(2, 1);
    q.means << 0.0, 1.0;
    q.variances = Eigen::MatrixXd(2, 1);
    q.variances << 0.5, 0.2;

    const ComponentLinearization lin = linearize(target, q.means, true);
    const double l0 = elbo_L0(q, lin);
    const double l2 = elbo_L2(q, lin);

    std::mt19937_64 rng(2024);
    const int n = 1000000;
    double acc = 0.0, acc2 = 0.0;
    for (int k = 0; k < n; ++k) {
        const double j = target.evaluate(q.sample(rng), false).value;
        acc += j;
        acc2 += j * j;
    }
    const double mc = acc / n;
    const double se = std::sqrt((acc2 / n - mc * mc) / n);

    // Quadratic J: the second-order expansion is exact, order zero misses
    // exactly the half-trace term.
    CHECK(std::abs(l2 - mc) < 4.0 * se);
    const double half_trace = l2 - l0;
    CHECK(half_trace ==
          doctest::Approx(0.5 * (0.3 * 0.5 + 0.7 * 0.2) * -4.0).epsilon(1e-12));
    CHECK(std::abs((mc - l0) - half_trace) < 4.0 * se);
}

TEST_CASE("at the exact conjugate posterior the order-2 bound hits the evidence") {
    Eigen::MatrixXd A = Eigen::MatrixXd::Ones(3, 1);
    Eigen::VectorXd y(3);
    y << 0.9, 1.1, 1.4;
    const double sigma = 0.5;
    auto prior = std::make_shared<GaussianPrior>(Eigen::VectorXd::Zero(1),
                                                 Eigen::VectorXd::Ones(1));
    JointDensityModel model(std::make_shared<LinearModel>(A),
                            std::make_shared<FixedGaussianLikelihood>(sigma), prior,
                            nullptr, y);

    const auto truth = testsupport::conjugate_gaussian(A, y, sigma,
                                                       Eigen::VectorXd::Zero(1),
                                                       Eigen::VectorXd::Ones(1));
    CHECK(truth.mean[0] == doctest::Approx(1.0461538461538462).epsilon(1e-14));
    CHECK(truth.cov(0, 0) == doctest::Approx(0.07692307692307693).epsilon(1e-14));
    CHECK(truth.log_evidence == doctest::Approx(-2.8060025828187967).epsilon(1e-12));

    const MixtureState q = single(truth.mean[0], truth.cov(0, 0));
    const ComponentLinearization lin = linearize(model, q.means, true);
    const double gap = 0.5 * (1.0 - std::log(2.0));  // single-component entropy slack
    CHECK(elbo_F(q, lin, 2) + gap ==
          doctest::Approx(truth.log_evidence).epsilon(1e-10));

    // The same state is stationary: mean gradient of F0 and variance gradient
    // of F2 both vanish, and the variance root is -1 / curvature.
    const ElboGradients g0 = elbo_grads(q, lin, 0);
    const ElboGradients g2 = elbo_grads(q, lin, 2);
    CHECK(std::abs(g0.dmeans()(0, 0)) < 1e-9);
    CHECK(std::abs(g2.dvariances()(0, 0)) < 1e-9);
    CHECK(truth.cov(0, 0) == doctest::Approx(-1.0 / lin.hess_diags(0, 0)).epsilon(1e-12));
}

TEST_CASE("bound gradients match finite differences") {
    QuarticTarget target;
    std::mt19937_64 rng(5);
    const int L = 3, d = 2;

    for (int trial = 0; trial < 5; ++trial) {
        const MixtureState q = random_state(rng, L, d);
        const ComponentLinearization lin = linearize(target, q.means, true);
        const ElboGradients g0 = elbo_grads(q, lin, 0);
        const ElboGradients g2 = elbo_grads(q, lin, 2);

        // Mean gradient of F0, with the linearization recomputed at each
        // perturbed state since the values move with the means.
        const auto f0_of_means = [&](const Eigen::VectorXd& flat) {
            MixtureState p = q;
            for (int i = 0; i < L; ++i)
                for (int j = 0; j < d; ++j) p.means(i, j) = flat[i * d + j];
            return elbo_F(p, linearize(target, p.means, false), 0);
        };
        Eigen::VectorXd means_flat(L * d), dmeans_flat(L * d);
        for (int i = 0; i < L; ++i)
            for (int j = 0; j < d; ++j) {
                means_flat[i * d + j] = q.means(i, j);
                dmeans_flat[i * d + j] = g0.dmeans()(i, j);
            }
        CHECK(testsupport::max_rel_error(
                  dmeans_flat,
                  testsupport::fd_gradient(f0_of_means, means_flat, 1e-5)) < 1e-4);

        // Weight and variance gradients of F2 with the linearization held
        // fixed, which is exactly how the coordinate ascent uses them.
        const auto f2_of_weights = [&](const Eigen::VectorXd& w) {
            MixtureState p = q;
            p.weights = w;
            return elbo_F(p, lin, 2);
        };
        CHECK(testsupport::max_rel_error(
                  g2.dweights(),
                  testsupport::fd_gradient(f2_of_weights, q.weights, 1e-6)) < 1e-5);

        const auto f2_of_vars = [&](const Eigen::VectorXd& flat) {
            MixtureState p = q;
            for (int i = 0; i < L; ++i)
                for (int j = 0; j < d; ++j) p.variances(i, j) = flat[i * d + j];
            return elbo_F(p, lin, 2);
        };
        Eigen::VectorXd vars_flat(L * d), dvars_flat(L * d);
        for (int i = 0; i < L; ++i)
            for (int j = 0; j < d; ++j) {
                vars_flat[i * d + j] = q.variances(i, j);
                dvars_flat[i * d + j] = g2.dvariances()(i, j);
            }
        CHECK(testsupport::max_rel_error(
                  dvars_flat, testsupport::fd_gradient(f2_of_vars, vars_flat, 1e-6)) <
              1e-5);
    }
}

TEST_CASE("order-0 bound has no variance coupling beyond entropy") {
    QuarticTarget target;
    std::mt19937_64 rng(8);
    const MixtureState q = random_state(rng, 2, 2);
    const ComponentLinearization lin = linearize(target, q.means, true);
    const ElboGradients g0 = elbo_grads(q, lin, 0);
    const EntropyGradients ent = entropy_bound_gradients(q);
    CHECK((g0.dvariances() - ent.dvariances).norm() == 0.0);
}

TEST_CASE("mean gradient of the order-2 bound is refused") {
    QuarticTarget target;
    std::mt19937_64 rng(9);
    const MixtureState q = random_state(rng, 2, 2);
    const ComponentLinearization lin = linearize(target, q.means, true);
    CHECK_THROWS_AS(elbo_grads(q, lin, 2).dmeans(), std::logic_error);
    CHECK_NOTHROW(elbo_grads(q, lin, 0).dmeans());
}

TEST_CASE("bound value is invariant to component relabeling") {
    QuarticTarget target;
    std::mt19937_64 rng(10);
    MixtureState q = random_state(rng, 3, 2);
    const double f2 = elbo_F(q, linearize(target, q.means, true), 2);

    MixtureState p = q;
    const std::array<int, 3> perm = {2, 0, 1};
    for (int i = 0; i < 3; ++i) {
        p.weights[i] = q.weights[perm[i]];
        p.means.row(i) = q.means.row(perm[i]);
        p.variances.row(i) = q.variances.row(perm[i]);
    }
    CHECK(elbo_F(p, linearize(target, p.means, true), 2) ==
          doctest::Approx(f2).epsilon(1e-13));
}
