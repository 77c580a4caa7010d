#include "gmvi/mcmc.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "gmvi/numeric_io.hpp"

namespace gmvi {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log N(b | a + (dt^2/2) grad_a, dt^2 I) up to the constant, which cancels
// in the ratio.
double proposal_logpdf(const Eigen::VectorXd& b, const Eigen::VectorXd& a,
                       const Eigen::VectorXd& grad_a, double dt) {
    const Eigen::VectorXd delta = b - a - 0.5 * dt * dt * grad_a;
    return -delta.squaredNorm() / (2.0 * dt * dt);
}
}  // namespace

double mala_log_acceptance(const Eigen::VectorXd& x, const DensityEval& cur,
                           const Eigen::VectorXd& xp, const DensityEval& prop,
                           double dt) {
    if (!std::isfinite(prop.value)) return kNegInf;
    return prop.value - cur.value + proposal_logpdf(x, xp, prop.grad, dt) -
           proposal_logpdf(xp, x, cur.grad, dt);
}

Chain mala_sample(const LogDensity& target, const Eigen::VectorXd& omega0,
                  const MalaConfig& cfg) {
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("step size must be positive");
    if (cfg.total_steps <= cfg.burn_in || cfg.burn_in < 0 || cfg.thinning < 1)
        throw std::invalid_argument("need total_steps > burn_in and thinning >= 1");
    if (cfg.jump_probability < 0.0 || cfg.jump_probability > 1.0 ||
        (cfg.jump_probability > 0.0 &&
         (cfg.jump_coordinate < 0 || cfg.jump_coordinate >= target.dim())))
        throw std::invalid_argument("bad mirror-move settings");
    if (omega0.size() != target.dim())
        throw std::invalid_argument("start point has wrong dimension");

    const int d = target.dim();
    Eigen::VectorXd x = omega0;
    DensityEval cur = target.evaluate(x, false);
    if (!std::isfinite(cur.value))
        throw std::invalid_argument("chain start has non-finite target value");

    const long n = (cfg.total_steps - cfg.burn_in) / cfg.thinning;
    Chain chain;
    chain.samples.resize(n, d);

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    long accepted = 0, kept = 0;
    for (long step = 1; step <= cfg.total_steps; ++step) {
        if (!cur.grad.allFinite())
            throw std::runtime_error("non-finite gradient at step " +
                                     std::to_string(step));

        Eigen::VectorXd xp;
        double log_alpha;
        if (cfg.jump_probability > 0.0 && unif(rng) < cfg.jump_probability) {
            xp = x;
            xp[cfg.jump_coordinate] = 2.0 * cfg.jump_center - x[cfg.jump_coordinate];
            const DensityEval prop = target.evaluate(xp, false);
            log_alpha = std::isfinite(prop.value) ? prop.value - cur.value : kNegInf;
            if (std::log(unif(rng)) < log_alpha) {
                x = xp;
                cur = prop;
                ++accepted;
            }
        } else {
            Eigen::VectorXd eta(d);
            for (int j = 0; j < d; ++j) eta[j] = normal(rng);
            xp = x + 0.5 * cfg.dt * cfg.dt * cur.grad + cfg.dt * eta;
            const DensityEval prop = target.evaluate(xp, false);
            log_alpha = mala_log_acceptance(x, cur, xp, prop, cfg.dt);
            if (std::log(unif(rng)) < log_alpha) {
                x = xp;
                cur = prop;
                ++accepted;
            }
        }

        if (step > cfg.burn_in && (step - cfg.burn_in) % cfg.thinning == 0 && kept < n)
            chain.samples.row(kept++) = x.transpose();
    }

    chain.acceptance_rate = static_cast<double>(accepted) / cfg.total_steps;
    chain.mean = chain.samples.colwise().mean();
    chain.stddev.resize(d);
    for (int j = 0; j < d; ++j) {
        const Eigen::ArrayXd centered = chain.samples.col(j).array() - chain.mean[j];
        chain.stddev[j] = std::sqrt(centered.square().sum() / (n - 1));
    }
    return chain;
}

std::string chain_csv(const Chain& chain) {
    std::string out;
    for (int j = 0; j < chain.samples.cols(); ++j) {
        if (j) out += ',';
        out += "omega" + std::to_string(j);
    }
    out += '\n';
    for (long i = 0; i < chain.samples.rows(); ++i) {
        for (int j = 0; j < chain.samples.cols(); ++j) {
            if (j) out += ',';
            out += format_double(chain.samples(i, j));
        }
        out += '\n';
    }
    return out;
}

nlohmann::json chain_summary_json(const Chain& chain) {
    nlohmann::json j;
    j["samples"] = chain.samples.rows();
    j["acceptance_rate"] = chain.acceptance_rate;
    j["mean"] = std::vector<double>(chain.mean.begin(), chain.mean.end());
    j["stddev"] = std::vector<double>(chain.stddev.begin(), chain.stddev.end());
    return j;
}

}  // namespace gmvi
