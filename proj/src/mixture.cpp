#include "gmvi/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace gmvi {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kSimplexTol = 1e-8;

// log N(mu_r | mu_i, diag(var_r + var_i)); symmetric in (r, i).
double log_pair_density(const MixtureState& q, int r, int i) {
    double acc = 0.0;
    for (int j = 0; j < q.dim(); ++j) {
        const double s = q.variances(r, j) + q.variances(i, j);
        const double delta = q.means(r, j) - q.means(i, j);
        acc += kLog2Pi + std::log(s) + delta * delta / s;
    }
    return -0.5 * acc;
}

// log sum_r exp(terms[r]), tolerating -inf entries.
double log_sum_exp(const Eigen::VectorXd& terms) {
    const double m = terms.maxCoeff();
    if (!std::isfinite(m)) return m;
    double acc = 0.0;
    for (int r = 0; r < terms.size(); ++r) acc += std::exp(terms[r] - m);
    return m + std::log(acc);
}

// log q_i for every component: log q_i = LSE_r(log w_r + log N(mu_i|mu_r,.)).
// Also returns the pairwise log-density matrix for reuse by the gradients.
void pair_log_densities(const MixtureState& q, Eigen::MatrixXd& log_n,
                        Eigen::VectorXd& log_q) {
    const int L = q.components();
    log_n.resize(L, L);
    for (int i = 0; i < L; ++i)
        for (int r = 0; r <= i; ++r)
            log_n(i, r) = log_n(r, i) = log_pair_density(q, r, i);

    Eigen::VectorXd log_w(L);
    for (int r = 0; r < L; ++r) log_w[r] = std::log(q.weights[r]);

    log_q.resize(L);
    for (int i = 0; i < L; ++i)
        log_q[i] = log_sum_exp(log_n.col(i) + log_w);
}

}  // namespace

void MixtureState::validate(double var_lo, double var_hi) const {
    const int L = components();
    const int d = dim();
    if (L < 1 || d < 1)
        throw std::invalid_argument("mixture needs at least one component and one dimension");
    if (means.rows() != L || variances.rows() != L || variances.cols() != d)
        throw std::invalid_argument("mixture shape mismatch between weights, means and variances");
    if (!weights.allFinite() || !means.allFinite() || !variances.allFinite())
        throw std::invalid_argument("mixture parameters must be finite");
    if (weights.minCoeff() < 0.0)
        throw std::invalid_argument("mixture weights must be nonnegative");
    if (std::abs(weights.sum() - 1.0) > kSimplexTol)
        throw std::invalid_argument("mixture weights must sum to one");
    if (variances.minCoeff() < var_lo || variances.maxCoeff() > var_hi)
        throw std::invalid_argument("mixture variances outside allowed box");
}

Eigen::VectorXd MixtureState::sample(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    int pick = components() - 1;
    double cum = 0.0;
    for (int i = 0; i < components(); ++i) {
        cum += weights[i];
        if (u <= cum) {
            pick = i;
            break;
        }
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd draw(dim());
    for (int j = 0; j < dim(); ++j)
        draw[j] = means(pick, j) + std::sqrt(variances(pick, j)) * normal(rng);
    return draw;
}

nlohmann::json MixtureState::to_json() const {
    nlohmann::json j;
    j["L"] = components();
    j["d"] = dim();
    j["weights"] = std::vector<double>(weights.begin(), weights.end());
    std::vector<double> m, v;
    m.reserve(means.size());
    v.reserve(variances.size());
    for (int i = 0; i < components(); ++i)
        for (int k = 0; k < dim(); ++k) {
            m.push_back(means(i, k));
            v.push_back(variances(i, k));
        }
    j["means"] = m;
    j["variances"] = v;
    return j;
}

MixtureState MixtureState::from_json(const nlohmann::json& j) {
    const int L = j.at("L").get<int>();
    const int d = j.at("d").get<int>();
    const auto w = j.at("weights").get<std::vector<double>>();
    const auto m = j.at("means").get<std::vector<double>>();
    const auto v = j.at("variances").get<std::vector<double>>();
    if (L < 1 || d < 1 || static_cast<int>(w.size()) != L ||
        static_cast<int>(m.size()) != L * d || static_cast<int>(v.size()) != L * d)
        throw std::invalid_argument("mixture JSON has inconsistent shapes");
    MixtureState q;
    q.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), L);
    q.means.resize(L, d);
    q.variances.resize(L, d);
    for (int i = 0; i < L; ++i)
        for (int k = 0; k < d; ++k) {
            q.means(i, k) = m[i * d + k];
            q.variances(i, k) = v[i * d + k];
        }
    q.validate(std::numeric_limits<double>::min(),
               std::numeric_limits<double>::infinity());
    return q;
}

double mixture_logpdf(const MixtureState& q, const Eigen::VectorXd& point) {
    if (point.size() != q.dim())
        throw std::invalid_argument("point dimension does not match mixture");
    const int L = q.components();
    Eigen::VectorXd terms(L);
    for (int i = 0; i < L; ++i) {
        double acc = 0.0;
        for (int j = 0; j < q.dim(); ++j) {
            const double s = q.variances(i, j);
            const double delta = point[j] - q.means(i, j);
            acc += kLog2Pi + std::log(s) + delta * delta / s;
        }
        terms[i] = std::log(q.weights[i]) - 0.5 * acc;
    }
    return log_sum_exp(terms);
}

double entropy_bound(const MixtureState& q) {
    Eigen::MatrixXd log_n;
    Eigen::VectorXd log_q;
    pair_log_densities(q, log_n, log_q);
    return -q.weights.dot(log_q);
}

EntropyGradients entropy_bound_gradients(const MixtureState& q) {
    const int L = q.components();
    const int d = q.dim();
    Eigen::MatrixXd log_n;
    Eigen::VectorXd log_q;
    pair_log_densities(q, log_n, log_q);

    EntropyGradients g;
    g.dweights.resize(L);
    g.dmeans.setZero(L, d);
    g.dvariances.setZero(L, d);

    for (int i = 0; i < L; ++i) {
        double resp = 0.0;  // sum_r w_r N(mu_r|mu_i,.) / q_r
        for (int r = 0; r < L; ++r)
            resp += q.weights[r] * std::exp(log_n(r, i) - log_q[r]);
        g.dweights[i] = -log_q[i] - resp;
    }

    for (int i = 0; i < L; ++i) {
        for (int r = 0; r < L; ++r) {
            const double t = q.weights[i] * q.weights[r] *
                             (std::exp(log_n(r, i) - log_q[i]) +
                              std::exp(log_n(r, i) - log_q[r]));
            for (int j = 0; j < d; ++j) {
                const double s = q.variances(r, j) + q.variances(i, j);
                const double a = (q.means(r, j) - q.means(i, j)) / s;
                g.dmeans(i, j) -= t * a;
                g.dvariances(i, j) += 0.5 * t * (1.0 / s - a * a);
            }
        }
    }
    return g;
}

MixtureMoments mixture_moments(const MixtureState& q) {
    const int d = q.dim();
    MixtureMoments m;
    m.mean = q.means.transpose() * q.weights;
    m.stddev.resize(d);
    for (int j = 0; j < d; ++j) {
        const double second = q.weights.dot(
            (q.variances.col(j) + q.means.col(j).cwiseProduct(q.means.col(j))).matrix());
        m.stddev[j] = std::sqrt(std::max(0.0, second - m.mean[j] * m.mean[j]));
    }
    return m;
}

double mixture_marginal_quantile(const MixtureState& q, int dim, double p) {
    if (dim < 0 || dim >= q.dim()) throw std::invalid_argument("quantile: bad coordinate");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantile: p must be in (0,1)");

    const Eigen::VectorXd sd = q.variances.col(dim).cwiseSqrt();
    const auto cdf = [&](double x) {
        double c = 0.0;
        for (int i = 0; i < q.components(); ++i)
            c += q.weights[i] *
                 0.5 * std::erfc((q.means(i, dim) - x) / (sd[i] * std::numbers::sqrt2));
        return c;
    };

    double lo = (q.means.col(dim) - 12.0 * sd).minCoeff();
    double hi = (q.means.col(dim) + 12.0 * sd).maxCoeff();
    for (int it = 0; it < 200 && hi - lo > 1e-14 * (1.0 + std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace gmvi
