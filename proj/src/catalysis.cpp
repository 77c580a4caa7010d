#include "gmvi/catalysis.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <boost/numeric/odeint.hpp>
#include <boost/numeric/odeint/external/eigen/eigen.hpp>

namespace ode = boost::numeric::odeint;

namespace gmvi {

namespace {

constexpr int kSpecies = 6;
constexpr int kRates = 5;
constexpr double kRelTol = 1e-10;
constexpr double kAbsTol = 1e-12;

using Mat6 = Eigen::Matrix<double, kSpecies, kSpecies>;
using Vec6 = Eigen::Matrix<double, kSpecies, 1>;

Mat6 rate_matrix(const Eigen::VectorXd& k) {
    Mat6 A = Mat6::Zero();
    A(0, 0) = -k[0];
    A(1, 0) = k[0];
    A(1, 1) = -(k[1] + k[3] + k[4]);
    A(2, 1) = k[1];
    A(2, 2) = -k[2];
    A(3, 2) = k[2];
    A(4, 1) = k[3];
    A(5, 1) = k[4];
    return A;
}

// (dA/dkappa_j) y: each rate moves mass out of one species into another.
Vec6 rate_direction(int j, const Eigen::Ref<const Eigen::VectorXd>& y) {
    Vec6 out = Vec6::Zero();
    switch (j) {
        case 0: out[0] = -y[0]; out[1] = y[0]; break;
        case 1: out[1] = -y[1]; out[2] = y[1]; break;
        case 2: out[2] = -y[2]; out[3] = y[2]; break;
        case 3: out[1] = -y[1]; out[4] = y[1]; break;
        case 4: out[1] = -y[1]; out[5] = y[1]; break;
        default: throw std::logic_error("rate_direction: bad index");
    }
    return out;
}

void check_times(const std::vector<double>& times) {
    if (times.empty()) throw std::invalid_argument("kinetics: no output times");
    double prev = -1.0;
    for (double t : times) {
        if (!std::isfinite(t) || t < 0.0 || t <= prev)
            throw std::invalid_argument("kinetics: times must be increasing and nonnegative");
        prev = t;
    }
}

// Integrates dx/dt = rhs(x) from x0 at t=0 and records the state at each
// requested time. Extreme rates make the explicit stepper shrink its step
// toward zero, so a budget on right-hand-side calls turns a de-facto hang
// into a reported failure; odeint's own stuck-controller signal
// (std::overflow_error) is rewrapped the same way.
template <typename Rhs>
Eigen::MatrixXd integrate_at(const Rhs& rhs, const Eigen::VectorXd& x0,
                             const std::vector<double>& times) {
    std::vector<double> grid;
    grid.reserve(times.size() + 1);
    if (times.front() > 0.0) grid.push_back(0.0);
    grid.insert(grid.end(), times.begin(), times.end());

    constexpr long kRhsBudget = 3'000'000;
    long rhs_calls = 0;
    auto counted_rhs = [&](const Eigen::VectorXd& x, Eigen::VectorXd& dxdt, double t) {
        if (++rhs_calls > kRhsBudget)
            throw std::runtime_error("kinetics integration failed: step budget exceeded");
        rhs(x, dxdt, t);
    };

    Eigen::MatrixXd out(static_cast<long>(times.size()), x0.size());
    long row = -static_cast<long>(grid.size() - times.size());
    auto stepper = ode::make_dense_output(kAbsTol, kRelTol,
                                          ode::runge_kutta_dopri5<Eigen::VectorXd>());
    Eigen::VectorXd state = x0;
    try {
        ode::integrate_times(stepper, counted_rhs, state, grid.begin(), grid.end(), 1e-6,
                             [&](const Eigen::VectorXd& x, double) {
                                 if (row >= 0) out.row(row) = x.transpose();
                                 ++row;
                             });
    } catch (const std::overflow_error& err) {
        throw std::runtime_error(std::string("kinetics integration failed: ") + err.what());
    }
    return out;
}

Eigen::VectorXd initial_state(int size) {
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(size);
    x0[0] = 1.0;
    return x0;
}

std::vector<double> measurement_times() {
    std::vector<double> times(6);
    for (int m = 0; m < 6; ++m) times[m] = (m + 1) / 6.0;
    return times;
}

// Augmented trajectory [u | du/dxi | d^2u/dxi^2] at the given times; the
// sensitivity blocks are dropped when fewer are requested. The variational
// system for v_j = du/dxi_j and w_j = d^2u/dxi_j^2 of udot = A(kappa)u with
// kappa_j = e^{xi_j} is
//   vdot_j = A v_j + kappa_j (dA/dkappa_j) u
//   wdot_j = A w_j + 2 kappa_j (dA/dkappa_j) v_j + kappa_j (dA/dkappa_j) u,
// all starting from zero.
Eigen::MatrixXd solve_augmented(const Eigen::VectorXd& xi,
                                const std::vector<double>& times, int blocks) {
    if (xi.size() != kRates || !xi.allFinite())
        throw std::invalid_argument("kinetics: xi must be 5 finite values");
    check_times(times);

    const Eigen::VectorXd kappa = xi.array().exp();
    const Mat6 A = rate_matrix(kappa);
    const int size = kSpecies * (1 + (blocks > 1 ? kRates : 0) + (blocks > 2 ? kRates : 0));

    auto rhs = [&A, &kappa, blocks, size](const Eigen::VectorXd& x, Eigen::VectorXd& dxdt,
                                          double) {
        dxdt.resize(size);
        const auto u = x.head(kSpecies);
        dxdt.head(kSpecies).noalias() = A * u;
        if (blocks < 2) return;
        for (int j = 0; j < kRates; ++j) {
            const auto vj = x.segment(kSpecies * (1 + j), kSpecies);
            dxdt.segment(kSpecies * (1 + j), kSpecies).noalias() = A * vj;
            dxdt.segment(kSpecies * (1 + j), kSpecies) += kappa[j] * rate_direction(j, u);
            if (blocks < 3) continue;
            const auto wj = x.segment(kSpecies * (1 + kRates + j), kSpecies);
            dxdt.segment(kSpecies * (1 + kRates + j), kSpecies).noalias() = A * wj;
            dxdt.segment(kSpecies * (1 + kRates + j), kSpecies) +=
                kappa[j] * (2.0 * rate_direction(j, vj) + rate_direction(j, u));
        }
    };
    return integrate_at(rhs, initial_state(size), times);
}

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream row(line);
    std::string field;
    while (std::getline(row, field, ',')) fields.push_back(field);
    return fields;
}

}  // namespace

Eigen::MatrixXd solve_kinetics(const Eigen::VectorXd& kappa,
                               const std::vector<double>& times) {
    if (kappa.size() != kRates || !kappa.allFinite() || (kappa.array() < 0.0).any())
        throw std::invalid_argument("kinetics: kappa must be 5 nonnegative values");
    check_times(times);
    const Mat6 A = rate_matrix(kappa);
    auto rhs = [&A](const Eigen::VectorXd& x, Eigen::VectorXd& dxdt, double) {
        dxdt.resize(kSpecies);
        dxdt.noalias() = A * x;
    };
    return integrate_at(rhs, initial_state(kSpecies), times);
}

Eigen::MatrixXd solve_kinetics_sensitivities(const Eigen::VectorXd& xi,
                                             const std::vector<double>& times) {
    return solve_augmented(xi, times, 3);
}

ForwardEval KineticsForwardModel::evaluate(const Eigen::VectorXd& xi, bool want_jacobian,
                                           bool want_hess_diag) const {
    const int blocks = want_hess_diag ? 3 : (want_jacobian ? 2 : 1);
    const Eigen::MatrixXd traj = solve_augmented(xi, measurement_times(), blocks);

    constexpr int observed[] = {0, 1, 3, 4, 5};
    ForwardEval out;
    out.value.resize(30);
    out.has_jacobian = want_jacobian || want_hess_diag;
    out.has_hess_diag = want_hess_diag;
    if (out.has_jacobian) out.jacobian.resize(30, kRates);
    if (out.has_hess_diag) out.hess_diag.resize(30, kRates);
    for (int m = 0; m < 6; ++m) {
        for (int s = 0; s < 5; ++s) {
            const int r = 5 * m + s;
            out.value[r] = traj(m, observed[s]);
            for (int j = 0; out.has_jacobian && j < kRates; ++j)
                out.jacobian(r, j) = traj(m, kSpecies * (1 + j) + observed[s]);
            for (int j = 0; out.has_hess_diag && j < kRates; ++j)
                out.hess_diag(r, j) = traj(m, kSpecies * (1 + kRates + j) + observed[s]);
        }
    }
    return out;
}

Eigen::VectorXd load_catalysis_observations(const std::string& csv_path) {
    std::ifstream file(csv_path);
    if (!file) throw std::runtime_error("cannot open " + csv_path);

    std::string line;
    std::getline(file, line);  // header
    std::vector<std::vector<std::string>> rows;
    while (std::getline(file, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_row(line);
        if (fields.size() != 7)
            throw std::runtime_error("bad row in " + csv_path + ": " + line);
        rows.push_back(std::move(fields));
    }
    if (rows.size() != 7 || std::stod(rows[0][0]) != 0.0 || std::stod(rows[0][1]) != 500.0)
        throw std::runtime_error("unexpected concentration table in " + csv_path);

    // Columns after t: NO3-, NO2-, X (unobserved), N2, NH3, N2O.
    constexpr int observed_column[] = {1, 2, 4, 5, 6};
    Eigen::VectorXd y(30);
    for (int m = 0; m < 6; ++m)
        for (int s = 0; s < 5; ++s)
            y[5 * m + s] = std::stod(rows[m + 1][observed_column[s]]) / 500.0;
    return y;
}

std::shared_ptr<JointDensityModel> make_catalysis_model(Eigen::VectorXd observations) {
    auto forward = std::make_shared<KineticsForwardModel>();
    auto likelihood = std::make_shared<IsoGaussianLikelihood>();
    auto xi_prior = std::make_shared<GaussianPrior>(Eigen::VectorXd::Zero(kRates),
                                                    Eigen::VectorXd::Ones(kRates));
    auto theta_prior = std::make_shared<GaussianPrior>(Eigen::VectorXd::Constant(1, -1.0),
                                                       Eigen::VectorXd::Ones(1));
    return std::make_shared<JointDensityModel>(forward, likelihood, xi_prior, theta_prior,
                                               std::move(observations));
}

}  // namespace gmvi
