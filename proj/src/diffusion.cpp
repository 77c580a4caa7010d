#include "gmvi/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <utility>

namespace gmvi {

namespace {

// slack for matching step counts against shutoff and measurement times
constexpr double kTimeTol = 1e-9;

void check_settings(const DiffusionSettings& s) {
    if (s.grid < 2) throw std::invalid_argument("grid needs at least 2 cells per side");
    if (!(s.dt > 0.0)) throw std::invalid_argument("time step must be positive");
    if (!(s.rho > 0.0)) throw std::invalid_argument("source radius must be positive");
    if (!(s.shutoff > 0.0)) throw std::invalid_argument("shutoff time must be positive");
    if (s.measurement_times.empty())
        throw std::invalid_argument("need at least one measurement time");
    double prev = 0.0;
    for (double t : s.measurement_times) {
        if (!(t > prev))
            throw std::invalid_argument("measurement times must be positive and increasing");
        if (std::abs(t - s.dt * std::lround(t / s.dt)) > kTimeTol)
            throw std::invalid_argument("measurement times must be multiples of dt");
        prev = t;
    }
}

}  // namespace

std::vector<Eigen::Vector2d> sensor_positions(SensorLayout layout) {
    switch (layout) {
        case SensorLayout::kCorners:
            return {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}};
        case SensorLayout::kMidpoints:
            return {{0.5, 0.0}, {0.5, 1.0}};
    }
    throw std::invalid_argument("unknown sensor layout");
}

Eigen::VectorXd source_cells(int grid, const Eigen::Vector2d& source,
                             double rho, int order, int axis) {
    if (grid < 2) throw std::invalid_argument("grid needs at least 2 cells per side");
    if (!(rho > 0.0)) throw std::invalid_argument("source radius must be positive");
    if (order < 0 || order > 2 || axis < 0 || axis > 1)
        throw std::invalid_argument("forcing selector out of range");

    const double h = 1.0 / grid;
    const double strength = 1.0 / (std::numbers::pi * rho);
    const double inv_r2 = 1.0 / (rho * rho);
    Eigen::VectorXd out(grid * grid);
    for (int iy = 0; iy < grid; ++iy) {
        const double dy = (iy + 0.5) * h - source.y();
        for (int ix = 0; ix < grid; ++ix) {
            const double dx = (ix + 0.5) * h - source.x();
            const double bump =
                strength * std::exp(-0.5 * (dx * dx + dy * dy) * inv_r2);
            const double d = axis == 0 ? dx : dy;
            double value = bump;
            if (order == 1) value = bump * d * inv_r2;
            if (order == 2) value = bump * (d * d * inv_r2 - 1.0) * inv_r2;
            out[iy * grid + ix] = value;
        }
    }
    return out;
}

HeatSolver::HeatSolver(DiffusionSettings settings) : settings_(std::move(settings)) {
    check_settings(settings_);
    const int n = settings_.grid;
    const double scale = settings_.dt * n * n;  // dt / h^2

    // I - dt * L for the 5-point zero-flux Laplacian; missing neighbors simply
    // drop out of the stencil, which is what makes the column sums vanish.
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(5) * n * n);
    for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
            const int i = iy * n + ix;
            int degree = 0;
            const int nbr[4][2] = {{ix - 1, iy}, {ix + 1, iy}, {ix, iy - 1}, {ix, iy + 1}};
            for (const auto& [jx, jy] : nbr) {
                if (jx < 0 || jx >= n || jy < 0 || jy >= n) continue;
                entries.emplace_back(i, jy * n + jx, -scale);
                ++degree;
            }
            entries.emplace_back(i, i, 1.0 + degree * scale);
        }
    }
    Eigen::SparseMatrix<double> step(n * n, n * n);
    step.setFromTriplets(entries.begin(), entries.end());
    backward_step_.compute(step);
    if (backward_step_.info() != Eigen::Success)
        throw std::runtime_error("backward Euler operator failed to factor");

    for (double t : settings_.measurement_times)
        snapshot_steps_.push_back(static_cast<int>(std::lround(t / settings_.dt)));
}

Eigen::MatrixXd HeatSolver::march(const Eigen::VectorXd& forcing) const {
    if (forcing.size() != cells())
        throw std::invalid_argument("forcing length does not match the grid");

    Eigen::MatrixXd snapshots(cells(), static_cast<int>(snapshot_steps_.size()));
    Eigen::VectorXd u = Eigen::VectorXd::Zero(cells());
    std::size_t next = 0;
    const int total = snapshot_steps_.back();
    for (int step = 1; step <= total; ++step) {
        if (step * settings_.dt <= settings_.shutoff + kTimeTol)
            u += settings_.dt * forcing;
        u = backward_step_.solve(u);
        if (step == snapshot_steps_[next]) snapshots.col(static_cast<int>(next++)) = u;
    }
    return snapshots;
}

double HeatSolver::sample(const Eigen::Ref<const Eigen::VectorXd>& field,
                          const Eigen::Vector2d& point) const {
    if (field.size() != cells())
        throw std::invalid_argument("field length does not match the grid");
    const int n = settings_.grid;
    const auto clamp = [n](double v) {
        return std::min(std::max(v, 0.0), static_cast<double>(n - 1));
    };
    const double cx = clamp(point.x() * n - 0.5);
    const double cy = clamp(point.y() * n - 0.5);
    const int ix = std::min(static_cast<int>(cx), n - 2);
    const int iy = std::min(static_cast<int>(cy), n - 2);
    const double fx = cx - ix;
    const double fy = cy - iy;
    return field[iy * n + ix] * (1.0 - fx) * (1.0 - fy) +
           field[iy * n + ix + 1] * fx * (1.0 - fy) +
           field[(iy + 1) * n + ix] * (1.0 - fx) * fy +
           field[(iy + 1) * n + ix + 1] * fx * fy;
}

DiffusionForwardModel::DiffusionForwardModel(SensorLayout layout,
                                             DiffusionSettings settings)
    : sensors_(sensor_positions(layout)), solver_(std::move(settings)) {}

int DiffusionForwardModel::output_dim() const {
    return static_cast<int>(sensors_.size() *
                            solver_.settings().measurement_times.size());
}

Eigen::VectorXd DiffusionForwardModel::read_sensors(const Eigen::MatrixXd& fields) const {
    const int num_sensors = static_cast<int>(sensors_.size());
    Eigen::VectorXd readings(output_dim());
    for (int k = 0; k < fields.cols(); ++k)
        for (int s = 0; s < num_sensors; ++s)
            readings[k * num_sensors + s] = solver_.sample(fields.col(k), sensors_[s]);
    return readings;
}

ForwardEval DiffusionForwardModel::evaluate(const Eigen::VectorXd& xi,
                                            bool want_jacobian,
                                            bool want_hess_diag) const {
    if (xi.size() != 2)
        throw std::invalid_argument("source location must have two coordinates");
    if (!xi.allFinite() || xi.minCoeff() < 0.0 || xi.maxCoeff() > 1.0)
        throw std::domain_error("source location lies outside the unit square");

    const Eigen::Vector2d source(xi[0], xi[1]);
    const int n = solver_.settings().grid;
    const double rho = solver_.settings().rho;

    ForwardEval out;
    out.value = read_sensors(solver_.march(source_cells(n, source, rho, 0, 0)));
    if (want_jacobian) {
        out.jacobian.resize(output_dim(), 2);
        for (int axis = 0; axis < 2; ++axis)
            out.jacobian.col(axis) =
                read_sensors(solver_.march(source_cells(n, source, rho, 1, axis)));
        out.has_jacobian = true;
    }
    if (want_hess_diag) {
        out.hess_diag.resize(output_dim(), 2);
        for (int axis = 0; axis < 2; ++axis)
            out.hess_diag.col(axis) =
                read_sensors(solver_.march(source_cells(n, source, rho, 2, axis)));
        out.has_hess_diag = true;
    }
    return out;
}

Eigen::VectorXd make_synthetic_diffusion_data(SensorLayout layout,
                                              const DiffusionSettings& settings,
                                              const Eigen::Vector2d& xi_true,
                                              double noise_sd,
                                              std::uint64_t seed) {
    if (!(noise_sd >= 0.0))
        throw std::invalid_argument("noise level must be nonnegative");
    DiffusionForwardModel model(layout, settings);
    Eigen::VectorXd readings = model.evaluate(xi_true, false, false).value;
    if (noise_sd > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> noise(0.0, noise_sd);
        for (Eigen::Index i = 0; i < readings.size(); ++i) readings[i] += noise(rng);
    }
    return readings;
}

std::shared_ptr<JointDensityModel> make_diffusion_model(SensorLayout layout,
                                                        Eigen::VectorXd observations,
                                                        DiffusionSettings settings) {
    auto forward = std::make_shared<DiffusionForwardModel>(layout, std::move(settings));
    auto likelihood = std::make_shared<IsoGaussianLikelihood>();
    auto xi_prior = std::make_shared<UniformBoxPrior>(Eigen::VectorXd::Zero(2),
                                                      Eigen::VectorXd::Ones(2));
    auto theta_prior = std::make_shared<GaussianPrior>(
        Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Ones(1));
    return std::make_shared<JointDensityModel>(forward, likelihood, xi_prior,
                                               theta_prior, std::move(observations));
}

}  // namespace gmvi
