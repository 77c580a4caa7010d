#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "finite_diff.hpp"
#include "gmvi/diffusion.hpp"

using namespace gmvi;

namespace {

DiffusionSettings settings_with_grid(int n) {
    DiffusionSettings s;
    s.grid = n;
    return s;
}

}  // namespace

TEST_CASE("zero forcing marches to an identically zero field") {
    const HeatSolver solver(settings_with_grid(12));
    const Eigen::MatrixXd fields = solver.march(Eigen::VectorXd::Zero(solver.cells()));
    REQUIRE(fields.cols() == 4);
    CHECK(fields.norm() == 0.0);
}

TEST_CASE("implicit euler with zero-flux walls conserves injected mass") {
    const DiffusionSettings s = settings_with_grid(20);
    const HeatSolver solver(s);
    const double area = 1.0 / (s.grid * s.grid);
    const Eigen::Vector2d sources[] = {{0.4, 0.6}, {0.09, 0.23}};
    for (const Eigen::Vector2d& source : sources) {
        const Eigen::VectorXd g = source_cells(s.grid, source, s.rho, 0, 0);
        const Eigen::MatrixXd fields = solver.march(g);
        // forcing acts once per step until shutoff; the last snapshot is at shutoff
        const double injected = std::lround(s.shutoff / s.dt) * s.dt * g.sum() * area;
        const double mass = fields.col(fields.cols() - 1).sum() * area;
        CHECK(std::abs(mass - injected) / injected < 1e-10);
    }
}

TEST_CASE("mirrored sources produce mirrored fields") {
    const DiffusionSettings s = settings_with_grid(25);
    const HeatSolver solver(s);
    const Eigen::MatrixXd a = solver.march(source_cells(s.grid, {0.3, 0.55}, s.rho, 0, 0));
    const Eigen::MatrixXd b = solver.march(source_cells(s.grid, {0.7, 0.55}, s.rho, 0, 0));
    double worst = 0.0;
    for (int k = 0; k < a.cols(); ++k)
        for (int iy = 0; iy < s.grid; ++iy)
            for (int ix = 0; ix < s.grid; ++ix)
                worst = std::max(worst, std::abs(a(iy * s.grid + ix, k) -
                                                 b(iy * s.grid + (s.grid - 1 - ix), k)));
    CHECK(worst < 1e-12);
}

TEST_CASE("readings match a heat kernel solution of the continuum problem") {
    // Frozen values of the exact solution: the source Gaussian convolved with
    // the free-space heat kernel plus its wall reflections, time-integrated by
    // adaptive quadrature. Pins the diffusivity, the source strength, and the
    // shutoff window against an independent formulation.
    struct Probe {
        int snapshot;
        Eigen::Vector2d at, source;
        double want;
    };
    const Probe probes[] = {
        {0, {0.55, 0.5}, {0.5, 0.5}, 0.029555011168952306},
        {3, {0.0, 0.0}, {0.3, 0.4}, 0.040094224011358655},
    };
    for (int n : {25, 110}) {
        const DiffusionSettings s = settings_with_grid(n);
        const HeatSolver solver(s);
        for (const Probe& p : probes) {
            const Eigen::MatrixXd fields =
                solver.march(source_cells(n, p.source, s.rho, 0, 0));
            const double got = solver.sample(fields.col(p.snapshot), p.at);
            CHECK(std::abs(got - p.want) / p.want < 0.01);
        }
    }
}

TEST_CASE("forward readings are nonnegative and deterministic") {
    const DiffusionForwardModel model(SensorLayout::kCorners, settings_with_grid(15));
    Eigen::VectorXd xi(2);
    xi << 0.3, 0.4;
    const ForwardEval a = model.evaluate(xi, true, true);
    REQUIRE(a.value.size() == 16);
    REQUIRE(a.has_jacobian);
    REQUIRE(a.has_hess_diag);
    CHECK(a.value.minCoeff() > -1e-10);
    const ForwardEval b = model.evaluate(xi, true, true);
    CHECK((a.value - b.value).norm() == 0.0);
    CHECK((a.jacobian - b.jacobian).norm() == 0.0);
    CHECK((a.hess_diag - b.hess_diag).norm() == 0.0);
}

TEST_CASE("jacobian and curvature match finite differences") {
    const DiffusionForwardModel model(SensorLayout::kCorners, settings_with_grid(15));
    auto value = [&](const Eigen::VectorXd& xi) {
        return model.evaluate(xi, false, false).value;
    };
    const double h = 1e-4;
    const Eigen::Vector2d points[] = {{0.3, 0.42}, {0.62, 0.55}};
    for (const Eigen::Vector2d& point : points) {
        const Eigen::VectorXd xi = point;
        const ForwardEval eval = model.evaluate(xi, true, true);
        CHECK(testsupport::max_rel_error(eval.jacobian,
                                         testsupport::fd_jacobian(value, xi, h)) < 1e-3);

        const Eigen::VectorXd f0 = value(xi);
        Eigen::MatrixXd fd(f0.size(), 2);
        for (int j = 0; j < 2; ++j) {
            Eigen::VectorXd xp = xi, xm = xi;
            xp[j] += h;
            xm[j] -= h;
            fd.col(j) = (value(xp) - 2.0 * f0 + value(xm)) / (h * h);
        }
        CHECK(testsupport::max_rel_error(eval.hess_diag, fd) < 1e-3);
    }
}

TEST_CASE("midpoint sensors cannot tell a source from its mirror image") {
    for (int n : {15, 25}) {
        const DiffusionForwardModel model(SensorLayout::kMidpoints, settings_with_grid(n));
        REQUIRE(model.output_dim() == 8);
        Eigen::VectorXd xi(2), mirrored(2);
        xi << 0.3, 0.42;
        mirrored << 0.7, 0.42;
        const Eigen::VectorXd a = model.evaluate(xi, false, false).value;
        const Eigen::VectorXd b = model.evaluate(mirrored, false, false).value;
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("sensor readings are stable under grid refinement") {
    const DiffusionForwardModel coarse(SensorLayout::kCorners, settings_with_grid(25));
    const DiffusionForwardModel fine(SensorLayout::kCorners, settings_with_grid(50));
    const Eigen::Vector2d sources[] = {{0.4, 0.55}, {0.09, 0.23}};
    for (const Eigen::Vector2d& source : sources) {
        const Eigen::VectorXd a = coarse.evaluate(source, false, false).value;
        const Eigen::VectorXd b = fine.evaluate(source, false, false).value;
        for (Eigen::Index i = 0; i < a.size(); ++i)
            CHECK(std::abs(a[i] - b[i]) / std::abs(b[i]) < 0.02);
    }
}

TEST_CASE("sensitivity fields of interior sources carry no net mass") {
    const DiffusionSettings s = settings_with_grid(25);
    const HeatSolver solver(s);
    const double area = 1.0 / (s.grid * s.grid);
    // sources at least four radii from every wall, where the bump's own tail
    // truncation is already far below the tolerance
    const Eigen::Vector2d sources[] = {{0.25, 0.5}, {0.5, 0.62}, {0.35, 0.7}};
    for (const Eigen::Vector2d& source : sources)
        for (int axis = 0; axis < 2; ++axis) {
            const Eigen::MatrixXd slope =
                solver.march(source_cells(s.grid, source, s.rho, 1, axis));
            CHECK(std::abs(slope.rightCols(1).sum() * area) < 1e-3);
            const Eigen::MatrixXd curvature =
                solver.march(source_cells(s.grid, source, s.rho, 2, axis));
            CHECK(std::abs(curvature.rightCols(1).sum() * area) < 1e-3);
        }
}

TEST_CASE("synthetic data reduces to the truth readings at zero noise") {
    const DiffusionSettings truth = settings_with_grid(55);
    const Eigen::Vector2d star(0.09, 0.23);
    const Eigen::VectorXd clean =
        make_synthetic_diffusion_data(SensorLayout::kCorners, truth, star, 0.0, 99);
    const DiffusionForwardModel model(SensorLayout::kCorners, truth);
    CHECK((clean - model.evaluate(star, false, false).value).norm() == 0.0);

    const Eigen::VectorXd noisy =
        make_synthetic_diffusion_data(SensorLayout::kCorners, truth, star, 0.05, 99);
    const Eigen::VectorXd replay =
        make_synthetic_diffusion_data(SensorLayout::kCorners, truth, star, 0.05, 99);
    const Eigen::VectorXd reseeded =
        make_synthetic_diffusion_data(SensorLayout::kCorners, truth, star, 0.05, 100);
    CHECK((noisy - replay).norm() == 0.0);
    CHECK((noisy - reseeded).norm() > 0.0);
    const double rms = std::sqrt((noisy - clean).squaredNorm() / clean.size());
    CHECK(rms > 0.01);
    CHECK(rms < 0.12);
}

TEST_CASE("invalid inputs are rejected") {
    const DiffusionForwardModel model(SensorLayout::kCorners, settings_with_grid(10));
    Eigen::VectorXd outside(2);
    outside << -0.1, 0.5;
    CHECK_THROWS_AS(model.evaluate(outside, false, false), std::domain_error);
    outside << 0.5, 1.2;
    CHECK_THROWS_AS(model.evaluate(outside, false, false), std::domain_error);

    DiffusionSettings off_grid_times = settings_with_grid(10);
    off_grid_times.measurement_times = {0.071};
    CHECK_THROWS_AS((HeatSolver(off_grid_times)), std::invalid_argument);

    DiffusionSettings one_cell = settings_with_grid(1);
    CHECK_THROWS_AS((HeatSolver(one_cell)), std::invalid_argument);

    const Eigen::Vector2d center(0.5, 0.5);
    CHECK_THROWS_AS(make_synthetic_diffusion_data(SensorLayout::kCorners,
                                                  settings_with_grid(10), center,
                                                  -0.1, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(source_cells(10, center, 0.05, 3, 0), std::invalid_argument);

    const HeatSolver solver(settings_with_grid(10));
    CHECK_THROWS_AS(solver.march(Eigen::VectorXd::Zero(7)), std::invalid_argument);
}

TEST_CASE("source identification model assembles the full parameter vector") {
    const Eigen::VectorXd y = make_synthetic_diffusion_data(
        SensorLayout::kCorners, settings_with_grid(55), {0.09, 0.23}, 0.05, 7);
    const auto model =
        make_diffusion_model(SensorLayout::kCorners, y, settings_with_grid(15));
    CHECK(model->dim() == 3);
    CHECK(model->xi_dim() == 2);
    CHECK(model->theta_dim() == 1);

    Eigen::VectorXd omega(3);
    omega << 0.09, 0.23, std::log(0.05);
    const DensityEval at_truth = model->evaluate(omega, true);
    CHECK(std::isfinite(at_truth.value));

    // outside the square the prior rejects the point before any solve runs
    Eigen::VectorXd outside(3);
    outside << 1.3, 0.23, -3.0;
    CHECK(model->evaluate(outside, false).value ==
          -std::numeric_limits<double>::infinity());

    auto value = [&](const Eigen::VectorXd& w) { return model->evaluate(w, false).value; };
    const Eigen::VectorXd fd = testsupport::fd_gradient(value, omega, 1e-5);
    CHECK(testsupport::max_rel_error(at_truth.grad.transpose(), fd.transpose()) < 1e-4);
}
