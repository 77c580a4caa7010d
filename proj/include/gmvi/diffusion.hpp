// Contaminant release on the unit square: u_t = lap(u) + g with zero-flux
// walls, zero initial state, and a Gaussian bump source of radius rho centered
// at an unknown location xi that switches off at a known time. Boundary
// sensors record u at a few times; the inverse problem recovers xi (and the
// noise scale) from those readings.

#ifndef GMVI_DIFFUSION_HPP
#define GMVI_DIFFUSION_HPP

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "gmvi/joint_density.hpp"

namespace gmvi {

struct DiffusionSettings {
    int grid = 25;         // cells per side of the unit square
    double dt = 0.0025;    // implicit Euler step
    double rho = 0.05;     // source radius; peak strength 1/(pi rho)
    double shutoff = 0.3;  // source active on [0, shutoff]
    std::vector<double> measurement_times = {0.075, 0.15, 0.225, 0.3};
};

enum class SensorLayout {
    kCorners,    // (0,0), (1,0), (0,1), (1,1)
    kMidpoints,  // (0.5,0), (0.5,1): blind to the x-mirror of the source
};

std::vector<Eigen::Vector2d> sensor_positions(SensorLayout layout);

/// The Gaussian bump g(x) = exp(-|x - source|^2 / (2 rho^2)) / (pi rho), or
/// its first/second derivative in source coordinate `axis` (order 1 or 2),
/// evaluated at the cell centers of a grid x grid mesh. Cell (ix, iy) sits at
/// ((ix+0.5)/grid, (iy+0.5)/grid) and lands at flat index iy*grid + ix.
Eigen::VectorXd source_cells(int grid, const Eigen::Vector2d& source,
                             double rho, int order, int axis);

/// Cell-centered finite volumes with zero-flux faces on the boundary and
/// implicit Euler in time. The backward-step operator I - dt*L is factored
/// once (Cholesky) and reused for every forcing and every step.
class HeatSolver {
  public:
    explicit HeatSolver(DiffusionSettings settings);

    const DiffusionSettings& settings() const { return settings_; }
    int cells() const { return settings_.grid * settings_.grid; }

    /// Marches from u = 0 with the given cell forcing applied while
    /// t <= shutoff. Returns one column per measurement time.
    Eigen::MatrixXd march(const Eigen::VectorXd& forcing) const;

    /// Bilinear interpolation of a cell-centered field, clamped at the walls
    /// so boundary sensors read the nearest cell row or column.
    double sample(const Eigen::Ref<const Eigen::VectorXd>& field,
                  const Eigen::Vector2d& point) const;

  private:
    DiffusionSettings settings_;
    std::vector<int> snapshot_steps_;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> backward_step_;
};

/// Forward map xi -> sensor readings, concatenated time-major (all sensors at
/// t1, then t2, ...). A bundle with derivatives costs five marches: the value
/// field plus one per first/second xi sensitivity, all sharing the operator
/// and differing only in the forcing. Throws std::domain_error when the
/// source lies outside the unit square.
class DiffusionForwardModel : public ForwardModel {
  public:
    explicit DiffusionForwardModel(SensorLayout layout,
                                   DiffusionSettings settings = {});

    int input_dim() const override { return 2; }
    int output_dim() const override;
    ForwardEval evaluate(const Eigen::VectorXd& xi, bool want_jacobian,
                         bool want_hess_diag) const override;

    const HeatSolver& solver() const { return solver_; }
    const std::vector<Eigen::Vector2d>& sensors() const { return sensors_; }

  private:
    Eigen::VectorXd read_sensors(const Eigen::MatrixXd& fields) const;

    std::vector<Eigen::Vector2d> sensors_;
    HeatSolver solver_;
};

/// Noiseless truth-grid readings at xi_true plus iid N(0, noise_sd^2) draws,
/// one per reading in storage order. noise_sd = 0 returns the exact readings.
Eigen::VectorXd make_synthetic_diffusion_data(SensorLayout layout,
                                              const DiffusionSettings& settings,
                                              const Eigen::Vector2d& xi_true,
                                              double noise_sd,
                                              std::uint64_t seed);

/// The source identification target: uniform prior for xi on the unit square,
/// iso-Gaussian likelihood with inferred log noise theta, N(-1,1) prior on
/// theta. Parameter order (xi_1, xi_2, theta).
std::shared_ptr<JointDensityModel> make_diffusion_model(
    SensorLayout layout, Eigen::VectorXd observations,
    DiffusionSettings settings = {});

}  // namespace gmvi

#endif
