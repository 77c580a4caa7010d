// Three-step coordinate ascent for the mixture approximation: maximize the
// order-0 bound over the component means jointly, then the order-2 bound over
// the weights (softmax-reparameterized) and the diagonal variances (box
// constrained), repeating until the order-2 bound stops moving. Several
// random restarts are run and the best final bound wins.

#ifndef GMVI_FIT_HPP
#define GMVI_FIT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmvi/joint_density.hpp"
#include "gmvi/mixture.hpp"

namespace gmvi {

/// How to draw the initial mean for one coordinate.
struct DimensionInit {
    enum class Kind { Gaussian, Uniform };
    Kind kind = Kind::Gaussian;
    double a = 0.0;  // mean (Gaussian) or lower edge (Uniform)
    double b = 1.0;  // stddev (Gaussian) or upper edge (Uniform)
};

struct FitConfig {
    int components = 1;
    double tolerance = 1e-2;  // stop when the order-2 bound moves less than this
    double variance_lo = kDefaultVarianceLo;
    double variance_hi = kDefaultVarianceHi;
    Eigen::VectorXd mean_lo, mean_hi;  // per dimension; empty means unbounded
    int max_sweeps = 100;
    int max_inner_iterations = 200;
    std::uint64_t seed = 0;
    int restarts = 5;
    std::vector<DimensionInit> init;  // one entry per dimension
};

/// Objective values around each of the three steps of one sweep, for
/// monotonicity checks and traces.
struct SweepRecord {
    int sweep = 0;  // 1-based
    double f0_before_mean_step = 0.0, f0_after_mean_step = 0.0;
    double f2_before_weight_step = 0.0, f2_after_weight_step = 0.0;
    double f2_before_variance_step = 0.0, f2_after_variance_step = 0.0;
    double f2 = 0.0;           // after the full sweep
    long forward_evals = 0;    // cumulative within the winning restart
};

struct FitReport {
    MixtureState state;
    std::vector<SweepRecord> sweeps;
    bool success = false;    // at least one restart produced a finite bound
    bool converged = false;  // tolerance reached before the sweep cap
    int restart_index = -1;
    double final_f2 = 0.0;
    long forward_evaluations = 0;        // winning restart only
    long forward_evaluations_total = 0;  // across all restarts
};

FitReport fit(const LogDensity& target, const FitConfig& cfg);

nlohmann::json fit_report_to_json(const FitReport& report);

/// One line per sweep: "sweep,F2,forward_evals".
std::string fit_trace_csv(const FitReport& report);

}  // namespace gmvi

#endif
