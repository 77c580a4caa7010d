#include "gmvi/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "gmvi/elbo.hpp"
#include "gmvi/lbfgsb.hpp"
#include "gmvi/numeric_io.hpp"

namespace gmvi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_config(const FitConfig& cfg, int d) {
    if (cfg.components < 1) throw std::invalid_argument("need at least one component");
    if (!(cfg.tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (!(cfg.variance_lo > 0.0) || !(cfg.variance_lo < cfg.variance_hi))
        throw std::invalid_argument("variance bounds must satisfy 0 < lo < hi");
    if (cfg.max_sweeps < 1 || cfg.restarts < 1 || cfg.max_inner_iterations < 1)
        throw std::invalid_argument("sweep, restart and iteration caps must be positive");
    if (static_cast<int>(cfg.init.size()) != d)
        throw std::invalid_argument("need one mean initializer per dimension");
    if (cfg.mean_lo.size() != cfg.mean_hi.size() ||
        (cfg.mean_lo.size() != 0 && cfg.mean_lo.size() != d))
        throw std::invalid_argument("mean bounds must be empty or one per dimension");
    if (cfg.mean_lo.size() == d && (cfg.mean_lo.array() > cfg.mean_hi.array()).any())
        throw std::invalid_argument("mean bounds out of order");
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
    const Eigen::ArrayXd shifted = z.array() - z.maxCoeff();
    const Eigen::ArrayXd e = shifted.exp();
    return (e / e.sum()).matrix();
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
    Eigen::VectorXd v(m.size());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) v[i * m.cols() + j] = m(i, j);
    return v;
}

void unflatten(const Eigen::VectorXd& v, Eigen::MatrixXd& m) {
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) m(i, j) = v[i * m.cols() + j];
}

// Counts target evaluations when the target is not a joint-density model
// with its own forward-solve counter.
class EvalCounter {
  public:
    explicit EvalCounter(const LogDensity& target)
        : model_(dynamic_cast<const JointDensityModel*>(&target)) {}
    void bump(long n = 1) {
        if (!model_) calls_ += n;
    }
    long count() const { return model_ ? model_->forward_evaluations() : calls_; }

  private:
    const JointDensityModel* model_;
    long calls_ = 0;
};

struct SingleRun {
    MixtureState state;
    std::vector<SweepRecord> sweeps;
    bool converged = false;
    double final_f2 = -kInf;
    long forward_evals = 0;
};

SingleRun fit_once(const LogDensity& target, const FitConfig& cfg,
                   std::uint64_t seed, EvalCounter& counter) {
    const int L = cfg.components;
    const int d = target.dim();
    const long evals_at_start = counter.count();

    std::mt19937_64 rng(seed);
    MixtureState q;
    q.weights = Eigen::VectorXd::Constant(L, 1.0 / L);
    q.variances = Eigen::MatrixXd::Constant(
        L, d, std::clamp(1.0, cfg.variance_lo, cfg.variance_hi));
    q.means.resize(L, d);
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < d; ++j) {
            const DimensionInit& init = cfg.init[j];
            if (init.kind == DimensionInit::Kind::Uniform) {
                if (init.a == init.b) {  // degenerate range pins the coordinate
                    q.means(i, j) = init.a;
                } else {
                    std::uniform_real_distribution<double> u(init.a, init.b);
                    q.means(i, j) = u(rng);
                }
            } else {
                std::normal_distribution<double> n(init.a, init.b);
                q.means(i, j) = n(rng);
            }
            if (cfg.mean_lo.size() == d)
                q.means(i, j) = std::clamp(q.means(i, j), cfg.mean_lo[j], cfg.mean_hi[j]);
        }

    const auto fresh_lin = [&](const Eigen::MatrixXd& means) {
        counter.bump(L);
        return linearize(target, means, true);
    };

    MinimizeOptions inner;
    inner.max_iterations = cfg.max_inner_iterations;

    SingleRun run;
    double prev_f2 = kInf;
    for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
        SweepRecord rec;
        rec.sweep = sweep;

        // Mean step: maximize the order-0 bound over all means jointly.
        // Full derivative bundles are requested so each distinct point costs
        // exactly one forward solve and the refresh below reuses the last one.
        const auto mean_objective = [&](const Eigen::VectorXd& flat,
                                        Eigen::VectorXd& grad) {
            MixtureState trial = q;
            unflatten(flat, trial.means);
            // A forward solve that gives up (e.g. the trial point drives an
            // ODE stiff) is treated like any other infinite wall so the line
            // search backs off instead of aborting the restart.
            ComponentLinearization lt;
            try {
                lt = fresh_lin(trial.means);
            } catch (const std::runtime_error&) {
                grad.setZero();
                return kInf;
            }
            const double f0 = elbo_F(trial, lt, 0);
            if (!std::isfinite(f0)) {
                grad.setZero();
                return kInf;
            }
            grad = -flatten(elbo_grads(trial, lt, 0).dmeans());
            return -f0;
        };
        Eigen::VectorXd mean_lo = Eigen::VectorXd::Constant(L * d, -kInf);
        Eigen::VectorXd mean_hi = Eigen::VectorXd::Constant(L * d, kInf);
        if (cfg.mean_lo.size() == d)
            for (int i = 0; i < L; ++i)
                for (int j = 0; j < d; ++j) {
                    mean_lo[i * d + j] = cfg.mean_lo[j];
                    mean_hi[i * d + j] = cfg.mean_hi[j];
                }
        const MinimizeResult mean_res =
            lbfgsb_minimize(mean_objective, flatten(q.means), mean_lo, mean_hi, inner);
        unflatten(mean_res.x, q.means);
        rec.f0_before_mean_step = -mean_res.f_initial;
        rec.f0_after_mean_step = -mean_res.f;

        const ComponentLinearization lin = fresh_lin(q.means);

        // Weight step: maximize the order-2 bound over the simplex through
        // the softmax map; for a single component there is nothing to do.
        rec.f2_before_weight_step = elbo_F(q, lin, 2);
        if (L > 1) {
            const auto weight_objective = [&](const Eigen::VectorXd& z,
                                              Eigen::VectorXd& grad) {
                MixtureState trial = q;
                trial.weights = softmax(z);
                const double f2 = elbo_F(trial, lin, 2);
                const Eigen::VectorXd dw = elbo_grads(trial, lin, 2).dweights();
                const double mean_dw = trial.weights.dot(dw);
                grad = -(trial.weights.array() * (dw.array() - mean_dw)).matrix();
                return -f2;
            };
            const Eigen::VectorXd z0 = q.weights.array().log();
            const MinimizeResult w_res = lbfgsb_minimize(
                weight_objective, z0, Eigen::VectorXd::Constant(L, -kInf),
                Eigen::VectorXd::Constant(L, kInf), inner);
            q.weights = softmax(w_res.x);
            rec.f2_after_weight_step = -w_res.f;
        } else {
            rec.f2_after_weight_step = rec.f2_before_weight_step;
        }

        // Variance step: maximize the order-2 bound inside the variance box.
        rec.f2_before_variance_step = rec.f2_after_weight_step;
        const auto variance_objective = [&](const Eigen::VectorXd& flat,
                                            Eigen::VectorXd& grad) {
            MixtureState trial = q;
            unflatten(flat, trial.variances);
            const double f2 = elbo_F(trial, lin, 2);
            grad = -flatten(elbo_grads(trial, lin, 2).dvariances());
            return -f2;
        };
        const MinimizeResult var_res = lbfgsb_minimize(
            variance_objective, flatten(q.variances),
            Eigen::VectorXd::Constant(L * d, cfg.variance_lo),
            Eigen::VectorXd::Constant(L * d, cfg.variance_hi), inner);
        unflatten(var_res.x, q.variances);
        rec.f2_after_variance_step = -var_res.f;

        rec.f2 = rec.f2_after_variance_step;
        rec.forward_evals = counter.count() - evals_at_start;
        run.sweeps.push_back(rec);

        if (!std::isfinite(rec.f2)) break;
        if (sweep > 1 && std::abs(rec.f2 - prev_f2) < cfg.tolerance) {
            run.converged = true;
            prev_f2 = rec.f2;
            break;
        }
        prev_f2 = rec.f2;
    }

    run.state = q;
    run.final_f2 = run.sweeps.empty() ? -kInf : run.sweeps.back().f2;
    if (!std::isfinite(run.final_f2)) run.final_f2 = -kInf;
    run.forward_evals = counter.count() - evals_at_start;
    return run;
}

}  // namespace

FitReport fit(const LogDensity& target, const FitConfig& cfg) {
    check_config(cfg, target.dim());
    EvalCounter counter(target);
    const long evals_at_start = counter.count();

    FitReport report;
    report.final_f2 = -kInf;
    for (int r = 0; r < cfg.restarts; ++r) {
        const std::uint64_t seed = cfg.seed + 0x9e3779b97f4a7c15ull * (r + 1);
        SingleRun run;
        try {
            run = fit_once(target, cfg, seed, counter);
        } catch (const std::invalid_argument&) {
            continue;  // e.g. initial means fell outside the target's support
        } catch (const std::runtime_error&) {
            continue;  // e.g. the forward solver gave up at this restart
        }
        if (run.final_f2 > report.final_f2 ||
            (!report.success && std::isfinite(run.final_f2))) {
            report.state = std::move(run.state);
            report.sweeps = std::move(run.sweeps);
            report.converged = run.converged;
            report.restart_index = r;
            report.final_f2 = run.final_f2;
            report.forward_evaluations = run.forward_evals;
            report.success = std::isfinite(run.final_f2);
        }
    }
    report.forward_evaluations_total = counter.count() - evals_at_start;
    return report;
}

nlohmann::json fit_report_to_json(const FitReport& report) {
    nlohmann::json j;
    j["success"] = report.success;
    j["converged"] = report.converged;
    j["restart_index"] = report.restart_index;
    j["final_f2"] = report.final_f2;
    j["forward_evaluations"] = report.forward_evaluations;
    j["forward_evaluations_total"] = report.forward_evaluations_total;
    if (report.success) j["state"] = report.state.to_json();
    nlohmann::json trace = nlohmann::json::array();
    for (const SweepRecord& rec : report.sweeps)
        trace.push_back({{"sweep", rec.sweep},
                         {"f2", rec.f2},
                         {"forward_evals", rec.forward_evals}});
    j["trace"] = trace;
    return j;
}

std::string fit_trace_csv(const FitReport& report) {
    std::string out = "sweep,F2,forward_evals\n";
    for (const SweepRecord& rec : report.sweeps) {
        out += std::to_string(rec.sweep);
        out += ',';
        out += format_double(rec.f2);
        out += ',';
        out += std::to_string(rec.forward_evals);
        out += '\n';
    }
    return out;
}

}  // namespace gmvi
