#include "gmvi/lbfgsb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace gmvi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd clamp_to_box(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi) {
    return x.cwiseMax(lo).cwiseMin(hi);
}

double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                               const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    return (x - clamp_to_box(x - g, lo, hi)).lpNorm<Eigen::Infinity>();
}

// Correction history and the dense quadratic-model Hessian built from it.
class LimitedMemory {
  public:
    explicit LimitedMemory(int capacity) : capacity_(capacity) {}

    void push(const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
        const double sy = s.dot(y);
        if (sy <= 1e-10 * s.norm() * y.norm()) return;  // keep B positive definite
        s_.push_back(s);
        y_.push_back(y);
        if (static_cast<int>(s_.size()) > capacity_) {
            s_.erase(s_.begin());
            y_.erase(y_.begin());
        }
        theta_ = y.squaredNorm() / sy;
    }

    Eigen::MatrixXd hessian(int n) const {
        Eigen::MatrixXd b = theta_ * Eigen::MatrixXd::Identity(n, n);
        const int m = static_cast<int>(s_.size());
        if (m == 0) return b;

        Eigen::MatrixXd w(n, 2 * m);  // [Y, theta S]
        for (int k = 0; k < m; ++k) {
            w.col(k) = y_[k];
            w.col(m + k) = theta_ * s_[k];
        }
        // Middle matrix [[-D, L^T], [L, theta S^T S]] with L strictly lower.
        Eigen::MatrixXd mid = Eigen::MatrixXd::Zero(2 * m, 2 * m);
        for (int i = 0; i < m; ++i) {
            mid(i, i) = -s_[i].dot(y_[i]);
            for (int j = 0; j < m; ++j) {
                if (i > j) {
                    const double l = s_[i].dot(y_[j]);
                    mid(m + i, j) = l;
                    mid(j, m + i) = l;
                }
                mid(m + i, m + j) = theta_ * s_[i].dot(s_[j]);
            }
        }
        b.noalias() -= w * mid.partialPivLu().solve(w.transpose());
        return b;
    }

  private:
    int capacity_;
    std::vector<Eigen::VectorXd> s_, y_;
    double theta_ = 1.0;
};

// Minimizer of the quadratic model along the projected-gradient path,
// examined one breakpoint interval at a time.
Eigen::VectorXd cauchy_point(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                             const Eigen::MatrixXd& b, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi) {
    const int n = static_cast<int>(x.size());
    Eigen::VectorXd t(n), d(n);
    for (int i = 0; i < n; ++i) {
        if (g[i] < 0.0)
            t[i] = (x[i] - hi[i]) / g[i];
        else if (g[i] > 0.0)
            t[i] = (x[i] - lo[i]) / g[i];
        else
            t[i] = kInf;
        d[i] = t[i] > 0.0 ? -g[i] : 0.0;
    }

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int c) { return t[a] < t[c]; });

    Eigen::VectorXd xc = x;
    double t_old = 0.0;
    std::size_t next = 0;
    while (next < order.size() && t[order[next]] <= 0.0) ++next;

    while (true) {
        const double t_break = next < order.size() ? t[order[next]] : kInf;
        const Eigen::VectorXd bd = b * d;
        const double f1 = g.dot(d) + (xc - x).dot(bd);
        const double f2 = d.dot(bd);
        if (f1 >= 0.0) break;  // model already increasing along the path
        const double dt_star = f2 > 0.0 ? -f1 / f2 : kInf;
        if (t_old + dt_star < t_break) {
            xc += dt_star * d;
            break;
        }
        if (!std::isfinite(t_break)) break;  // flat to infinity; stay put
        xc += (t_break - t_old) * d;
        while (next < order.size() && t[order[next]] <= t_break) {
            const int i = order[next];
            xc[i] = g[i] < 0.0 ? hi[i] : lo[i];  // land exactly on the bound
            d[i] = 0.0;
            ++next;
        }
        t_old = t_break;
        if (d.isZero(0.0)) break;
    }
    return clamp_to_box(xc, lo, hi);
}

// Newton step of the quadratic model on the variables free at xc, scaled
// back so the result stays in the box.
Eigen::VectorXd subspace_step(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                              const Eigen::MatrixXd& b, const Eigen::VectorXd& xc,
                              const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    const int n = static_cast<int>(x.size());
    std::vector<int> free;
    for (int i = 0; i < n; ++i)
        if (xc[i] > lo[i] && xc[i] < hi[i]) free.push_back(i);
    if (free.empty()) return xc;
    const int nf = static_cast<int>(free.size());

    const Eigen::VectorXd r_full = g + b * (xc - x);
    Eigen::VectorXd r(nf);
    Eigen::MatrixXd bff(nf, nf);
    for (int a = 0; a < nf; ++a) {
        r[a] = r_full[free[a]];
        for (int c = 0; c < nf; ++c) bff(a, c) = b(free[a], free[c]);
    }

    Eigen::LDLT<Eigen::MatrixXd> ldlt(bff);
    Eigen::VectorXd step = -ldlt.solve(r);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) step = -r;

    double alpha = 1.0;
    for (int a = 0; a < nf; ++a) {
        const int i = free[a];
        if (step[a] > 0.0 && std::isfinite(hi[i]))
            alpha = std::min(alpha, (hi[i] - xc[i]) / step[a]);
        else if (step[a] < 0.0 && std::isfinite(lo[i]))
            alpha = std::min(alpha, (lo[i] - xc[i]) / step[a]);
    }
    alpha = std::max(alpha, 0.0);

    Eigen::VectorXd xbar = xc;
    for (int a = 0; a < nf; ++a) xbar[free[a]] += alpha * step[a];
    return clamp_to_box(xbar, lo, hi);
}

struct LineSearchResult {
    double alpha = 0.0;
    double f = 0.0;
    Eigen::VectorXd x, grad;
    int evaluations = 0;
    bool ok = false;
};

// Strong Wolfe search along dir with bracketing and bisection zoom.
// Non-finite trial values are treated as if the step were too long.
LineSearchResult wolfe_search(const Objective& fn, const Eigen::VectorXd& x0,
                              double f0, const Eigen::VectorXd& g0,
                              const Eigen::VectorXd& dir, double alpha_max) {
    constexpr double c1 = 1e-4, c2 = 0.9;
    const double slope0 = g0.dot(dir);
    LineSearchResult out;
    out.x = x0;
    out.grad = g0;
    if (slope0 >= 0.0) return out;

    const auto eval = [&](double a, double& f, Eigen::VectorXd& g) {
        f = fn(x0 + a * dir, g);
        ++out.evaluations;
    };
    const auto accept = [&](double a, double f, Eigen::VectorXd g) {
        out.alpha = a;
        out.f = f;
        out.x = x0 + a * dir;
        out.grad = std::move(g);
        out.ok = true;
    };

    Eigen::VectorXd g(x0.size());
    double amax = alpha_max;  // shrinks when trial values come back non-finite
    double lo = 0.0, f_lo = f0;
    double hi = -1.0;  // hi < 0 marks "no upper bracket yet"
    double a = std::min(1.0, amax);

    for (int iter = 0; iter < 30 && !out.ok; ++iter) {
        double f;
        eval(a, f, g);
        if (!std::isfinite(f)) {  // shrink back toward the last good point
            amax = a;
            a = 0.5 * (lo + a);
            if (a <= lo || a < 1e-16) break;
            continue;
        }
        if (f > f0 + c1 * a * slope0 || (lo > 0.0 && f >= f_lo)) {
            hi = a;
            break;
        }
        const double slope = g.dot(dir);
        if (std::abs(slope) <= -c2 * slope0) {
            accept(a, f, g);
            break;
        }
        if (slope >= 0.0) {  // minimum sits between the previous point and here
            hi = lo;
            lo = a;
            f_lo = f;
            break;
        }
        lo = a;
        f_lo = f;
        if (a >= amax) {
            accept(a, f, g);  // largest usable step still descending
            break;
        }
        a = std::min(2.0 * a, amax);
    }

    for (int iter = 0; iter < 50 && !out.ok && hi >= 0.0; ++iter) {
        a = 0.5 * (lo + hi);
        if (a <= 0.0 || a == lo || a == hi) break;
        double f;
        eval(a, f, g);
        if (!std::isfinite(f) || f > f0 + c1 * a * slope0 || f >= f_lo) {
            hi = a;
            continue;
        }
        const double slope = g.dot(dir);
        if (std::abs(slope) <= -c2 * slope0) {
            accept(a, f, g);
            break;
        }
        if (slope * (hi - lo) >= 0.0) hi = lo;
        lo = a;
        f_lo = f;
    }

    if (!out.ok && lo > 0.0 && f_lo < f0) {
        // Wolfe curvature never held; take the best sufficient decrease seen.
        double f;
        eval(lo, f, g);
        if (std::isfinite(f) && f <= f0 + c1 * lo * slope0) accept(lo, f, g);
    }
    return out;
}

}  // namespace

MinimizeResult lbfgsb_minimize(const Objective& fn, const Eigen::VectorXd& x0,
                               const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper,
                               const MinimizeOptions& opts) {
    const int n = static_cast<int>(x0.size());
    if (lower.size() != n || upper.size() != n || (lower.array() > upper.array()).any())
        throw std::invalid_argument("inconsistent box bounds");

    MinimizeResult res;
    res.x = clamp_to_box(x0, lower, upper);
    res.grad.resize(n);
    res.f = fn(res.x, res.grad);
    res.f_initial = res.f;
    res.evaluations = 1;
    if (!std::isfinite(res.f) || !res.grad.allFinite())
        throw std::invalid_argument("objective is not finite at the starting point");

    LimitedMemory memory(opts.memory);
    res.status = MinimizeStatus::IterationLimit;

    for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
        res.pg_norm = projected_gradient_norm(res.x, res.grad, lower, upper);
        if (res.pg_norm < opts.pg_tolerance) {
            res.status = MinimizeStatus::Converged;
            return res;
        }

        const Eigen::MatrixXd b = memory.hessian(n);
        const Eigen::VectorXd xc = cauchy_point(res.x, res.grad, b, lower, upper);
        const Eigen::VectorXd xbar = subspace_step(res.x, res.grad, b, xc, lower, upper);

        Eigen::VectorXd dir = xbar - res.x;
        if (dir.dot(res.grad) >= 0.0 || dir.isZero(0.0))
            dir = clamp_to_box(res.x - res.grad, lower, upper) - res.x;

        // The box is convex and xbar feasible, so alpha = 1 is always safe;
        // allow extrapolation until some coordinate would leave the box.
        double alpha_max = 1e10;
        for (int i = 0; i < n; ++i) {
            if (dir[i] > 0.0 && std::isfinite(upper[i]))
                alpha_max = std::min(alpha_max, (upper[i] - res.x[i]) / dir[i]);
            else if (dir[i] < 0.0 && std::isfinite(lower[i]))
                alpha_max = std::min(alpha_max, (lower[i] - res.x[i]) / dir[i]);
        }
        alpha_max = std::max(alpha_max, 1.0);

        const LineSearchResult ls =
            wolfe_search(fn, res.x, res.f, res.grad, dir, alpha_max);
        res.evaluations += ls.evaluations;
        if (!ls.ok) {
            res.status = MinimizeStatus::LineSearchFailed;
            return res;
        }

        memory.push(ls.x - res.x, ls.grad - res.grad);
        res.x = clamp_to_box(ls.x, lower, upper);
        res.f = ls.f;
        res.grad = ls.grad;
    }
    res.pg_norm = projected_gradient_norm(res.x, res.grad, lower, upper);
    if (res.pg_norm < opts.pg_tolerance) res.status = MinimizeStatus::Converged;
    return res;
}

}  // namespace gmvi
