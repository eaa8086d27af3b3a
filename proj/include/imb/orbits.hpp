#pragma once

// Orbit iteration with lifted positions, rotation numbers, and searches for
// (m, n) periodic orbits: a variational one on sums of G and a Newton
// shooting one on T^n.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "imb/action.hpp"
#include "imb/boundary.hpp"
#include "imb/dynamics.hpp"
#include "imb/error.hpp"
#include "imb/tolerances.hpp"

namespace imb {

struct OrbitTrace {
    std::vector<PhaseState> states;  // s reduced to [0, L)
    std::vector<double> lifted;      // lifted s, lifted[0] = states[0].s
    std::vector<SegmentRecord> records;
    double length = 0.0;  // L of the curve
    bool tangency_stop = false;
    std::string stop_reason;
    Regime regime = Regime::strong_field;

    std::size_t steps() const { return records.size(); }
};

inline OrbitTrace iterate(const Curve& curve, double mu, const PhaseState& start, int n_steps,
                          const Tolerances& tol = {}) {
    if (n_steps < 0) throw Error(ErrorKind::invalid_argument, "n_steps must be non-negative");
    OrbitTrace tr;
    tr.length = curve.length();
    try {
        tr.regime = classify_regime(curve, mu, tol);
    } catch (const Error&) {
        tr.regime = Regime::boundary;
    }
    PhaseState st = start;
    st.s = wrap_positive(st.s, tr.length);
    tr.states.reserve(n_steps + 1);
    tr.lifted.reserve(n_steps + 1);
    tr.records.reserve(n_steps);
    tr.states.push_back(st);
    tr.lifted.push_back(st.s);
    for (int k = 0; k < n_steps; ++k) {
        try {
            SegmentRecord rec = return_map(curve, st, mu, tol);
            st = rec.reentry();
            tr.lifted.push_back(tr.lifted.back() + rec.advance);
            tr.states.push_back(st);
            tr.records.push_back(std::move(rec));
        } catch (const Error& e) {
            tr.tangency_stop = true;
            tr.stop_reason = e.what();
            break;
        }
    }
    return tr;
}

struct RotationNumber {
    double omega = 0.0;
    double error = 0.0;  // spread between the two half-window averages
    bool converged = true;
};

/// Weighted Birkhoff average of the per-return advance divided by L. The
/// smooth bump weight makes quasi-periodic averages converge much faster
/// than the plain mean; the error estimate compares the two half windows.
inline RotationNumber rotation_number(const OrbitTrace& trace, const Tolerances& tol = {}) {
    const std::size_t n = trace.steps();
    if (n < 100) throw Error(ErrorKind::invalid_argument, "rotation number needs at least 100 returns");
    auto weighted = [&](std::size_t a, std::size_t b) {
        double num = 0.0, den = 0.0;
        const double span = static_cast<double>(b - a);
        for (std::size_t k = a; k < b; ++k) {
            const double x = (k - a + 0.5) / span;
            const double w = std::exp(-1.0 / (x * (1.0 - x)));
            num += w * (trace.lifted[k + 1] - trace.lifted[k]);
            den += w;
        }
        return num / (den * trace.length);
    };
    RotationNumber r;
    r.omega = weighted(0, n);
    r.error = std::abs(weighted(0, n / 2) - weighted(n / 2, n));
    r.converged = r.error <= tol.rot;
    return r;
}

struct PeriodicOrbit {
    int m = 0;
    int n = 0;
    int minimal_period = 0;
    std::vector<double> lifted;        // x_0 .. x_{n-1}
    std::vector<PhaseState> states;    // departure state at each point, s reduced
    std::vector<SegmentRecord> records;
    double residual = 0.0;      // phase-space closure error of T^n
    double gradient = 0.0;      // max |u_arrival - u_departure|
    double action = 0.0;        // sum of G (variational only)
    std::complex<double> multipliers[2];
    double trace = 0.0;         // of the n-step Jacobian
    double det = 1.0;
    std::vector<double> hessian_eigenvalues;
    std::string family;         // signature class of the action Hessian
    int iterations = 0;
    std::string method;

    double length = 0.0;        // L of the curve

    double rotation_number() const {
        double total = 0.0;
        for (const auto& r : records) total += r.advance;
        return records.empty() ? 0.0 : total / (static_cast<double>(records.size()) * length);
    }
};

namespace detail {

inline void fill_stability(PeriodicOrbit& po, const Tolerances& tol) {
    Jacobian2 prod;
    for (const auto& r : po.records) prod = jacobian_return(r, tol) * prod;
    po.trace = prod.trace();
    po.det = prod.det();
    const std::complex<double> disc = std::sqrt(std::complex<double>(po.trace * po.trace - 4.0 * po.det));
    po.multipliers[0] = 0.5 * (po.trace + disc);
    po.multipliers[1] = 0.5 * (po.trace - disc);
}

inline int minimal_period(const std::vector<PhaseState>& pts, double L, double eps) {
    const int n = static_cast<int>(pts.size());
    for (int p = 1; p < n; ++p) {
        if (n % p != 0) continue;
        bool ok = true;
        for (int j = 0; j < n && ok; ++j) {
            const PhaseState& a = pts[j];
            const PhaseState& b = pts[(j + p) % n];
            const double ds = std::abs(std::remainder(a.s - b.s, L));
            ok = ds < eps && std::abs(a.u - b.u) < eps;
        }
        if (ok) return p;
    }
    return n;
}

// Closure error of T^n started from the first point, against (s + mL, u).
inline double closure_residual(const Curve& curve, double mu, const PhaseState& start, int m, int n,
                               const Tolerances& tol) {
    PhaseState st = start;
    double lifted = start.s;
    for (int k = 0; k < n; ++k) {
        const auto rec = return_map(curve, st, mu, tol);
        lifted += rec.advance;
        st = rec.reentry();
    }
    return std::hypot(lifted - start.s - m * curve.length(), st.u - start.u);
}

inline void check_mn(int m, int n) {
    if (n < 1 || m < 1 || m >= n) {
        throw Error(ErrorKind::invalid_argument, "periodic orbit needs 1 <= m < n");
    }
}

}  // namespace detail

struct VariationalOptions {
    int max_sweeps = 500;
    int max_backtracks = 30;
    std::optional<std::vector<double>> seed;  // lifted x_0 .. x_{n-1}
    double s0 = 0.0;                          // first point of the default seed
};

/// Critical point of W = sum_j G(x_j, x_{j+1}) with x_n = x_0 + m L, found by
/// cyclic coordinate Newton: each x_j moves downhill in W until dW/dx_j
/// changes sign, then the bracket is refined. A full Newton step on all
/// coordinates follows each sweep when it lowers max |dW/dx_j|.
/// dW/dx_j = u_j(arrival) - u_j(departure); the diagonal of the Hessian is
/// d_{j-1}/b_{j-1} + a_j/b_j in terms of the step Jacobians [[a, b], [c, d]].
inline PeriodicOrbit find_periodic_variational(const Curve& curve, double mu, int m, int n,
                                               const VariationalOptions& opt = {},
                                               const Tolerances& tol = {}) {
    detail::check_mn(m, n);
    if (classify_regime(curve, mu, tol) != Regime::strong_field) {
        throw Error(ErrorKind::regime_unsupported,
                    "variational search needs the strong field regime; use shooting");
    }
    const double L = curve.length();
    std::vector<double> x(n);
    if (opt.seed) {
        if (static_cast<int>(opt.seed->size()) != n) {
            throw Error(ErrorKind::invalid_argument, "seed must hold n positions");
        }
        x = *opt.seed;
    } else {
        for (int j = 0; j < n; ++j) x[j] = opt.s0 + j * m * L / n;
    }
    auto pos = [&](int j) { return j == n ? x[0] + m * L : x[j]; };
    std::vector<SegmentRecord> step(n);
    auto solve_step = [&](int j) { step[j] = shoot(curve, mu, pos(j), pos(j + 1) - pos(j), tol); };
    for (int j = 0; j < n; ++j) solve_step(j);

    auto grad_at = [&](int j) {
        const int p = (j + n - 1) % n;
        return step[p].reentry().u - step[j].entry().u;
    };
    auto max_grad = [&] {
        double g = 0.0;
        for (int j = 0; j < n; ++j) g = std::max(g, std::abs(grad_at(j)));
        return g;
    };

    // Hessian of W: diagonal d_{j-1}/b_{j-1} + a_j/b_j, off-diagonal -1/b_j (cyclic).
    auto hessian = [&] {
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
        for (int j = 0; j < n; ++j) {
            const Jacobian2 J = jacobian_return(step[j], tol);
            const int k = (j + 1) % n;
            H(j, j) += J.ss / J.su;
            H(k, k) += J.uu / J.su;
            H(j, k) += -1.0 / J.su;
            H(k, j) += -1.0 / J.su;
        }
        return H;
    };
    // Full Newton step on all coordinates, accepted only if max |g| drops.
    auto newton_all = [&](double g_now) {
        Eigen::VectorXd gv(n);
        for (int j = 0; j < n; ++j) gv(j) = grad_at(j);
        const Eigen::VectorXd dx = -hessian().completeOrthogonalDecomposition().solve(gv);
        double cap = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) cap = std::min(cap, pos(j + 1) - x[j]);
        double lam = std::min(1.0, 0.25 * cap / std::max(dx.cwiseAbs().maxCoeff(), 1e-300));
        const std::vector<double> x_old = x;
        const std::vector<SegmentRecord> s_old = step;
        for (int b = 0; b < opt.max_backtracks; ++b, lam *= 0.5) {
            for (int j = 0; j < n; ++j) x[j] = x_old[j] + lam * dx(j);
            try {
                for (int j = 0; j < n; ++j) solve_step(j);
            } catch (const Error&) {
                continue;
            }
            if (max_grad() < g_now) return;
        }
        x = x_old;
        step = s_old;
    };

    // dW/dx_j runs from negative to positive between the neighbours of x_j, so
    // W restricted to x_j has an interior minimum. Walk downhill (Newton step
    // when the local curvature is positive) until g_j changes sign, then
    // refine the bracket by safeguarded Newton.
    auto coordinate_descent = [&](int j, double gj) {
        const int p = (j + n - 1) % n;
        auto g_at = [&](double xj) -> std::optional<double> {
            x[j] = xj;
            try {
                solve_step(p);
                solve_step(j);
            } catch (const Error&) {
                return std::nullopt;
            }
            return grad_at(j);
        };
        auto curvature = [&] {
            const Jacobian2 jp = jacobian_return(step[p], tol);
            const Jacobian2 jj = jacobian_return(step[j], tol);
            return jp.uu / jp.su + jj.ss / jj.su;
        };
        const double left_wall = (j == 0) ? x[n - 1] - m * L : x[j - 1];
        const double right_wall = pos(j + 1);
        double a = x[j], ga = gj, h = curvature();
        double b = a, gb = ga;
        bool bracketed = false;
        for (int b_it = 0; b_it < opt.max_backtracks && !bracketed; ++b_it) {
            const double wall = ga > 0.0 ? left_wall : right_wall;
            double dx = (h > 0.0) ? -ga / h : 0.25 * (wall - a);
            if (std::abs(dx) > 0.5 * std::abs(wall - a)) dx = 0.5 * (wall - a);
            std::optional<double> gt;
            for (int k = 0; k < opt.max_backtracks && !gt; ++k, dx *= 0.5) gt = g_at(a + dx);
            if (!gt) return false;
            if ((*gt > 0.0) != (ga > 0.0)) {
                b = a + dx;
                gb = *gt;
                bracketed = true;
            } else {
                if (std::abs(*gt) < 0.1 * tol.orbit) return true;
                a += dx;
                ga = *gt;
                h = curvature();
            }
        }
        if (!bracketed) return std::abs(ga) < std::abs(gj);
        // a and b straddle the zero of g_j.
        double lo = std::min(a, b), hi = std::max(a, b);
        double glo = a < b ? ga : gb, ghi = a < b ? gb : ga;
        double xc = (std::abs(ga) < std::abs(gb)) ? a : b;
        double gc = (xc == a) ? ga : gb;
        for (int it = 0; it < 60 && hi - lo > 1e-15 * std::max(1.0, std::abs(xc)); ++it) {
            auto gx = g_at(xc);
            if (!gx) return false;
            gc = *gx;
            if (std::abs(gc) < 0.1 * tol.orbit) return true;
            ((gc < 0.0) == (glo < 0.0) ? lo : hi) = xc;
            ((gc < 0.0) == (glo < 0.0) ? glo : ghi) = gc;
            const double hc = curvature();
            double next = (hc > 0.0) ? xc - gc / hc : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            xc = next;
        }
        auto gx = g_at(xc);
        return gx.has_value() && std::abs(*gx) < std::abs(gj);
    };

    PeriodicOrbit po;
    po.m = m;
    po.n = n;
    po.length = L;
    po.method = "variational";
    int sweep = 0;
    double g = max_grad();
    while (g >= tol.orbit && sweep < opt.max_sweeps) {
        ++sweep;
        for (int j = 0; j < n; ++j) {
            const int p = (j + n - 1) % n;
            const double gj = grad_at(j);
            if (std::abs(gj) < 0.1 * tol.orbit) continue;
            const double old = x[j];
            const SegmentRecord keep_p = step[p], keep_j = step[j];
            if (!coordinate_descent(j, gj)) {
                x[j] = old;
                step[p] = keep_p;
                step[j] = keep_j;
            }
        }
        g = max_grad();
        if (g >= tol.orbit) {
            newton_all(g);
            g = max_grad();
        }
    }
    po.iterations = sweep;
    po.gradient = g;
    if (!(g < tol.orbit)) {
        throw Error(ErrorKind::no_convergence,
                    "variational search stopped after " + std::to_string(sweep) +
                        " sweeps with gradient " + std::to_string(g));
    }

    po.records = step;
    po.lifted = x;
    for (int j = 0; j < n; ++j) {
        PhaseState st = step[j].entry();
        st.s = wrap_positive(st.s, L);
        po.states.push_back(st);
        po.action += generating_function(curve, mu, step[j], tol).G;
    }
    const Eigen::MatrixXd H = hessian();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    po.hessian_eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
    {
        // W is defined with G = -(chord length) + ..., so the orbits that
        // maximize length are minima of W.
        const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
        int neg = 0, zero = 0;
        for (double ev : po.hessian_eigenvalues) {
            if (std::abs(ev) <= 1e-7 * std::max(scale, 1.0)) {
                ++zero;
            } else if (ev < 0.0) {
                ++neg;
            }
        }
        if (neg == 0) {
            po.family = zero > 0 ? "degenerate-minimum" : "minimizing";
        } else if (neg == 1) {
            po.family = "minimax";
        } else {
            po.family = "saddle-" + std::to_string(neg);
        }
    }
    detail::fill_stability(po, tol);
    po.residual = detail::closure_residual(curve, mu, po.states[0], m, n, tol);
    po.minimal_period = detail::minimal_period(po.states, L, 1e-7);
    return po;
}

struct ShootingOptions {
    int max_iterations = 50;
};

/// Newton on F(s, u) = T^n(s, u) - (s + m L, u) using the chained Jacobian.
/// Steps use the SVD pseudo-inverse so rank-deficient cases (the circle's
/// shear) still move along the solvable direction.
inline PeriodicOrbit find_periodic_shooting(const Curve& curve, double mu, int m, int n,
                                            const PhaseState& seed, const ShootingOptions& opt = {},
                                            const Tolerances& tol = {}) {
    detail::check_mn(m, n);
    if (is_boundary_state(seed, tol)) {
        throw Error(ErrorKind::invalid_argument, "shooting seed lies on the boundary u = +-1");
    }
    const double L = curve.length();
    struct Eval {
        Eigen::Vector2d F;
        Eigen::Matrix2d J;
        std::vector<SegmentRecord> recs;
    };
    auto evaluate = [&](double s, double u) {
        Eval e;
        PhaseState st = PhaseState::from_u(s, u);
        double lifted = s;
        Jacobian2 prod;
        for (int k = 0; k < n; ++k) {
            SegmentRecord r = return_map(curve, st, mu, tol);
            prod = jacobian_return(r, tol) * prod;
            lifted += r.advance;
            st = r.reentry();
            e.recs.push_back(std::move(r));
        }
        e.F << lifted - s - m * L, st.u - u;
        e.J << prod.ss - 1.0, prod.su, prod.us, prod.uu - 1.0;
        return e;
    };
    double s = wrap_positive(seed.s, L), u = seed.u;
    Eval cur = evaluate(s, u);
    int it = 0;
    for (; it < opt.max_iterations && cur.F.norm() >= tol.orbit; ++it) {
        Eigen::JacobiSVD<Eigen::Matrix2d> svd(cur.J, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const auto sv = svd.singularValues();
        if (!(sv(0) > 1e-14)) {
            throw Error(ErrorKind::singular_newton, "n-step Jacobian is numerically zero");
        }
        Eigen::Vector2d step = Eigen::Vector2d::Zero();
        for (int i = 0; i < 2; ++i) {
            if (sv(i) > 1e-10 * sv(0)) {
                step -= (svd.matrixU().col(i).dot(cur.F) / sv(i)) * svd.matrixV().col(i);
            }
        }
        double lam = 1.0;
        bool improved = false;
        for (int b = 0; b < 30; ++b, lam *= 0.5) {
            const double ns = s + lam * step(0);
            const double nu = std::clamp(u + lam * step(1), -1.0 + 1e-12, 1.0 - 1e-12);
            try {
                Eval cand = evaluate(ns, nu);
                if (cand.F.norm() < cur.F.norm()) {
                    s = ns;
                    u = nu;
                    cur = std::move(cand);
                    improved = true;
                    break;
                }
            } catch (const Error&) {
            }
        }
        if (!improved) break;
    }
    if (!(cur.F.norm() < tol.orbit)) {
        Jacobian2 prod;
        for (const auto& r : cur.recs) prod = jacobian_return(r, tol) * prod;
        const double tr = prod.trace();
        if (std::abs(tr - 2.0) < 1e-6) {
            throw Error(ErrorKind::singular_newton,
                        "shooting stalled near a parabolic orbit (trace " + std::to_string(tr) + ")");
        }
        throw Error(ErrorKind::no_convergence,
                    "shooting residual " + std::to_string(cur.F.norm()) + " after " +
                        std::to_string(it) + " iterations");
    }
    PeriodicOrbit po;
    po.m = m;
    po.n = n;
    po.length = L;
    po.method = "shooting";
    po.iterations = it;
    po.records = std::move(cur.recs);
    double lifted = s;
    for (const auto& r : po.records) {
        PhaseState st = r.entry();
        st.s = wrap_positive(st.s, L);
        po.states.push_back(st);
        po.lifted.push_back(lifted);
        lifted += r.advance;
    }
    po.residual = cur.F.norm();
    for (int j = 0; j < n; ++j) {
        const int p = (j + n - 1) % n;
        po.gradient = std::max(po.gradient, std::abs(po.records[p].reentry().u - po.records[j].entry().u));
    }
    detail::fill_stability(po, tol);
    po.minimal_period = detail::minimal_period(po.states, L, 1e-7);
    return po;
}

/// Seed for shooting: at fixed s0, sweeps u over a grid for a sign change of
/// the n-step lifted advance minus m L and bisects it.
inline PhaseState shooting_seed(const Curve& curve, double mu, int m, int n, double s0,
                                int grid = 200, const Tolerances& tol = {}) {
    detail::check_mn(m, n);
    const double L = curve.length();
    auto excess = [&](double u) {
        PhaseState st = PhaseState::from_u(s0, u);
        double total = 0.0;
        for (int k = 0; k < n; ++k) {
            const auto r = return_map(curve, st, mu, tol);
            total += r.advance;
            st = r.reentry();
        }
        return total - m * L;
    };
    double prev_u = 0.0, prev_f = 0.0;
    bool have_prev = false;
    for (int k = 0; k <= grid; ++k) {
        const double u = -1.0 + 2.0 * (k + 0.5) / (grid + 1);
        double f;
        try {
            f = excess(u);
        } catch (const Error&) {
            have_prev = false;
            continue;
        }
        if (have_prev && (prev_f < 0.0) != (f < 0.0)) {
            double lo = prev_u, hi = u, flo = prev_f;
            for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = excess(mid);
                if ((fm < 0.0) == (flo < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            return PhaseState::from_u(s0, 0.5 * (lo + hi));
        }
        prev_u = u;
        prev_f = f;
        have_prev = true;
    }
    throw Error(ErrorKind::no_convergence, "no sign change of the n-step advance on the u grid");
}

}  // namespace imb
