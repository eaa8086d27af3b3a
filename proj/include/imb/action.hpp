#pragma once

// Generating function G(s0, s2) = -l1 - |gamma| + S/mu of the return map and
// the shooting solver that turns a boundary pair (s0, s2) into the
// trajectory connecting them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "imb/boundary.hpp"
#include "imb/dynamics.hpp"
#include "imb/error.hpp"
#include "imb/tolerances.hpp"

namespace imb {

struct ActionBreakdown {
    double G = 0.0;
    double E = 0.0;     // -l1 - A/mu
    double F_mu = 0.0;  // -|gamma| + (A + S)/mu
    double l1 = 0.0;
    double arc_length = 0.0;
    double A = 0.0;
    double S = 0.0;
    double chi = 0.0;
    double l2 = 0.0;
};

/// F_mu as a function of chi.
inline double magnetic_action(double mu, double chi) {
    return -mu * (chi + std::sin(chi) * std::cos(chi));
}

/// F_mu as a function of the exterior chord l2. The branch is the sign of
/// cos(chi): `obtuse` selects pi/2 < chi < pi.
inline double magnetic_action_from_chord(double mu, double l2, bool obtuse) {
    const double r = std::sqrt(std::max(0.0, 1.0 - l2 * l2 / (4.0 * mu * mu)));
    const double c = obtuse ? -r : r;
    return -mu * std::acos(c) - c * 0.5 * l2;
}

inline ActionBreakdown generating_function(const Curve& curve, double mu, const SegmentRecord& rec,
                                           const Tolerances& tol = {}) {
    ActionBreakdown b;
    b.chi = rec.arc.chi;
    b.l1 = rec.chord.length;
    b.l2 = rec.arc.length;
    b.arc_length = 2.0 * mu * b.chi;
    b.A = rec.area_inside ? *rec.area_inside : segment_area_inside(curve, rec.arc, tol);
    const double segment = mu * mu * (b.chi - std::sin(b.chi) * std::cos(b.chi));
    b.S = rec.area_outside ? *rec.area_outside : segment - b.A;
    b.G = -b.l1 - b.arc_length + b.S / mu;
    b.E = -b.l1 - b.A / mu;
    b.F_mu = -b.arc_length + (b.A + b.S) / mu;
    return b;
}

// --- shooting ------------------------------------------------------------------------

namespace detail {

inline double advance_of(const Curve& curve, double mu, double s0, double theta,
                         const Tolerances& tol) {
    return return_map(curve, PhaseState::from_angle(s0, theta), mu, tol).advance;
}

inline double min_theta(const Tolerances& tol) { return 2.0 * std::sqrt(2.0 * tol.tangent); }

}  // namespace detail

/// Trajectory leaving s0 whose lifted advance is `advance` (0 < advance < L).
/// Bisection in theta0 followed by two Newton polishes; valid in the strong
/// field regime where the advance is strictly increasing in u0.
inline SegmentRecord shoot(const Curve& curve, double mu, double s0, double advance,
                           const Tolerances& tol = {}, bool force = false) {
    if (!force && classify_regime(curve, mu, tol) != Regime::strong_field) {
        throw Error(ErrorKind::not_twist, "shooting by bisection needs the strong field regime");
    }
    const double L = curve.length();
    if (!(advance > 0.0 && advance < L)) {
        throw Error(ErrorKind::not_realizable, "advance must lie strictly between 0 and L");
    }
    double lo = detail::min_theta(tol), hi = kPi - detail::min_theta(tol);
    double flo = detail::advance_of(curve, mu, s0, lo, tol) - advance;
    double fhi = detail::advance_of(curve, mu, s0, hi, tol) - advance;
    if (!(flo < 0.0 && fhi > 0.0)) {
        throw Error(ErrorKind::not_realizable, "target advance is not bracketed");
    }
    while (hi - lo > 1e-13) {
        const double mid = 0.5 * (lo + hi);
        const double f = detail::advance_of(curve, mu, s0, mid, tol) - advance;
        if (f < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    double theta = 0.5 * (lo + hi);
    SegmentRecord rec = return_map(curve, PhaseState::from_angle(s0, theta), mu, tol);
    for (int it = 0; it < 2; ++it) {
        const double slope = jacobian_return(rec, tol).su * std::sin(theta);
        if (!(slope > 0.0)) break;
        const double next = theta - (rec.advance - advance) / slope;
        if (!(next > lo - 1e-12 && next < hi + 1e-12)) break;
        SegmentRecord cand = return_map(curve, PhaseState::from_angle(s0, next), mu, tol);
        if (std::abs(cand.advance - advance) > std::abs(rec.advance - advance)) break;
        theta = next;
        rec = cand;
    }
    return rec;
}

/// All trajectories leaving s0 with the given lifted advance, for any regime.
/// Sign changes of the advance are located on a theta grid and bisected;
/// grid cells whose map evaluation fails are skipped.
inline std::vector<SegmentRecord> shoot_all_branches(const Curve& curve, double mu, double s0,
                                                     double advance, int grid = 400,
                                                     const Tolerances& tol = {}) {
    std::vector<SegmentRecord> out;
    const double t0 = detail::min_theta(tol), t1 = kPi - t0;
    std::vector<double> th(grid + 1), f(grid + 1, std::numeric_limits<double>::quiet_NaN());
    for (int k = 0; k <= grid; ++k) {
        th[k] = t0 + (t1 - t0) * k / grid;
        try {
            f[k] = detail::advance_of(curve, mu, s0, th[k], tol) - advance;
        } catch (const Error&) {
        }
    }
    for (int k = 0; k < grid; ++k) {
        if (!(f[k] * f[k + 1] <= 0.0) || f[k] == f[k + 1]) continue;
        double lo = th[k], hi = th[k + 1];
        const bool rising = f[k] < f[k + 1];
        try {
            while (hi - lo > 1e-13) {
                const double mid = 0.5 * (lo + hi);
                const double v = detail::advance_of(curve, mu, s0, mid, tol) - advance;
                if ((v < 0.0) == rising) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push_back(return_map(curve, PhaseState::from_angle(s0, 0.5 * (lo + hi)), mu, tol));
        } catch (const Error&) {
        }
    }
    return out;
}

/// G on a boundary pair. s2 is lifted: 0 < s2 - s0 < L.
inline ActionBreakdown generating_function(const Curve& curve, double mu, double s0, double s2,
                                           const Tolerances& tol = {}) {
    return generating_function(curve, mu, shoot(curve, mu, s0, s2 - s0, tol), tol);
}

struct ActionGradient {
    double d_s0 = 0.0;  // = -u0
    double d_s2 = 0.0;  // = u2
    SegmentRecord trajectory;
};

inline ActionGradient action_gradient(const Curve& curve, double mu, double s0, double s2,
                                      const Tolerances& tol = {}) {
    ActionGradient g;
    g.trajectory = shoot(curve, mu, s0, s2 - s0, tol);
    g.d_s0 = -g.trajectory.entry().u;
    g.d_s2 = g.trajectory.reentry().u;
    return g;
}

/// Gradients of every branch connecting (s0, s2); for regimes without twist.
inline std::vector<ActionGradient> action_gradient_branches(const Curve& curve, double mu, double s0,
                                                            double s2, const Tolerances& tol = {}) {
    std::vector<ActionGradient> out;
    for (auto& rec : shoot_all_branches(curve, mu, s0, s2 - s0, 400, tol)) {
        ActionGradient g;
        g.d_s0 = -rec.entry().u;
        g.d_s2 = rec.reentry().u;
        g.trajectory = std::move(rec);
        out.push_back(std::move(g));
    }
    return out;
}

struct TwistMeasure {
    double min_slope = std::numeric_limits<double>::infinity();  // min d s2 / d u0
    PhaseState argmin;
    int evaluated = 0;
    int skipped = 0;  // grid points where the map is not defined (tangency)
};

/// Minimum of d s2 / d u0 over an ns x nu grid of interior states.
inline TwistMeasure twist_measure(const Curve& curve, double mu, int ns, int nu,
                                  const Tolerances& tol = {}) {
    TwistMeasure tm;
    for (int i = 0; i < ns; ++i) {
        const double s = curve.length() * i / ns;
        for (int j = 0; j < nu; ++j) {
            const double u = -1.0 + 2.0 * (j + 0.5) / nu;
            try {
                const auto rec = return_map(curve, PhaseState::from_u(s, u), mu, tol);
                const double slope = jacobian_return_closed_form(rec).su;
                ++tm.evaluated;
                if (slope < tm.min_slope) {
                    tm.min_slope = slope;
                    tm.argmin = rec.entry();
                }
            } catch (const Error&) {
                ++tm.skipped;
            }
        }
    }
    return tm;
}

}  // namespace imb
