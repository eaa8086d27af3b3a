#pragma once

// The return map T = T2 o T1: a straight chord through the domain followed by
// a counterclockwise Larmor arc of radius mu outside it.
//
// Angle conventions. At every boundary point the frame is (t, n) with n the
// inward normal. An entering velocity is cos(theta) t + sin(theta) n, an
// exiting one cos(theta) t - sin(theta) n, so theta lies in (0, pi) in both
// cases and u = -cos(theta).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "imb/boundary.hpp"
#include "imb/error.hpp"
#include "imb/tolerances.hpp"
#include "imb/vec2.hpp"

namespace imb {

struct PhaseState {
    double s = 0.0;
    double u = 0.0;
    double theta = kPi / 2;

    static PhaseState from_u(double s, double u) {
        return {s, u, std::acos(std::clamp(-u, -1.0, 1.0))};
    }
    static PhaseState from_angle(double s, double theta) { return {s, -std::cos(theta), theta}; }
};

/// True when the state lies within tol.tangent of the phase-space boundary u = +-1.
inline bool is_boundary_state(const PhaseState& st, const Tolerances& tol = {}) {
    const double gap = std::min(st.theta, kPi - st.theta);
    return !(gap >= std::sqrt(2.0 * tol.tangent)) || 1.0 - std::abs(st.u) < 0.5 * tol.tangent;
}

struct ChordRecord {
    PhaseState entry;
    PhaseState exit;  // s lifted: exit.s - entry.s is the boundary advance
    double phi0 = 0.0;
    double phi1 = 0.0;
    Vec2 p0;
    Vec2 p1;
    double kappa0 = 0.0;
    double kappa1 = 0.0;
    double length = 0.0;  // l1
    double alpha = 0.0;   // polar angle of the chord direction
};

struct ArcRecord {
    PhaseState exit;
    PhaseState reentry;  // s lifted relative to exit.s
    double phi1 = 0.0;
    double phi2 = 0.0;
    Vec2 p1;
    Vec2 p2;
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    double chi = 0.0;       // half the traversed arc angle
    double length = 0.0;    // l2 = 2 mu sin(chi)
    Vec2 center;
    double mu = 0.0;

    double psi() const { return 2.0 * chi; }
    double epsilon() const { return kTwoPi - 2.0 * chi; }
    double delta() const { return 0.5 * kPi - chi; }
    double arc_length() const { return 2.0 * mu * chi; }
};

struct SegmentRecord {
    ChordRecord chord;
    ArcRecord arc;
    double advance = 0.0;  // lifted s2 - s0
    bool boundary_limit = false;
    std::optional<double> area_inside;   // A
    std::optional<double> area_outside;  // S

    const PhaseState& entry() const { return chord.entry; }
    const PhaseState& exit() const { return chord.exit; }
    const PhaseState& reentry() const { return arc.reentry; }
    double chi() const { return arc.chi; }
};

struct Jacobian2 {
    double ss = 1.0;  // d s_out / d s_in
    double su = 0.0;  // d s_out / d u_in
    double us = 0.0;  // d u_out / d s_in
    double uu = 1.0;  // d u_out / d u_in
    bool chi_near_right_angle = false;

    double det() const { return ss * uu - su * us; }
    double trace() const { return ss + uu; }
};

inline Jacobian2 operator*(const Jacobian2& a, const Jacobian2& b) {
    Jacobian2 r;
    r.ss = a.ss * b.ss + a.su * b.us;
    r.su = a.ss * b.su + a.su * b.uu;
    r.us = a.us * b.ss + a.uu * b.us;
    r.uu = a.us * b.su + a.uu * b.uu;
    r.chi_near_right_angle = a.chi_near_right_angle || b.chi_near_right_angle;
    return r;
}

namespace detail {

// Places phi_raw on the branch whose lifted tangent angle is closest to tau_target.
inline double lift_by_tangent(const Curve& curve, double phi_raw, double tau_target) {
    const double k = std::round((tau_target - curve.tangent_angle(phi_raw)) / kTwoPi);
    return phi_raw + k * curve.period();
}

}  // namespace detail

/// T1: chord from (s0, u0) to the exit point.
inline ChordRecord chord_map(const Curve& curve, const PhaseState& state, const Tolerances& tol = {}) {
    if (is_boundary_state(state, tol)) {
        throw Error(ErrorKind::tangent_chord, "chord direction is tangent to the boundary");
    }
    ChordRecord r;
    r.entry = state;
    r.phi0 = curve.native_at(state.s);
    r.phi1 = curve.chord_endpoint(r.phi0, state.theta);
    const Frame f0 = curve.frame(r.phi0);
    const Frame f1 = curve.frame(r.phi1);
    const Vec2 d = curve.chord_vector(r.phi0, r.phi1);
    r.length = norm(d);
    const Vec2 v = d / r.length;
    r.alpha = polar_angle(v);
    r.p0 = f0.position;
    r.p1 = f1.position;
    r.kappa0 = f0.curvature;
    r.kappa1 = f1.curvature;
    const double theta1 = std::atan2(-dot(v, f1.normal), dot(v, f1.tangent));
    const double ds = curve.arclength_at(r.phi1) - curve.arclength_at(r.phi0);
    r.exit = PhaseState::from_angle(state.s + ds, theta1);
    return r;
}

/// T2: Larmor arc from the exit state to the first reentry point.
///
/// The chord from P1 to the arc point at arc angle t has direction angle
/// t/2 - theta1 relative to t(s1) and length 2 mu sin(t/2). The gap
/// F(t) = 2 mu sin(t/2) - sigma(t/2 - theta1), with sigma the signed boundary
/// chord along the same line, is positive outside and negative inside; the
/// reentry is its first zero on (0, 2 pi).
inline ArcRecord arc_map(const Curve& curve, const PhaseState& exit, double mu,
                         const Tolerances& tol = {}) {
    if (!(mu > 0.0)) throw Error(ErrorKind::invalid_argument, "mu must be positive");
    if (is_boundary_state(exit, tol)) {
        throw Error(ErrorKind::tangent_chord, "exit direction is tangent to the boundary");
    }
    ArcRecord r;
    r.exit = exit;
    r.mu = mu;
    r.phi1 = curve.native_at(exit.s);
    const Frame f1 = curve.frame(r.phi1);
    r.p1 = f1.position;
    r.kappa1 = f1.curvature;
    const double theta1 = exit.theta;
    const Vec2 v = std::cos(theta1) * f1.tangent - std::sin(theta1) * f1.normal;
    r.center = r.p1 + mu * perp(v);

    const auto& quad = curve.quadric();
    const double grad = quad ? 2.0 * std::hypot(quad->a * r.p1.x, quad->b * r.p1.y) : 0.0;
    auto sigma = [&](double a) {
        if (quad) {
            const Vec2 w = std::cos(a) * f1.tangent + std::sin(a) * f1.normal;
            return grad * std::sin(a) / (quad->a * w.x * w.x + quad->b * w.y * w.y);
        }
        return curve.signed_chord(r.phi1, a);
    };
    auto gap = [&](double t) { return 2.0 * mu * std::sin(0.5 * t) - sigma(0.5 * t - theta1); };

    const double scale = mu + 2.0 * curve.extent();
    const double dt = std::min(kPi / 64.0, 1.0 / (4.0 * mu * curve.max_curvature()));
    const int steps = static_cast<int>(std::ceil(kTwoPi / dt));
    const double h = kTwoPi / steps;

    boost::math::tools::eps_tolerance<double> stop(50);
    auto refine = [&](double a, double b, double fa, double fb) {
        std::uintmax_t iters = 200;
        auto [lo, hi] = boost::math::tools::toms748_solve(gap, a, b, fa, fb, stop, iters);
        return 0.5 * (lo + hi);
    };

    double t_star = -1.0;
    double t_prev = 0.0, f_prev = gap(0.0);
    double t_prev2 = 0.0, f_prev2 = f_prev;
    for (int k = 1; k <= steps; ++k) {
        const double t = (k == steps) ? kTwoPi : k * h;
        const double f = gap(t);
        if (f <= 0.0) {
            t_star = (f == 0.0) ? t : refine(t_prev, t, f_prev, f);
            break;
        }
        // Sampled local minimum close to zero: the circle may graze the
        // boundary, or cross twice, between samples.
        if (k >= 2 && f_prev <= f_prev2 && f_prev <= f && f_prev < 2.0 * h * scale) {
            auto neg = [&](double x) { return gap(x); };
            const auto [tm, fm] = boost::math::tools::brent_find_minima(neg, t_prev2, t, 52);
            if (std::abs(fm) <= tol.tangent_slope * scale) {
                throw Error(ErrorKind::tangency_discontinuity,
                            "Larmor circle grazes the boundary");
            }
            if (fm < 0.0) {
                t_star = refine(t_prev2, tm, f_prev2, fm);
                break;
            }
        }
        t_prev2 = t_prev;
        f_prev2 = f_prev;
        t_prev = t;
        f_prev = f;
    }
    if (t_star <= 0.0) {
        throw Error(ErrorKind::tangency_discontinuity, "no transversal reentry found");
    }
    {
        const double hs = 1e-6 * std::max(t_star, 1e-3);
        const double slope = (gap(t_star + hs) - gap(t_star - hs)) / (2.0 * hs);
        if (std::abs(slope) < tol.tangent_slope * scale) {
            throw Error(ErrorKind::tangency_discontinuity,
                        "Larmor circle is tangent to the boundary at reentry");
        }
    }

    r.chi = 0.5 * t_star;
    r.length = 2.0 * mu * std::sin(r.chi);
    const double aw = r.chi - theta1;  // chord direction angle relative to t(s1)
    double phi2;
    if (aw > 0.0) {
        phi2 = curve.chord_endpoint(r.phi1, std::min(aw, kPi - 1e-300));
    } else {
        phi2 = curve.chord_endpoint(r.phi1, aw + kPi);
    }
    const Frame f2 = curve.frame(phi2);
    r.p2 = f2.position;
    r.kappa2 = f2.curvature;
    const Vec2 v2 = std::cos(t_star) * v + std::sin(t_star) * perp(v);
    const double theta2 = std::atan2(dot(v2, f2.normal), dot(v2, f2.tangent));
    const double tau_target = curve.tangent_angle(r.phi1) + 2.0 * r.chi - theta1 - theta2;
    r.phi2 = detail::lift_by_tangent(curve, phi2, tau_target);
    const double ds = curve.arclength_at(r.phi2) - curve.arclength_at(r.phi1);
    r.reentry = PhaseState::from_angle(exit.s + ds, theta2);
    return r;
}

/// Area A between the chord P1P2 and the boundary arc from s1 forward to s2.
inline double segment_area_inside(const Curve& curve, const ArcRecord& arc,
                                  const Tolerances& tol = {}) {
    const double span = wrap_positive(arc.phi2 - arc.phi1, curve.period());
    if (span == 0.0) return 0.0;
    auto integrand = [&](double phi) {
        return cross(curve.chord_vector(arc.phi1, phi), curve.first(phi));
    };
    double err = 0.0;
    const double a = 0.5 * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                               integrand, arc.phi1, arc.phi1 + span, 8, 1e-14, &err);
    if (!(0.5 * err <= tol.area)) {
        throw Error(ErrorKind::quadrature_failure,
                    "area quadrature error estimate " + std::to_string(0.5 * err));
    }
    return a;
}

/// T = T2 o T1. The reentry state's s is reduced to [0, L); the lifted
/// advance is kept in `advance`. Boundary states map to themselves. On u = +1
/// the advance is L; on u = -1 it is 0 where mu kappa(s) < 1 and L where the
/// Larmor circle is flatter than the boundary, matching the limit from inside.
inline SegmentRecord return_map(const Curve& curve, const PhaseState& state, double mu,
                                const Tolerances& tol = {}, bool with_areas = false) {
    SegmentRecord rec;
    if (is_boundary_state(state, tol)) {
        rec.boundary_limit = true;
        rec.chord.entry = state;
        rec.chord.exit = state;
        rec.arc.exit = state;
        rec.arc.mu = mu;
        const double phi = curve.native_at(state.s);
        const Frame f = curve.frame(phi);
        const bool full_lap = state.u > 0.0 || mu * f.curvature > 1.0;
        rec.advance = full_lap ? curve.length() : 0.0;
        rec.arc.reentry = state;
        rec.arc.reentry.s = wrap_positive(state.s, curve.length());
        if (with_areas) {
            rec.area_inside = 0.0;
            rec.area_outside = 0.0;
        }
        rec.chord.phi0 = rec.chord.phi1 = rec.arc.phi1 = rec.arc.phi2 = phi;
        rec.chord.p0 = rec.chord.p1 = rec.arc.p1 = rec.arc.p2 = f.position;
        rec.chord.kappa0 = rec.chord.kappa1 = rec.arc.kappa1 = rec.arc.kappa2 = f.curvature;
        rec.arc.center = f.position + mu * f.normal;
        rec.arc.chi = full_lap ? kPi : 0.0;
        return rec;
    }
    rec.chord = chord_map(curve, state, tol);
    rec.arc = arc_map(curve, rec.chord.exit, mu, tol);
    rec.advance = rec.arc.reentry.s - state.s;
    rec.arc.reentry.s = wrap_positive(rec.arc.reentry.s, curve.length());
    if (with_areas) {
        const double a = segment_area_inside(curve, rec.arc, tol);
        const double c = rec.arc.chi;
        rec.area_inside = a;
        rec.area_outside = mu * mu * (c - std::sin(c) * std::cos(c)) - a;
    }
    return rec;
}

// --- Jacobians ---------------------------------------------------------------------

inline Jacobian2 jacobian_chord(const ChordRecord& r) {
    const double s0 = std::sin(r.entry.theta), s1 = std::sin(r.exit.theta);
    const double k0 = r.kappa0, k1 = r.kappa1, l = r.length;
    Jacobian2 j;
    j.ss = (k0 * l - s0) / s1;
    j.su = l / (s0 * s1);
    j.us = k0 * k1 * l - k1 * s0 - k0 * s1;
    j.uu = (k1 * l - s1) / s0;
    return j;
}

inline Jacobian2 jacobian_arc(const ArcRecord& r, const Tolerances& tol = {}) {
    const double t1 = r.exit.theta, t2 = r.reentry.theta, c = r.chi;
    const double k1 = r.kappa1, k2 = r.kappa2, l2 = r.length;
    const double st1 = std::sin(t1), st2 = std::sin(t2);
    const double a1 = std::sin(2 * c - t1), a2 = std::sin(2 * c - t2);
    const double lc = l2 * std::cos(c);
    Jacobian2 j;
    j.ss = (a1 - k1 * lc) / st2;
    j.su = lc / (st1 * st2);
    if (std::abs(std::cos(c)) < tol.chi) {
        // The leading quotient is 0/0 here; it equals sin(2chi - th1 - th2)/mu.
        j.us = std::sin(2 * c - t1 - t2) / r.mu - k1 * a2 - k2 * a1 + k1 * k2 * lc;
        j.chi_near_right_angle = true;
    } else {
        j.us = (a1 * a2 - st1 * st2) / lc - k1 * a2 - k2 * a1 + k1 * k2 * lc;
    }
    j.uu = (a2 - k2 * lc) / st1;
    return j;
}

/// DT as the product DT2 * DT1.
inline Jacobian2 jacobian_return(const SegmentRecord& rec, const Tolerances& tol = {}) {
    if (rec.boundary_limit) return Jacobian2{};
    return jacobian_arc(rec.arc, tol) * jacobian_chord(rec.chord);
}

/// DT from the explicit composite formulas, evaluated independently of the product.
inline Jacobian2 jacobian_return_closed_form(const SegmentRecord& rec) {
    if (rec.boundary_limit) return Jacobian2{};
    const double t0 = rec.chord.entry.theta, t1 = rec.chord.exit.theta;
    const double t2 = rec.arc.reentry.theta, c = rec.arc.chi;
    const double k0 = rec.chord.kappa0, k2 = rec.arc.kappa2;
    const double l1 = rec.chord.length, l2 = rec.arc.length;
    const double st0 = std::sin(t0), st1 = std::sin(t1), st2 = std::sin(t2);
    const double a1 = std::sin(2 * c - t1), a2 = std::sin(2 * c - t2);
    const double a12 = std::sin(2 * c - t1 - t2);
    const double cc = std::cos(c), sc = std::sin(c);
    Jacobian2 j;
    j.ss = (k0 * l1 * a1 - st0 * a1 - k0 * l2 * cc * st1) / (st1 * st2);
    j.su = (l1 * a1 - l2 * cc * st1) / (st0 * st1 * st2);
    j.us = k2 * st0 * a1 / st1 + 2 * sc * a12 * (k0 * l1 - st0) / (l2 * st1) -
           k0 * (a2 + k2 * l1 * a1 / st1 - k2 * l2 * cc);
    j.uu = (k2 * l2 * cc - a2) / st0 + (2 * l1 * sc * a12 - k2 * l1 * l2 * a1) / (l2 * st0 * st1);
    return j;
}

inline Jacobian2 jacobian_chord(const Curve& curve, const PhaseState& state,
                                const Tolerances& tol = {}) {
    return jacobian_chord(chord_map(curve, state, tol));
}

inline Jacobian2 jacobian_arc(const Curve& curve, const PhaseState& exit, double mu,
                              const Tolerances& tol = {}) {
    return jacobian_arc(arc_map(curve, exit, mu, tol), tol);
}

inline Jacobian2 jacobian_return(const Curve& curve, const PhaseState& state, double mu,
                                 const Tolerances& tol = {}) {
    return jacobian_return(return_map(curve, state, mu, tol), tol);
}

// --- mu-intersection property ----------------------------------------------------------

struct MuIntersection {
    bool holds = true;
    bool by_regime = false;  // decided by the curvature-regime sufficient condition
    int max_crossings = 2;
    int circles_tested = 0;
    Regime regime = Regime::strong_field;
};

/// Number of sign changes of the inside indicator along a circle.
inline int count_circle_crossings(const Curve& curve, Vec2 center, double radius, int samples = 2048,
                                  double phase = 0.0) {
    std::vector<bool> outside(samples);
    for (int k = 0; k < samples; ++k) {
        const double a = phase + kTwoPi * (k + 0.5) / samples;
        outside[k] = curve.signed_distance(center + radius * unit_from_angle(a)) > 0.0;
    }
    int changes = 0;
    for (int k = 0; k < samples; ++k) changes += outside[k] != outside[(k + 1) % samples];
    return changes;
}

/// Checks whether every circle of radius mu meets the boundary at most twice.
/// Outside the intermediate regime the answer follows from the regime alone;
/// inside it circles through a grid of boundary points in a fan of directions
/// are sampled, so a `true` there is advisory.
inline MuIntersection mu_intersection_check(const Curve& curve, double mu, int samples = 256,
                                            const Tolerances& tol = {}) {
    MuIntersection res;
    res.regime = classify_regime(curve, mu, tol);
    if (res.regime == Regime::strong_field || res.regime == Regime::weak_field) {
        res.by_regime = true;
        return res;
    }
    static constexpr double kFan[] = {0.02, 0.1, 0.3, 0.6, 1.0, 1.4};
    res.max_crossings = 0;
    for (int i = 0; i < samples; ++i) {
        const double phi = curve.period() * i / samples;
        const Frame f = curve.frame(phi);
        for (double a : kFan) {
            for (double sgn : {-1.0, 1.0}) {
                const double ang = sgn * a;
                const Vec2 dir = std::cos(ang) * f.normal + std::sin(ang) * f.tangent;
                const Vec2 c = f.position + mu * dir;
                const int n = count_circle_crossings(curve, c, mu, 1024, polar_angle(-dir));
                ++res.circles_tested;
                res.max_crossings = std::max(res.max_crossings, n);
            }
        }
    }
    res.holds = res.max_crossings <= 2;
    return res;
}

}  // namespace imb
