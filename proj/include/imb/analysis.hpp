#pragma once

// Diagnostics built on the return map: phase portraits, images of vertical
// lines, near-boundary Taylor slopes, normal-form coordinates, caustic and
// Larmor-center statistics.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "imb/boundary.hpp"
#include "imb/dynamics.hpp"
#include "imb/error.hpp"
#include "imb/orbits.hpp"
#include "imb/parallel.hpp"
#include "imb/tolerances.hpp"

namespace imb {

// --- phase portraits --------------------------------------------------------------------

struct PortraitSpec {
    double s_min = 0.0;
    double s_max = -1.0;  // negative: whole boundary
    double u_min = -1.0;
    double u_max = 1.0;
    int ns = 1;
    int nu = 10;
    int iterations = 500;
    int decimation = 1;         // keep every k-th iterate
    bool native_angle = false;  // report phi instead of s
};

struct PortraitOrbit {
    int id = 0;
    PhaseState start;
    std::vector<std::pair<double, double>> points;  // (s or phi, u)
    bool tangency_stop = false;
};

/// Initial conditions: s in [s_min, s_max) with ns points, u strictly inside
/// (u_min, u_max) with nu cell-centered points. Orbits are independent, so
/// they run on `jobs` threads; results keep grid order.
inline std::vector<PortraitOrbit> phase_portrait(const Curve& curve, double mu, const PortraitSpec& spec,
                                                 int jobs = 1, const Tolerances& tol = {}) {
    if (spec.ns < 0 || spec.nu < 0 || spec.iterations < 0 || spec.decimation < 1) {
        throw Error(ErrorKind::invalid_argument, "portrait counts must be non-negative");
    }
    if (spec.u_min < -1.0 || spec.u_max > 1.0 || spec.u_min > spec.u_max) {
        throw Error(ErrorKind::invalid_argument, "portrait u range must lie in [-1, 1]");
    }
    const double L = curve.length();
    const double s_hi = spec.s_max < 0.0 ? spec.s_min + L : spec.s_max;
    const std::size_t total = static_cast<std::size_t>(spec.ns) * spec.nu;
    return parallel_map(total, jobs, [&](std::size_t idx) {
        const int i = static_cast<int>(idx) / spec.nu;
        const int j = static_cast<int>(idx) % spec.nu;
        PortraitOrbit orb;
        orb.id = static_cast<int>(idx);
        const double s = spec.ns == 1 ? spec.s_min : spec.s_min + (s_hi - spec.s_min) * i / spec.ns;
        const double u = spec.nu == 1 && spec.u_min == spec.u_max
                             ? spec.u_min
                             : spec.u_min + (spec.u_max - spec.u_min) * (j + 0.5) / spec.nu;
        orb.start = PhaseState::from_u(s, u);
        const OrbitTrace tr = iterate(curve, mu, orb.start, spec.iterations, tol);
        orb.tangency_stop = tr.tangency_stop;
        for (std::size_t k = 0; k < tr.states.size(); k += spec.decimation) {
            const auto& st = tr.states[k];
            const double x = spec.native_angle ? wrap_positive(curve.native_at(st.s), curve.period()) : st.s;
            orb.points.emplace_back(x, st.u);
        }
        return orb;
    });
}

// --- image of a vertical line --------------------------------------------------------------

enum class Monotonicity { strictly_increasing, strictly_decreasing, one_minimum, one_maximum, non_monotone };

inline const char* to_string(Monotonicity m) {
    switch (m) {
        case Monotonicity::strictly_increasing: return "strictly-increasing";
        case Monotonicity::strictly_decreasing: return "strictly-decreasing";
        case Monotonicity::one_minimum: return "one-minimum";
        case Monotonicity::one_maximum: return "one-maximum";
        case Monotonicity::non_monotone: return "non-monotone";
    }
    return "unknown";
}

struct Discontinuity {
    double u_left = 0.0;
    double u_right = 0.0;
    double jump = 0.0;  // lifted advance difference across the bracket
    bool map_failed = false;
};

struct VerticalLineImage {
    double s_fixed = 0.0;
    std::vector<double> u0;
    std::vector<double> advance;  // lifted s2 - s_fixed (NaN where undefined)
    std::vector<double> u2;
    int turning_points = 0;
    Monotonicity verdict = Monotonicity::strictly_increasing;
    std::vector<Discontinuity> discontinuities;
    bool tangency_flagged = false;
};

/// Image {T(s_fixed, u0)} over the given u samples. Large jumps between
/// neighbouring samples are bisected; a jump that survives 50 bisections is
/// a discontinuity of T (the Larmor circle touching the boundary).
inline VerticalLineImage image_of_vertical_line(const Curve& curve, double mu, double s_fixed,
                                                const std::vector<double>& u_samples,
                                                const Tolerances& tol = {}) {
    VerticalLineImage img;
    img.s_fixed = s_fixed;
    const double L = curve.length();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto eval = [&](double u) -> std::optional<SegmentRecord> {
        try {
            return return_map(curve, PhaseState::from_u(s_fixed, u), mu, tol);
        } catch (const Error&) {
            return std::nullopt;
        }
    };
    for (double u : u_samples) {
        if (!(u > -1.0 && u < 1.0)) throw Error(ErrorKind::invalid_argument, "u samples must lie in (-1, 1)");
        img.u0.push_back(u);
        const auto r = eval(u);
        img.advance.push_back(r ? r->advance : nan);
        img.u2.push_back(r ? r->reentry().u : nan);
    }
    const std::size_t n = img.u0.size();
    if (n < 2) return img;

    std::vector<double> steps;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double d = img.advance[i + 1] - img.advance[i];
        if (std::isfinite(d)) steps.push_back(std::abs(d));
    }
    double median = 0.0;
    if (!steps.empty()) {
        std::nth_element(steps.begin(), steps.begin() + steps.size() / 2, steps.end());
        median = steps[steps.size() / 2];
    }
    std::vector<bool> jump_after(n, false);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double a = img.advance[i], b = img.advance[i + 1];
        const bool failed = !std::isfinite(a) || !std::isfinite(b);
        if (!failed && std::abs(b - a) <= std::max(10.0 * median, 0.0) && std::abs(b - a) <= 0.05 * L) {
            continue;
        }
        double lo = img.u0[i], hi = img.u0[i + 1];
        double alo = a, ahi = b;
        bool map_failed = false;
        for (int it = 0; it < 50; ++it) {
            const double mid = 0.5 * (lo + hi);
            const auto r = eval(mid);
            if (!r) {
                map_failed = true;
                break;
            }
            const double am = r->advance;
            // Keep the half that carries the larger change.
            const double left = std::isfinite(alo) ? std::abs(am - alo) : std::numeric_limits<double>::infinity();
            const double right = std::isfinite(ahi) ? std::abs(ahi - am) : std::numeric_limits<double>::infinity();
            if (left >= right) {
                hi = mid;
                ahi = am;
            } else {
                lo = mid;
                alo = am;
            }
        }
        const double jump = (std::isfinite(alo) && std::isfinite(ahi)) ? ahi - alo : nan;
        if (map_failed || !std::isfinite(jump) || std::abs(jump) > 1e-4 * L) {
            img.discontinuities.push_back({lo, hi, jump, map_failed});
            jump_after[i] = true;
        }
    }
    img.tangency_flagged = !img.discontinuities.empty();

    // Turning points of the advance along continuous stretches.
    int sign_prev = 0;
    int first_sign = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (jump_after[i]) {
            sign_prev = 0;
            continue;
        }
        const double d = img.advance[i + 1] - img.advance[i];
        if (!std::isfinite(d) || d == 0.0) continue;
        const int sg = d > 0.0 ? 1 : -1;
        if (first_sign == 0) first_sign = sg;
        if (sign_prev != 0 && sg != sign_prev) ++img.turning_points;
        sign_prev = sg;
    }
    if (img.turning_points == 0) {
        img.verdict = first_sign >= 0 ? Monotonicity::strictly_increasing : Monotonicity::strictly_decreasing;
    } else if (img.turning_points == 1) {
        img.verdict = first_sign < 0 ? Monotonicity::one_minimum : Monotonicity::one_maximum;
    } else {
        img.verdict = Monotonicity::non_monotone;
    }
    return img;
}

// --- Taylor slopes near the boundary of phase space ------------------------------------------

enum class Side { minus_one, plus_one };  // u -> -1 (theta -> 0) or u -> +1 (theta -> pi)

inline const char* to_string(Side s) { return s == Side::minus_one ? "u=-1" : "u=+1"; }

struct TaylorCheck {
    double kappa = 0.0;
    double predicted = 0.0;
    double measured = 0.0;  // Richardson extrapolation of the last two slopes
    double relative_error = 0.0;
    double angles[3] = {1e-2, 1e-3, 1e-4};
    double slopes[3] = {0.0, 0.0, 0.0};
    double errors[3] = {0.0, 0.0, 0.0};  // |slope - predicted|
    double angle_drift = 0.0;  // |theta_out - theta_in| / theta_in at the smallest angle
};

namespace detail {

inline void finish_taylor(TaylorCheck& tc) {
    for (int k = 0; k < 3; ++k) tc.errors[k] = std::abs(tc.slopes[k] - tc.predicted);
    tc.measured = (10.0 * tc.slopes[2] - tc.slopes[1]) / 9.0;
    tc.relative_error = std::abs(tc.measured - tc.predicted) / std::abs(tc.predicted);
}

// Near u = -1 the arc stays local only when the Larmor circle lies on one
// side of every osculating circle.
inline void require_one_sided_regime(const Curve& curve, double mu, const Tolerances& tol) {
    const Regime r = classify_regime(curve, mu, tol);
    if (r != Regime::strong_field && r != Regime::weak_field) {
        throw Error(ErrorKind::regime_mismatch, "the u = -1 expansion needs the strong or weak field regime");
    }
}

}  // namespace detail

/// First-order slope of s2 - s1 in theta1 (or eta1 = pi - theta1) for the
/// arc map alone, against 2 mu / (1 -+ mu kappa).
inline TaylorCheck taylor_check_T2(const Curve& curve, double mu, double s1, Side side,
                                   const Tolerances& tol = {}) {
    TaylorCheck tc;
    tc.kappa = curve.frame(curve.native_at(s1)).curvature;
    const double L = curve.length();
    if (side == Side::minus_one) {
        if (std::abs(1.0 - mu * tc.kappa) < tol.regime) {
            throw Error(ErrorKind::denominator_singular, "1 - mu kappa vanishes at this point");
        }
        detail::require_one_sided_regime(curve, mu, tol);
        tc.predicted = 2.0 * mu / (1.0 - mu * tc.kappa);
    } else {
        tc.predicted = 2.0 * mu / (1.0 + mu * tc.kappa);
    }
    for (int k = 0; k < 3; ++k) {
        const double a = tc.angles[k];
        const double theta = side == Side::minus_one ? a : kPi - a;
        const ArcRecord r = arc_map(curve, PhaseState::from_angle(s1, theta), mu, tol);
        const double ds = std::remainder(r.reentry.s - s1, L);
        tc.slopes[k] = ds / a;
        if (k == 2) {
            const double out = side == Side::minus_one ? r.reentry.theta : kPi - r.reentry.theta;
            tc.angle_drift = std::abs(out - a) / a;
        }
    }
    detail::finish_taylor(tc);
    return tc;
}

/// First-order slope of s2 - s0 for the full return map, against
/// 2 / (kappa (1 - mu kappa)) near u = -1 and -2 / (kappa (1 + mu kappa)) near u = +1.
inline TaylorCheck taylor_check_T(const Curve& curve, double mu, double s0, Side side,
                                  const Tolerances& tol = {}) {
    TaylorCheck tc;
    tc.kappa = curve.frame(curve.native_at(s0)).curvature;
    const double L = curve.length();
    if (side == Side::minus_one) {
        if (std::abs(1.0 - mu * tc.kappa) < tol.regime) {
            throw Error(ErrorKind::denominator_singular, "1 - mu kappa vanishes at this point");
        }
        detail::require_one_sided_regime(curve, mu, tol);
        tc.predicted = 2.0 / (tc.kappa * (1.0 - mu * tc.kappa));
    } else {
        tc.predicted = -2.0 / (tc.kappa * (1.0 + mu * tc.kappa));
    }
    for (int k = 0; k < 3; ++k) {
        const double a = tc.angles[k];
        const double theta = side == Side::minus_one ? a : kPi - a;
        const SegmentRecord r = return_map(curve, PhaseState::from_angle(s0, theta), mu, tol);
        const double ds = std::remainder(r.advance, L);
        tc.slopes[k] = ds / a;
        if (k == 2) {
            const double out = side == Side::minus_one ? r.reentry().theta : kPi - r.reentry().theta;
            tc.angle_drift = std::abs(out - a) / a;
        }
    }
    detail::finish_taylor(tc);
    return tc;
}

// --- normal-form coordinates ----------------------------------------------------------------

enum class NormalFormCase { strong_near_minus, weak_near_minus, near_plus };

inline const char* to_string(NormalFormCase c) {
    switch (c) {
        case NormalFormCase::strong_near_minus: return "strong-near-minus";
        case NormalFormCase::weak_near_minus: return "weak-near-minus";
        case NormalFormCase::near_plus: return "near-plus";
    }
    return "unknown";
}

/// Coordinates (phi, r) in which the return map is r-preserving at first order:
///   strong_near_minus: phi = s - mu tau, r = 2 rho theta, period L - 2 pi mu
///   weak_near_minus:   phi = mu tau - s, r = 2 rho theta, period 2 pi mu - L
///   near_plus:         phi = s + mu tau, r = 2 rho eta,   period L + 2 pi mu
class NormalForm {
public:
    NormalForm(const Curve& curve, double mu, NormalFormCase which, const Tolerances& tol = {})
        : curve_(&curve), mu_(mu), case_(which) {
        const Regime reg = classify_regime(curve, mu, tol);
        const double L = curve.length();
        switch (which) {
            case NormalFormCase::strong_near_minus:
                if (reg != Regime::strong_field) {
                    throw Error(ErrorKind::regime_mismatch, "case needs the strong field regime");
                }
                period_ = L - kTwoPi * mu;
                lambda_ = 1;
                break;
            case NormalFormCase::weak_near_minus:
                if (reg != Regime::weak_field) {
                    throw Error(ErrorKind::regime_mismatch, "case needs the weak field regime");
                }
                period_ = kTwoPi * mu - L;
                lambda_ = -1;
                break;
            case NormalFormCase::near_plus:
                period_ = L + kTwoPi * mu;
                lambda_ = -1;
                break;
        }
    }

    double period() const { return period_; }
    int lambda() const { return lambda_; }
    NormalFormCase which() const { return case_; }

    /// (s, theta) -> (phi, r); phi is lifted (not reduced by the period).
    std::pair<double, double> forward(double s, double theta) const {
        const double phi_n = curve_->native_at(s);
        const double tau = curve_->tangent_angle(phi_n) - curve_->tangent_angle(0.0);
        const double rho = 1.0 / curve_->curvature_native(phi_n);
        switch (case_) {
            case NormalFormCase::strong_near_minus: return {s - mu_ * tau, 2.0 * rho * theta};
            case NormalFormCase::weak_near_minus: return {mu_ * tau - s, 2.0 * rho * theta};
            case NormalFormCase::near_plus: return {s + mu_ * tau, 2.0 * rho * (kPi - theta)};
        }
        return {0.0, 0.0};
    }

    /// (phi, r) -> (s, theta) by Newton on the phi equation; s_hint seeds it.
    std::pair<double, double> backward(double phi, double r, double s_hint) const {
        double s = s_hint;
        for (int it = 0; it < 60; ++it) {
            const double f = forward(s, kPi / 2).first - phi;
            const double kappa = curve_->frame(curve_->native_at(s)).curvature;
            double d = 0.0;
            switch (case_) {
                case NormalFormCase::strong_near_minus: d = 1.0 - mu_ * kappa; break;
                case NormalFormCase::weak_near_minus: d = mu_ * kappa - 1.0; break;
                case NormalFormCase::near_plus: d = 1.0 + mu_ * kappa; break;
            }
            const double step = f / d;
            s -= step;
            if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(s))) break;
        }
        const double rho = 1.0 / curve_->frame(curve_->native_at(s)).curvature;
        const double a = r / (2.0 * rho);
        return {s, case_ == NormalFormCase::near_plus ? kPi - a : a};
    }

    /// max |r2 - r0| / r0^2 over ns boundary points and r0 in [r_lo, r_hi]
    /// (log grid of nr values); finite and moderate when the first-order
    /// normal form is r-preserving.
    double first_order_constant(int ns = 16, int nr = 5, double r_lo = 1e-4, double r_hi = 1e-2,
                                const Tolerances& tol = {}) const {
        double c = 0.0;
        for (int i = 0; i < ns; ++i) {
            const double s = curve_->length() * i / ns;
            for (int j = 0; j < nr; ++j) {
                const double r0 = r_lo * std::pow(r_hi / r_lo, nr == 1 ? 0.0 : double(j) / (nr - 1));
                const double rho = 1.0 / curve_->frame(curve_->native_at(s)).curvature;
                const double a = r0 / (2.0 * rho);
                const double theta = case_ == NormalFormCase::near_plus ? kPi - a : a;
                const SegmentRecord rec = return_map(*curve_, PhaseState::from_angle(s, theta), mu_, tol);
                const double r2 = forward(s + rec.advance, rec.reentry().theta).second;
                c = std::max(c, std::abs(r2 - r0) / (r0 * r0));
            }
        }
        return c;
    }

private:
    const Curve* curve_;
    double mu_;
    NormalFormCase case_;
    double period_ = 0.0;
    int lambda_ = 1;
};

inline NormalForm normal_form_coords(const Curve& curve, double mu, NormalFormCase which,
                                     const Tolerances& tol = {}) {
    return NormalForm(curve, mu, which, tol);
}

// --- caustics and Larmor centers -----------------------------------------------------------

struct CurvatureGuard {
    bool passed = true;
    double min_curvature = 0.0;
};

/// Fails when the boundary has a point of (numerically) vanishing curvature,
/// in which case no interior caustic can exist.
inline CurvatureGuard vanishing_curvature_guard(const Curve& curve, const Tolerances& tol = {}) {
    CurvatureGuard g;
    g.min_curvature = curve.min_curvature();
    g.passed = g.min_curvature >= tol.regime;
    return g;
}

struct SpreadStats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double spread() const { return max - min; }
};

struct CausticReport {
    SpreadStats inner;  // distance from the origin to each chord line
    SpreadStats outer;  // |center - origin| + mu for each Larmor arc
    std::vector<double> inner_distances;
    std::vector<double> outer_distances;
    std::vector<Vec2> envelope;  // intersections of consecutive chord lines
    bool envelope_convex = false;
    bool guard_passed = true;
    bool inner_caustic = false;  // verdict: chords tangent to a convex curve
    bool outer_constant = false;  // experimental: constant outer envelope radius
    int chords = 0;
};

namespace detail {

inline SpreadStats stats_of(const std::vector<double>& v) {
    SpreadStats s;
    if (v.empty()) return s;
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    return s;
}

inline std::optional<Vec2> line_intersection(Vec2 p, Vec2 d, Vec2 q, Vec2 e) {
    const double den = cross(d, e);
    if (std::abs(den) < 1e-14 * norm(d) * norm(e)) return std::nullopt;
    const double t = cross(q - p, e) / den;
    return p + t * d;
}

// Points sorted by angle about their centroid must turn left at every vertex.
inline bool is_convex_closed(std::vector<Vec2> pts, double rel_tol) {
    if (pts.size() < 3) return false;
    Vec2 c;
    for (const auto& p : pts) c += p;
    c = c / static_cast<double>(pts.size());
    std::sort(pts.begin(), pts.end(),
              [&](Vec2 a, Vec2 b) { return polar_angle(a - c) < polar_angle(b - c); });
    const std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = pts[i], b = pts[(i + 1) % n], d = pts[(i + 2) % n];
        const Vec2 e1 = b - a, e2 = d - b;
        if (cross(e1, e2) < -rel_tol * norm(e1) * norm(e2)) return false;
    }
    return true;
}

}  // namespace detail

inline CausticReport caustic_report(const Curve& curve, const OrbitTrace& trace, Vec2 origin,
                                    const Tolerances& tol = {}) {
    CausticReport rep;
    rep.guard_passed = vanishing_curvature_guard(curve, tol).passed;
    for (const auto& r : trace.records) {
        if (r.boundary_limit) continue;
        const Vec2 d = r.chord.p1 - r.chord.p0;
        rep.inner_distances.push_back(std::abs(cross(d, origin - r.chord.p0)) / norm(d));
        rep.outer_distances.push_back(norm(r.arc.center - origin) + r.arc.mu);
    }
    rep.chords = static_cast<int>(rep.inner_distances.size());
    rep.inner = detail::stats_of(rep.inner_distances);
    rep.outer = detail::stats_of(rep.outer_distances);
    for (std::size_t k = 0; k + 1 < trace.records.size(); ++k) {
        const auto& a = trace.records[k].chord;
        const auto& b = trace.records[k + 1].chord;
        if (trace.records[k].boundary_limit || trace.records[k + 1].boundary_limit) continue;
        if (auto p = detail::line_intersection(a.p0, a.p1 - a.p0, b.p0, b.p1 - b.p0)) rep.envelope.push_back(*p);
    }
    rep.envelope_convex = detail::is_convex_closed(rep.envelope, tol.caustic);
    const bool constant_radius = rep.chords > 0 && rep.inner.spread() < tol.caustic;
    rep.inner_caustic = rep.guard_passed && rep.chords > 0 && (constant_radius || rep.envelope_convex);
    rep.outer_constant = rep.chords > 0 && rep.outer.spread() < tol.caustic;
    return rep;
}

inline std::vector<Vec2> larmor_center_locus(const OrbitTrace& trace) {
    std::vector<Vec2> out;
    out.reserve(trace.records.size());
    for (const auto& r : trace.records) out.push_back(r.arc.center);
    return out;
}

}  // namespace imb
