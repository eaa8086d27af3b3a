#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "imb/dynamics.hpp"

using namespace imb;

namespace {

// Circle of radius R: the Larmor center, the domain center and the exit point
// form a triangle with sides R, mu and the angle pi - theta at the exit point.
double circle_chi(double R, double mu, double theta) {
    return theta + std::atan2(mu * std::sin(theta), R - mu * std::cos(theta));
}

double rel_error(const Jacobian2& a, const Jacobian2& b) {
    const double num = std::hypot(std::hypot(a.ss - b.ss, a.su - b.su), std::hypot(a.us - b.us, a.uu - b.uu));
    return num / std::max(1.0, std::hypot(std::hypot(b.ss, b.su), std::hypot(b.us, b.uu)));
}

// Central differences of a map given as (s, u) -> (lifted s advance, u).
template <class F>
Jacobian2 central_difference(F&& f, double s, double u, double h = 1e-6) {
    const auto sp = f(s + h, u), sm = f(s - h, u), up = f(s, u + h), um = f(s, u - h);
    Jacobian2 j;
    j.ss = (2 * h + sp.first - sm.first) / (2 * h);
    j.us = (sp.second - sm.second) / (2 * h);
    j.su = (up.first - um.first) / (2 * h);
    j.uu = (up.second - um.second) / (2 * h);
    return j;
}

std::vector<PhaseState> sample_states(const Curve& c, int n, unsigned seed, double umax = 0.98) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> us(-umax, umax), ss(0.0, c.length());
    std::vector<PhaseState> out;
    for (int k = 0; k < n; ++k) out.push_back(PhaseState::from_u(ss(g), us(g)));
    return out;
}

}  // namespace

TEST(Circle, ReturnMapIsRigidRotation) {
    for (double R : {1.0, 2.0}) {
        const auto c = Curve::circle(R);
        for (double mu : {0.1, 0.5, 0.9 * R, 3.0 * R}) {
            for (double theta : {0.05, 0.7, kPi / 2, 2.5, 3.1}) {
                const auto rec = return_map(c, PhaseState::from_angle(0.4, theta), mu);
                const double chi = circle_chi(R, mu, theta);
                EXPECT_NEAR(rec.chi(), chi, 1e-12) << R << ' ' << mu << ' ' << theta;
                EXPECT_NEAR(rec.advance, 2.0 * R * chi, 1e-11);
                EXPECT_NEAR(rec.reentry().theta, theta, 1e-12);
            }
        }
    }
}

TEST(Circle, RightAngleExample) {
    const auto c = Curve::circle(1.0);
    const auto rec = return_map(c, PhaseState::from_angle(0.0, kPi / 2), 0.5);
    // theta = pi/2: chi = pi/2 + arcsin(mu / sqrt(1 + mu^2)).
    EXPECT_NEAR(rec.chi(), kPi / 2 + std::asin(0.5 / std::sqrt(1.25)), 1e-14);
    EXPECT_NEAR(rec.chord.length, 2.0, 1e-14);
    EXPECT_NEAR(rec.arc.length, 2.0 * 0.5 * std::sin(rec.chi()), 1e-14);
}

TEST(Circle, LongOrbitKeepsU) {
    const auto c = Curve::circle(1.0);
    PhaseState st = PhaseState::from_u(0.0, -0.37);
    double drift = 0.0;
    for (int k = 0; k < 2000; ++k) {
        st = return_map(c, st, 0.5).reentry();
        drift = std::max(drift, std::abs(st.u + 0.37));
    }
    EXPECT_LT(drift, 1e-12);
}

TEST(BoundaryStates, IdentityWithFullOrZeroAdvance) {
    const auto e = Curve::ellipse(2.0);
    const auto lo = return_map(e, PhaseState::from_u(1.3, -1.0), 0.3);
    EXPECT_TRUE(lo.boundary_limit);
    EXPECT_EQ(lo.advance, 0.0);
    EXPECT_NEAR(lo.reentry().s, 1.3, 1e-15);
    const auto hi = return_map(e, PhaseState::from_u(1.3, 1.0), 0.3);
    EXPECT_NEAR(hi.advance, e.length(), 1e-15);
    EXPECT_EQ(hi.reentry().u, 1.0);
}

TEST(BoundaryStates, ContinuousLimits) {
    // Near u = -1 the lift tends to 0 when the Larmor circle curves more than
    // the boundary and to L (one full lap) when it curves less.
    const auto e = Curve::ellipse(2.0);
    for (double mu : {0.3, 5.0}) {
        const double lap = mu < 0.5 ? 0.0 : e.length();
        const auto near_lo = return_map(e, PhaseState::from_angle(2.0, 1e-6), mu);
        EXPECT_NEAR(near_lo.advance, lap, 1e-4);
        EXPECT_EQ(return_map(e, PhaseState::from_u(2.0, -1.0), mu).advance, lap);
        const auto near_hi = return_map(e, PhaseState::from_angle(2.0, kPi - 1e-6), mu);
        EXPECT_NEAR(near_hi.advance, e.length(), 1e-4);
    }
}

TEST(Symplectic, DeterminantIsOne) {
    const auto e = Curve::ellipse(2.0);
    for (double mu : {0.3, 1.0, 5.0}) {
        for (const auto& st : sample_states(e, 200, 11)) {
            try {
                const auto rec = return_map(e, st, mu);
                const auto J = jacobian_return(rec);
                EXPECT_NEAR(J.det(), 1.0, 1e-10);
                EXPECT_NEAR(jacobian_chord(rec.chord).det(), 1.0, 1e-10);
                EXPECT_NEAR(jacobian_arc(rec.arc).det(), 1.0, 1e-10);
                EXPECT_LT(rel_error(jacobian_return_closed_form(rec), J), 1e-10);
            } catch (const Error& err) {
                EXPECT_EQ(err.kind(), ErrorKind::tangency_discontinuity);
            }
        }
    }
}

TEST(Jacobian, ChordMatchesFiniteDifferences) {
    const auto e = Curve::ellipse(2.0);
    const double L = e.length();
    auto f = [&](double s, double u) {
        const auto r = chord_map(e, PhaseState::from_u(s, u));
        return std::make_pair(std::remainder(r.exit.s - s, L), r.exit.u);
    };
    for (const auto& st : sample_states(e, 50, 3, 0.95)) {
        const auto J = jacobian_chord(chord_map(e, st));
        EXPECT_LT(rel_error(J, central_difference(f, st.s, st.u)), 1e-6);
    }
}

TEST(Jacobian, ArcMatchesFiniteDifferences) {
    const auto e = Curve::ellipse(2.0);
    for (double mu : {0.3, 5.0}) {
        auto f = [&](double s, double u) {
            const auto r = arc_map(e, PhaseState::from_u(s, u), mu);
            return std::make_pair(r.reentry.s - s, r.reentry.u);
        };
        for (const auto& st : sample_states(e, 50, 5, 0.95)) {
            const auto J = jacobian_arc(arc_map(e, st, mu));
            EXPECT_LT(rel_error(J, central_difference(f, st.s, st.u)), 1e-6) << mu;
        }
    }
}

TEST(Jacobian, ReturnMatchesFiniteDifferences) {
    const auto e = Curve::ellipse(2.0);
    for (double mu : {0.3, 1.0, 5.0}) {
        auto f = [&](double s, double u) {
            const auto r = return_map(e, PhaseState::from_u(s, u), mu);
            return std::make_pair(r.advance, r.reentry().u);
        };
        for (const auto& st : sample_states(e, 50, 9, 0.95)) {
            try {
                const auto J = jacobian_return(e, st, mu);
                EXPECT_LT(rel_error(J, central_difference(f, st.s, st.u)), 1e-5) << mu;
            } catch (const Error&) {
            }
        }
    }
}

TEST(Jacobian, ProductOfFactors) {
    const auto e = Curve::ellipse(1.5);
    const auto rec = return_map(e, PhaseState::from_u(0.8, 0.2), 0.4);
    const auto P = jacobian_arc(rec.arc) * jacobian_chord(rec.chord);
    EXPECT_LT(rel_error(jacobian_return(rec), P), 1e-15);
}

TEST(Jacobian, RightAngleArcUsesStableGrouping) {
    const auto c = Curve::circle(1.0);
    const double mu = 0.5;
    double lo = 0.0, hi = kPi / 2;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        (circle_chi(1.0, mu, mid) < kPi / 2 ? lo : hi) = mid;
    }
    const auto rec = return_map(c, PhaseState::from_angle(0.0, lo), mu);
    EXPECT_NEAR(rec.chi(), kPi / 2, 1e-12);
    const auto J = jacobian_arc(rec.arc);
    EXPECT_TRUE(J.chi_near_right_angle);
    EXPECT_TRUE(std::isfinite(J.us));
    EXPECT_NEAR(J.det(), 1.0, 1e-9);
    auto f = [&](double s, double u) {
        const auto r = arc_map(c, PhaseState::from_u(s, u), mu);
        return std::make_pair(r.reentry.s - s, r.reentry.u);
    };
    const auto ex = rec.exit();
    EXPECT_LT(rel_error(J, central_difference(f, ex.s, ex.u)), 1e-6);
}

TEST(Geometry, ArcEndpointsOnLarmorCircle) {
    const auto e = Curve::ellipse(2.0);
    for (double mu : {0.3, 1.0, 5.0}) {
        for (const auto& st : sample_states(e, 40, 21)) {
            try {
                const auto r = return_map(e, st, mu);
                EXPECT_NEAR(norm(r.arc.p1 - r.arc.center), mu, 1e-11);
                EXPECT_NEAR(norm(r.arc.p2 - r.arc.center), mu, 1e-11);
                EXPECT_NEAR(norm(r.arc.p2 - r.arc.p1), r.arc.length, 1e-11);
                EXPECT_NEAR(r.arc.length, 2.0 * mu * std::sin(r.chi()), 1e-11);
                // The arc runs outside the domain: its midpoint is outside.
                const Vec2 mid_dir = unit_from_angle(polar_angle(r.arc.p1 - r.arc.center) + r.chi());
                EXPECT_GT(e.signed_distance(r.arc.center + mu * mid_dir), 0.0);
            } catch (const Error&) {
            }
        }
    }
}

TEST(Limit, SmallRadiusIsStandardBilliard) {
    // Standard billiard in the ellipse (lambda cos t, sin t): intersect the
    // chord line with x^2/lambda^2 + y^2 = 1 and reflect.
    const double lambda = 2.0;
    const auto e = Curve::ellipse(lambda);
    for (const auto& st : sample_states(e, 50, 17, 0.9)) {
        const auto b = e.evaluate(st.s);
        const Vec2 w = std::cos(st.theta) * b.tangent + std::sin(st.theta) * b.normal;
        const Vec2 p = b.position;
        const double qa = w.x * w.x / (lambda * lambda) + w.y * w.y;
        const double qb = 2.0 * (p.x * w.x / (lambda * lambda) + p.y * w.y);
        const Vec2 p1 = p + (-qb / qa) * w;
        const double t1 = std::atan2(p1.y, p1.x / lambda);
        const Vec2 tan1 = Vec2{-lambda * std::sin(t1), std::cos(t1)} / std::hypot(lambda * std::sin(t1), std::cos(t1));
        const double u1 = -dot(w, tan1);

        const auto rec = return_map(e, st, 1e-4);
        EXPECT_LT(norm(e.evaluate(rec.reentry().s).position - p1), 1e-3);
        EXPECT_NEAR(rec.reentry().u, u1, 1e-3);
    }
}

TEST(Tangency, LarmorCircleGrazingIsFlagged) {
    // mu = 1 lies between the curvature radii: somewhere along a vertical line
    // the Larmor circle touches the ellipse and the map jumps.
    const auto e = Curve::ellipse(2.0);
    int flagged = 0;
    for (double s : {0.0, 1.2, 2.4, 3.6}) {
        double prev = std::nan("");
        for (int j = 1; j < 400; ++j) {
            const double u = -1.0 + 2.0 * j / 400;
            try {
                const double adv = return_map(e, PhaseState::from_u(s, u), 1.0).advance;
                if (std::isfinite(prev) && std::abs(adv - prev) > 0.5) ++flagged;
                prev = adv;
            } catch (const Error& err) {
                EXPECT_EQ(err.kind(), ErrorKind::tangency_discontinuity);
                ++flagged;
            }
        }
    }
    EXPECT_GT(flagged, 0);
}

TEST(MuIntersection, RegimeShortcutAndSampling) {
    const auto e = Curve::ellipse(2.0);
    const auto strong = mu_intersection_check(e, 0.3);
    EXPECT_TRUE(strong.holds);
    EXPECT_TRUE(strong.by_regime);
    const auto weak = mu_intersection_check(e, 5.0);
    EXPECT_TRUE(weak.holds);
    const auto mid = mu_intersection_check(e, 1.0);
    EXPECT_FALSE(mid.holds);
    EXPECT_FALSE(mid.by_regime);
    EXPECT_GE(mid.max_crossings, 4);
}

TEST(MuIntersection, CrossingCount) {
    const auto e = Curve::ellipse(2.0);
    // Unit circle centered at (0.99, 0) crosses the ellipse near both ends of
    // the minor axis and near the right vertex.
    EXPECT_EQ(count_circle_crossings(e, {0.99, 0.0}, 1.0), 4);
    EXPECT_EQ(count_circle_crossings(e, {0.0, 0.0}, 0.5), 0);
    EXPECT_EQ(count_circle_crossings(e, {0.0, 0.0}, 1.5), 4);
    EXPECT_EQ(count_circle_crossings(e, {0.0, 2.0}, 1.5), 2);
}

TEST(Area, CircleSegmentClosedForm) {
    // For the circle, A is the circular segment of the domain cut by the arc chord.
    const auto c = Curve::circle(1.0);
    for (double theta : {0.4, 1.2, 2.0}) {
        const auto rec = return_map(c, PhaseState::from_angle(0.0, theta), 0.5, {}, true);
        const double half = rec.chi() - theta;  // half the central angle from P1 to P2
        const double segment = half - std::sin(half) * std::cos(half);
        EXPECT_NEAR(*rec.area_inside, segment, 1e-12);
        const double chi = rec.chi();
        EXPECT_NEAR(*rec.area_outside, 0.25 * (chi - std::sin(chi) * std::cos(chi)) - segment, 1e-12);
    }
}
