#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "imb/boundary.hpp"

using namespace imb;

namespace {

// Ellipse (lambda cos t, sin t): curvature and perimeter from textbook formulas.
double ellipse_kappa(double lambda, double t) {
    const double q = lambda * lambda * std::sin(t) * std::sin(t) + std::cos(t) * std::cos(t);
    return lambda / std::pow(q, 1.5);
}

double ellipse_perimeter(double lambda) {
    const double e = std::sqrt(1.0 - 1.0 / (lambda * lambda));
    return 4.0 * lambda * std::comp_ellint_2(e);
}

}  // namespace

TEST(Circle, LengthAndCurvature) {
    const auto c = Curve::circle(2.5);
    EXPECT_NEAR(c.length(), 2.0 * kPi * 2.5, 1e-12);
    for (double s : {0.0, 1.0, 7.3, 15.0}) EXPECT_NEAR(c.evaluate(s).curvature, 0.4, 1e-12);
    EXPECT_NEAR(c.signed_area(), kPi * 2.5 * 2.5, 1e-10);
}

TEST(Ellipse, PerimeterMatchesEllipticIntegral) {
    for (double lambda : {1.0, 1.5, 2.0, 4.0}) {
        const auto c = Curve::ellipse(lambda);
        EXPECT_NEAR(c.length(), ellipse_perimeter(lambda), 1e-11) << lambda;
    }
}

TEST(Ellipse, CurvatureExtremaAndRadii) {
    const auto c = Curve::ellipse(2.0);
    EXPECT_NEAR(c.max_curvature(), 2.0, 1e-10);
    EXPECT_NEAR(c.min_curvature(), 0.25, 1e-10);
    const auto r = c.curvature_pair();
    EXPECT_NEAR(r.rho_min, 0.5, 1e-10);
    EXPECT_NEAR(r.rho_max, 4.0, 1e-10);
    for (double t = 0.0; t < kTwoPi; t += 0.37) EXPECT_NEAR(c.curvature_native(t), ellipse_kappa(2.0, t), 1e-12);
}

TEST(Ellipse, ArclengthRoundTrip) {
    const auto c = Curve::ellipse(2.0);
    for (double phi = -7.0; phi < 14.0; phi += 0.731) {
        EXPECT_NEAR(c.native_at(c.arclength_at(phi)), phi, 1e-11);
    }
    EXPECT_NEAR(c.arclength_at(kPi / 2), c.length() / 4, 1e-12);
    EXPECT_NEAR(c.arclength_at(kTwoPi), c.length(), 1e-12);
}

TEST(Ellipse, UnitSpeedFrame) {
    const auto c = Curve::ellipse(3.0);
    const double h = 1e-5;
    for (double s = 0.1; s < c.length(); s += 0.9) {
        const auto a = c.evaluate(s + h), b = c.evaluate(s - h);
        const Vec2 d = (a.position - b.position) / (2 * h);
        EXPECT_NEAR(norm(d), 1.0, 1e-9);
        const auto p = c.evaluate(s);
        EXPECT_NEAR(dot(p.tangent, p.normal), 0.0, 1e-15);
        EXPECT_NEAR(cross(p.tangent, p.normal), 1.0, 1e-15);  // normal points inward
    }
}

TEST(Ellipse, TangentAngleIsLifted) {
    const auto c = Curve::ellipse(2.0);
    EXPECT_NEAR(c.tangent_angle(kTwoPi + 0.3) - c.tangent_angle(0.3), kTwoPi, 1e-12);
    double prev = c.tangent_angle(0.0);
    for (double t = 0.01; t < 2 * kTwoPi; t += 0.01) {
        const double cur = c.tangent_angle(t);
        EXPECT_GT(cur, prev);
        prev = cur;
    }
}

TEST(Regime, Classification) {
    const auto e = Curve::ellipse(2.0);
    EXPECT_EQ(classify_regime(e, 0.3), Regime::strong_field);
    EXPECT_EQ(classify_regime(e, 1.0), Regime::intermediate);
    EXPECT_EQ(classify_regime(e, 5.0), Regime::weak_field);
    EXPECT_EQ(classify_regime(e, 0.5), Regime::boundary);
    EXPECT_EQ(classify_regime(Curve::circle(1.0), 1.0), Regime::boundary);
}

TEST(Chord, EndpointLiesOnCurveInRequestedDirection) {
    const auto e = Curve::ellipse(2.0);
    for (double phi : {0.0, 0.4, 2.0, 4.5}) {
        for (double theta : {1e-3, 0.3, kPi / 2, 2.9, kPi - 1e-3}) {
            const double end = e.chord_endpoint(phi, theta);
            const Vec2 d = e.chord_vector(phi, end);
            const Frame f = e.frame(phi);
            EXPECT_NEAR(std::atan2(dot(d, f.normal), dot(d, f.tangent)), theta, 1e-10);
            EXPECT_NEAR(e.signed_distance(e.position(end)), 0.0, 1e-13);
        }
    }
}

TEST(Chord, QuadricAndBracketingSolversAgree) {
    const auto e = Curve::ellipse(2.0);
    for (double phi = 0.0; phi < kTwoPi; phi += 0.7) {
        for (double theta : {0.01, 0.8, 1.6, 3.0}) {
            const Vec2 a = e.position(e.chord_endpoint(phi, theta));
            const Vec2 b = e.position(e.chord_endpoint_generic(phi, theta));
            EXPECT_LT(norm(a - b), 1e-11);
        }
    }
}

TEST(Chord, SignedChordOnCircle) {
    const auto c = Curve::circle(1.5);
    // A chord at angle a to the tangent of a circle of radius R has length 2 R sin a.
    for (double a : {0.2, 1.0, 2.5, -0.7, -2.0}) EXPECT_NEAR(c.signed_chord(0.3, a), 3.0 * std::sin(a), 1e-13);
}

TEST(Chord, RejectsTangentDirection) {
    const auto e = Curve::ellipse(2.0);
    EXPECT_THROW(e.chord_endpoint_generic(0.0, 0.0), Error);
}

TEST(Inside, SignOfIndicator) {
    const auto e = Curve::ellipse(2.0);
    EXPECT_LT(inside(e, {0.0, 0.0}), 0.0);
    EXPECT_GT(inside(e, {2.1, 0.0}), 0.0);
    EXPECT_GT(inside(e, {0.0, 1.01}), 0.0);
}

TEST(Fourier, MatchesEllipseAndFixesOrientation) {
    // Clockwise ellipse: x = 2 cos t, y = -sin t. The curve must come out CCW.
    const auto f = Curve::fourier({{1, 2.0, 0.0, 0.0, -1.0}});
    const auto e = Curve::ellipse(2.0);
    EXPECT_GT(f.signed_area(), 0.0);
    EXPECT_NEAR(f.length(), e.length(), 1e-11);
    EXPECT_NEAR(f.max_curvature(), 2.0, 1e-9);
    EXPECT_NEAR(f.min_curvature(), 0.25, 1e-9);
    for (double p : {0.5, 1.5, 2.2}) {
        EXPECT_NEAR(f.signed_distance(e.position(p)), 0.0, 1e-9);
        EXPECT_GT(f.signed_distance(1.1 * e.position(p)), 0.0);
        EXPECT_LT(f.signed_distance(0.9 * e.position(p)), 0.0);
    }
}

TEST(Fourier, GenericChordSolverOnPerturbedCircle) {
    const auto f = Curve::fourier({{1, 1.0, 0.0, 0.0, 1.0}, {3, 0.04, 0.0, 0.0, -0.04}});
    for (double phi : {0.0, 1.1, 3.3}) {
        for (double theta : {0.05, 1.2, 3.0}) {
            const double end = f.chord_endpoint(phi, theta);
            const Vec2 d = f.chord_vector(phi, end);
            const Frame fr = f.frame(phi);
            EXPECT_NEAR(std::atan2(dot(d, fr.normal), dot(d, fr.tangent)), theta, 1e-10);
        }
    }
}

TEST(Fourier, NonConvexRejected) {
    EXPECT_THROW(Curve::fourier({{1, 1.0, 0.0, 0.0, 1.0}, {3, 0.3, 0.0, 0.0, -0.3}}), Error);
}

TEST(Fourier, FlatPointAllowedOnRequest) {
    // z = e^{it} + e e^{-3it}: cross(z', z'') = 1 + 6e cos 4t - 27e^2, which touches zero at e = 1/9.
    const std::vector<FourierMode> modes = {{1, 1.0, 0.0, 0.0, 1.0}, {3, 1.0 / 9.0, 0.0, 0.0, -1.0 / 9.0}};
    EXPECT_THROW(Curve::fourier(modes), Error);
    const auto f = Curve::fourier(modes, Convexity::allow_flat_points);
    EXPECT_NEAR(f.min_curvature(), 0.0, 1e-8);
    EXPECT_THROW(f.curvature_pair(), Error);
}

TEST(Fourier, ParseModes) {
    std::istringstream in("# comment\n1 1 0 0 1\n\n3 0.1 0 0 -0.1  # trailing\n");
    const auto m = parse_fourier_modes(in);
    ASSERT_EQ(m.size(), 2u);
    EXPECT_EQ(m[1].k, 3);
    EXPECT_DOUBLE_EQ(m[1].by, -0.1);
    std::istringstream bad("1 1 0 0 1\n2 0.5 x\n");
    try {
        parse_fourier_modes(bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(Spec, CurveStrings) {
    EXPECT_EQ(curve_from_spec("circle:R=2").kind(), CurveKind::circle);
    EXPECT_DOUBLE_EQ(curve_from_spec("ellipse:lambda=3").lambda(), 3.0);
    EXPECT_THROW(curve_from_spec("ellipse:R=3"), Error);
    EXPECT_THROW(curve_from_spec("square:side=1"), Error);
    EXPECT_THROW(curve_from_spec("circle:R=abc"), Error);
    EXPECT_THROW(curve_from_spec("ellipse:lambda=0.5"), Error);
}
