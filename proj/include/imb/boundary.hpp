#pragma once

// Strictly convex boundary curves with arc-length parametrization.
//
// Every curve is described by a periodic native parameter phi (the polar
// angle of the circle, the eccentric angle of the ellipse, the Fourier
// parameter of a generic curve). Arc length s is tabulated once at
// construction; all root finders in the library work in phi and convert to s
// only at the API boundary.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "imb/error.hpp"
#include "imb/tolerances.hpp"
#include "imb/vec2.hpp"

namespace imb {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduces x into [0, period).
inline double wrap_positive(double x, double period) {
    double r = std::fmod(x, period);
    if (r < 0.0) r += period;
    if (r >= period) r -= period;
    return r;
}

enum class CurveKind { circle, ellipse, generic };
enum class Convexity { strict, allow_flat_points };

inline const char* to_string(CurveKind k) {
    switch (k) {
        case CurveKind::circle: return "circle";
        case CurveKind::ellipse: return "ellipse";
        case CurveKind::generic: return "generic";
    }
    return "unknown";
}

/// One Fourier mode of a generic boundary:
/// X(phi) += ax cos(k phi) + bx sin(k phi), Y(phi) += ay cos(k phi) + by sin(k phi).
struct FourierMode {
    int k = 0;
    double ax = 0.0;
    double bx = 0.0;
    double ay = 0.0;
    double by = 0.0;
};

/// User-supplied smooth closed curve: position and its first two derivatives
/// with respect to the native parameter. Curvature is always computed from
/// these, never supplied.
struct Parametrization {
    std::function<Vec2(double)> position;
    std::function<Vec2(double)> first;
    std::function<Vec2(double)> second;
    double period = kTwoPi;
};

/// Position, unit tangent, inward unit normal and curvature at a native parameter.
struct Frame {
    Vec2 position;
    Vec2 tangent;
    Vec2 normal;
    double curvature = 0.0;
    double speed = 0.0;
};

struct BoundaryPoint {
    double s = 0.0;
    double phi = 0.0;
    Vec2 position;
    Vec2 tangent;
    Vec2 normal;
    double curvature = 0.0;
    double tau = 0.0;  // tangent polar angle, reported in [0, 2 pi)
};

struct CurvaturePair {
    double rho_min = 0.0;
    double rho_max = 0.0;
    double argmin_s = 0.0;  // where rho_min is attained
    double argmax_s = 0.0;  // where rho_max is attained
};

enum class Regime { strong_field, intermediate, weak_field, boundary };

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::strong_field: return "StrongField";
        case Regime::intermediate: return "Intermediate";
        case Regime::weak_field: return "WeakField";
        case Regime::boundary: return "Boundary";
    }
    return "Unknown";
}

/// Centered conic a x^2 + b y^2 = 1 (circle and ellipse fast paths).
struct Quadric {
    double a = 1.0;
    double b = 1.0;
};

class Curve {
public:
    static constexpr int kDefaultPanels = 512;

    static Curve circle(double radius, int panels = kDefaultPanels) {
        if (!(radius > 0.0) || !std::isfinite(radius)) {
            throw Error(ErrorKind::invalid_argument, "circle radius must be positive");
        }
        Curve c;
        c.kind_ = CurveKind::circle;
        c.radius_ = radius;
        c.quadric_ = Quadric{1.0 / (radius * radius), 1.0 / (radius * radius)};
        c.build(panels, Convexity::strict);
        return c;
    }

    /// Ellipse x(phi) = (lambda cos phi, sin phi) with lambda >= 1.
    static Curve ellipse(double lambda, int panels = kDefaultPanels) {
        if (!(lambda >= 1.0) || !std::isfinite(lambda)) {
            throw Error(ErrorKind::invalid_argument, "ellipse requires lambda >= 1");
        }
        Curve c;
        c.kind_ = CurveKind::ellipse;
        c.lambda_ = lambda;
        c.quadric_ = Quadric{1.0 / (lambda * lambda), 1.0};
        c.build(panels, Convexity::strict);
        return c;
    }

    static Curve fourier(std::vector<FourierMode> modes, Convexity convexity = Convexity::strict,
                         int smoothness_class = 3, int panels = kDefaultPanels) {
        if (modes.empty()) {
            throw Error(ErrorKind::invalid_argument, "fourier curve needs at least one mode");
        }
        Curve c;
        c.kind_ = CurveKind::generic;
        c.modes_ = std::move(modes);
        c.smoothness_ = smoothness_class;
        if (c.raw_signed_area() < 0.0) {
            for (auto& m : c.modes_) {
                m.bx = -m.bx;
                m.by = -m.by;
            }
        }
        c.build(panels, convexity);
        return c;
    }

    static Curve generic(Parametrization param, Convexity convexity = Convexity::strict,
                         int smoothness_class = 3, int panels = kDefaultPanels) {
        if (!param.position || !param.first || !param.second || !(param.period > 0.0)) {
            throw Error(ErrorKind::invalid_argument,
                        "generic curve needs position, first and second derivative and a period");
        }
        Curve c;
        c.kind_ = CurveKind::generic;
        c.param_ = std::move(param);
        c.period_ = c.param_.period;
        c.smoothness_ = smoothness_class;
        if (c.raw_signed_area() < 0.0) {
            // Reverse orientation so the interior lies to the left.
            Parametrization p = c.param_;
            c.param_.position = [p](double t) { return p.position(-t); };
            c.param_.first = [p](double t) { return -p.first(-t); };
            c.param_.second = [p](double t) { return p.second(-t); };
        }
        c.build(panels, convexity);
        return c;
    }

    CurveKind kind() const { return kind_; }
    double radius() const { return radius_; }
    double lambda() const { return lambda_; }
    double length() const { return length_; }
    double period() const { return period_; }
    int smoothness_class() const { return smoothness_; }
    int panels() const { return static_cast<int>(phi_nodes_.size()) - 1; }
    const std::optional<Quadric>& quadric() const { return quadric_; }
    const std::vector<FourierMode>& modes() const { return modes_; }

    std::string description() const {
        std::ostringstream os;
        os.precision(17);
        switch (kind_) {
            case CurveKind::circle: os << "circle:R=" << radius_; break;
            case CurveKind::ellipse: os << "ellipse:lambda=" << lambda_; break;
            case CurveKind::generic:
                os << (modes_.empty() ? "generic" : "fourier") << ":modes=" << modes_.size();
                break;
        }
        return os.str();
    }

    // --- native parametrization -------------------------------------------------

    Vec2 position(double phi) const {
        switch (kind_) {
            case CurveKind::circle: return {radius_ * std::cos(phi), radius_ * std::sin(phi)};
            case CurveKind::ellipse: return {lambda_ * std::cos(phi), std::sin(phi)};
            case CurveKind::generic: break;
        }
        if (!modes_.empty()) {
            Vec2 p;
            for (const auto& m : modes_) {
                const double c = std::cos(m.k * phi), s = std::sin(m.k * phi);
                p.x += m.ax * c + m.bx * s;
                p.y += m.ay * c + m.by * s;
            }
            return p;
        }
        return param_.position(phi);
    }

    Vec2 first(double phi) const {
        switch (kind_) {
            case CurveKind::circle: return {-radius_ * std::sin(phi), radius_ * std::cos(phi)};
            case CurveKind::ellipse: return {-lambda_ * std::sin(phi), std::cos(phi)};
            case CurveKind::generic: break;
        }
        if (!modes_.empty()) {
            Vec2 p;
            for (const auto& m : modes_) {
                const double c = std::cos(m.k * phi), s = std::sin(m.k * phi);
                p.x += m.k * (-m.ax * s + m.bx * c);
                p.y += m.k * (-m.ay * s + m.by * c);
            }
            return p;
        }
        return param_.first(phi);
    }

    Vec2 second(double phi) const {
        switch (kind_) {
            case CurveKind::circle: return {-radius_ * std::cos(phi), -radius_ * std::sin(phi)};
            case CurveKind::ellipse: return {-lambda_ * std::cos(phi), -std::sin(phi)};
            case CurveKind::generic: break;
        }
        if (!modes_.empty()) {
            Vec2 p;
            for (const auto& m : modes_) {
                const double c = std::cos(m.k * phi), s = std::sin(m.k * phi);
                const double k2 = static_cast<double>(m.k) * m.k;
                p.x -= k2 * (m.ax * c + m.bx * s);
                p.y -= k2 * (m.ay * c + m.by * s);
            }
            return p;
        }
        return param_.second(phi);
    }

    /// Gamma(phi_b) - Gamma(phi_a), evaluated without cancellation for the
    /// closed-form kinds (sum-to-product identities).
    Vec2 chord_vector(double phi_a, double phi_b) const {
        const double h = 0.5 * (phi_b - phi_a);
        const double m = 0.5 * (phi_b + phi_a);
        switch (kind_) {
            case CurveKind::circle: {
                const double f = 2.0 * radius_ * std::sin(h);
                return {-f * std::sin(m), f * std::cos(m)};
            }
            case CurveKind::ellipse: {
                const double f = 2.0 * std::sin(h);
                return {-f * lambda_ * std::sin(m), f * std::cos(m)};
            }
            case CurveKind::generic: break;
        }
        if (!modes_.empty()) {
            Vec2 d;
            for (const auto& md : modes_) {
                const double sh = std::sin(md.k * h);
                const double dc = -2.0 * std::sin(md.k * m) * sh;  // cos(k b) - cos(k a)
                const double ds = 2.0 * std::cos(md.k * m) * sh;   // sin(k b) - sin(k a)
                d.x += md.ax * dc + md.bx * ds;
                d.y += md.ay * dc + md.by * ds;
            }
            return d;
        }
        return param_.position(phi_b) - param_.position(phi_a);
    }

    double speed(double phi) const { return norm(first(phi)); }

    double curvature_native(double phi) const {
        const Vec2 d1 = first(phi);
        const double sp = norm(d1);
        return cross(d1, second(phi)) / (sp * sp * sp);
    }

    Frame frame(double phi) const {
        Frame f;
        f.position = position(phi);
        const Vec2 d1 = first(phi);
        f.speed = norm(d1);
        f.tangent = d1 / f.speed;
        f.normal = perp(f.tangent);
        f.curvature = cross(d1, second(phi)) / (f.speed * f.speed * f.speed);
        return f;
    }

    /// Lifted tangent angle: continuous in phi, tau(phi + P) = tau(phi) + 2 pi.
    double tangent_angle(double phi) const {
        const double k = std::floor(phi / period_);
        const double r = phi - k * period_;
        const Vec2 d1 = first(r);
        double raw = std::atan2(d1.y, d1.x);
        const double ref = interpolate_linear(tau_nodes_, r);
        raw += kTwoPi * std::round((ref - raw) / kTwoPi);
        return raw + kTwoPi * k;
    }

    // --- arc length ---------------------------------------------------------------

    /// Lifted arc length of a lifted native parameter.
    double arclength_at(double phi) const {
        const double k = std::floor(phi / period_);
        double r = phi - k * period_;
        if (r >= period_) r = 0.0;
        const int n = panels();
        int j = static_cast<int>(r / panel_width_);
        j = std::clamp(j, 0, n - 1);
        return k * length_ + s_nodes_[j] + panel_integral(phi_nodes_[j], r);
    }

    /// Lifted native parameter of a lifted arc length.
    double native_at(double s) const {
        const double k = std::floor(s / length_);
        double r = s - k * length_;
        if (r >= length_) r = 0.0;
        const int n = panels();
        auto it = std::upper_bound(s_nodes_.begin(), s_nodes_.end(), r);
        int j = static_cast<int>(it - s_nodes_.begin()) - 1;
        j = std::clamp(j, 0, n - 1);
        // Cubic Hermite seed with exact slopes dphi/ds = 1/speed, then Newton.
        const double s0 = s_nodes_[j], s1 = s_nodes_[j + 1];
        const double h = s1 - s0;
        const double x = (r - s0) / h;
        const double h00 = (1 + 2 * x) * (1 - x) * (1 - x), h10 = x * (1 - x) * (1 - x);
        const double h01 = x * x * (3 - 2 * x), h11 = x * x * (x - 1);
        double phi = h00 * phi_nodes_[j] + h10 * h / speed_nodes_[j] + h01 * phi_nodes_[j + 1] +
                     h11 * h / speed_nodes_[j + 1];
        for (int it_n = 0; it_n < 8; ++it_n) {
            int jj = std::clamp(static_cast<int>(phi / panel_width_), 0, n - 1);
            if (phi < 0.0) jj = 0;
            const double f = s_nodes_[jj] + panel_integral(phi_nodes_[jj], phi) - r;
            const double step = f / speed(phi);
            phi -= step;
            if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(phi))) break;
        }
        return phi + k * period_;
    }

    /// Full geometric query at arc length s (any real; reduced mod L).
    BoundaryPoint evaluate(double s) const {
        BoundaryPoint b;
        b.s = wrap_positive(s, length_);
        b.phi = wrap_positive(native_at(s), period_);
        const Frame f = frame(b.phi);
        b.position = f.position;
        b.tangent = f.tangent;
        b.normal = f.normal;
        b.curvature = f.curvature;
        b.tau = wrap_positive(tangent_angle(b.phi), kTwoPi);
        return b;
    }

    // --- curvature ------------------------------------------------------------------

    double min_curvature() const { return kappa_min_; }
    double max_curvature() const { return kappa_max_; }
    double argmin_curvature_phi() const { return kappa_argmin_phi_; }
    double argmax_curvature_phi() const { return kappa_argmax_phi_; }

    /// Extremal radii of curvature. Throws ConvexityViolation when the curve has
    /// a flat point (rho_max unbounded).
    CurvaturePair curvature_pair(const Tolerances& tol = {}) const {
        if (!(kappa_min_ > tol.regime * kappa_max_)) {
            throw Error(ErrorKind::convexity_violation,
                        "curvature vanishes or is negative (min kappa = " +
                            std::to_string(kappa_min_) + ")");
        }
        CurvaturePair cp;
        cp.rho_min = 1.0 / kappa_max_;
        cp.rho_max = 1.0 / kappa_min_;
        cp.argmin_s = wrap_positive(arclength_at(kappa_argmax_phi_), length_);
        cp.argmax_s = wrap_positive(arclength_at(kappa_argmin_phi_), length_);
        return cp;
    }

    // --- chords -----------------------------------------------------------------------

    /// Native parameter (lifted into (phi_from, phi_from + P)) of the second
    /// intersection of the ray leaving Gamma(phi_from) into the domain at angle
    /// theta in (0, pi) from the tangent. Closed form for conics, monotone
    /// root solve otherwise.
    double chord_endpoint(double phi_from, double theta) const {
        if (quadric_) return chord_endpoint_quadric(phi_from, theta);
        return chord_endpoint_generic(phi_from, theta);
    }

    /// Generic chord solver. The direction angle of the chord from a fixed
    /// boundary point to Gamma(phi) increases strictly from 0 to pi as phi
    /// runs once around a strictly convex curve, so a bracketing solver on
    /// (phi_from, phi_from + P) cannot skip or mistake the root.
    double chord_endpoint_generic(double phi_from, double theta) const {
        if (!(theta > 0.0 && theta < kPi)) {
            throw Error(ErrorKind::tangent_chord, "chord direction must point into the domain");
        }
        const Frame f0 = frame(phi_from);
        auto angle_gap = [&](double x) {
            const Vec2 d = chord_vector(phi_from, phi_from + x);
            double beta = std::atan2(dot(d, f0.normal), dot(d, f0.tangent));
            if (beta < -0.5 * kPi) beta += kTwoPi;
            return beta - theta;
        };
        boost::math::tools::eps_tolerance<double> stop(50);
        std::uintmax_t iters = 200;
        auto [lo, hi] = boost::math::tools::toms748_solve(angle_gap, 0.0, period_, -theta,
                                                          kPi - theta, stop, iters);
        return phi_from + 0.5 * (lo + hi);
    }

    /// Signed length of the second intersection of the full line through
    /// Gamma(phi_from) with direction angle theta_w (relative to the tangent):
    /// positive when the direction points inward, negative when outward.
    double signed_chord(double phi_from, double theta_w) const {
        double a = std::remainder(theta_w, kTwoPi);  // (-pi, pi]
        if (quadric_) {
            const Frame f = frame(phi_from);
            const Vec2 w = std::cos(a) * f.tangent + std::sin(a) * f.normal;
            const Vec2 p = f.position;
            const double g = 2.0 * std::hypot(quadric_->a * p.x, quadric_->b * p.y);
            const double q = quadric_->a * w.x * w.x + quadric_->b * w.y * w.y;
            return g * std::sin(a) / q;
        }
        if (a == 0.0 || std::abs(a) == kPi) return 0.0;
        if (a > 0.0) return norm(chord_vector(phi_from, chord_endpoint_generic(phi_from, a)));
        return -norm(chord_vector(phi_from, chord_endpoint_generic(phi_from, a + kPi)));
    }

    // --- inside/outside ----------------------------------------------------------------

    /// Negative inside, positive outside, zero on the curve. Exact implicit
    /// forms for the conics; signed distance by closest-point projection
    /// otherwise.
    double signed_distance(Vec2 p) const {
        switch (kind_) {
            case CurveKind::circle: return norm(p) - radius_;
            case CurveKind::ellipse: return std::hypot(p.x / lambda_, p.y) - 1.0;
            case CurveKind::generic: break;
        }
        const int n = panels();
        double best = std::numeric_limits<double>::infinity();
        double phi = 0.0;
        for (int j = 0; j < n; ++j) {
            const Vec2 d = position(phi_nodes_[j]) - p;
            const double dd = dot(d, d);
            if (dd < best) {
                best = dd;
                phi = phi_nodes_[j];
            }
        }
        for (int it = 0; it < 30; ++it) {
            const Vec2 d = position(phi) - p;
            const Vec2 d1 = first(phi);
            const double g = dot(d, d1);
            const double gp = dot(d1, d1) + dot(d, second(phi));
            if (!(gp > 0.0)) break;
            const double step = g / gp;
            phi -= std::clamp(step, -panel_width_, panel_width_);
            if (std::abs(step) < 1e-15) break;
        }
        const Frame f = frame(phi);
        const Vec2 d = p - f.position;
        const double dist = norm(d);
        return dot(d, f.normal) > 0.0 ? -dist : dist;
    }

    double signed_area() const { return area_; }

    /// Largest distance from the origin to the curve (node maximum).
    double extent() const { return extent_; }

private:
    Curve() = default;

    static double interpolate_linear_impl(const std::vector<double>& nodes, double width,
                                          double x) {
        const int n = static_cast<int>(nodes.size()) - 1;
        int j = std::clamp(static_cast<int>(x / width), 0, n - 1);
        const double t = x / width - j;
        return nodes[j] + t * (nodes[j + 1] - nodes[j]);
    }

    double interpolate_linear(const std::vector<double>& nodes, double x) const {
        return interpolate_linear_impl(nodes, panel_width_, x);
    }

    double panel_integral(double a, double b) const {
        if (a == b) return 0.0;
        return boost::math::quadrature::gauss<double, 10>::integrate(
            [this](double t) { return speed(t); }, a, b);
    }

    double raw_signed_area() const {
        // Sign only; 64 panels of 10-point Gauss are plenty.
        const double P = (kind_ == CurveKind::generic && modes_.empty()) ? param_.period : kTwoPi;
        double acc = 0.0;
        const int n = 64;
        for (int j = 0; j < n; ++j) {
            acc += boost::math::quadrature::gauss<double, 10>::integrate(
                [this](double t) { return cross(position(t), first(t)); }, P * j / n,
                P * (j + 1) / n);
        }
        return 0.5 * acc;
    }

    Quadric quadric_or_default() const { return quadric_ ? *quadric_ : Quadric{}; }

    double chord_endpoint_quadric(double phi_from, double theta) const {
        if (!(theta > 0.0 && theta < kPi)) {
            throw Error(ErrorKind::tangent_chord, "chord direction must point into the domain");
        }
        const Quadric q = *quadric_;
        const Frame f = frame(phi_from);
        const Vec2 w = std::cos(theta) * f.tangent + std::sin(theta) * f.normal;
        const Vec2 p = f.position;
        const double g = 2.0 * std::hypot(q.a * p.x, q.b * p.y);
        const double sigma = g * std::sin(theta) / (q.a * w.x * w.x + q.b * w.y * w.y);
        const Vec2 end = p + sigma * w;
        const double raw = std::atan2(end.y * std::sqrt(q.b), end.x * std::sqrt(q.a));
        double x = wrap_positive(raw - phi_from, kTwoPi);
        // Rounding can push a very short chord across the seam.
        if (theta < 0.5 * kPi && x > kTwoPi * (1.0 - 1e-9)) x -= kTwoPi;
        if (theta > 0.5 * kPi && x < kTwoPi * 1e-9) x += kTwoPi;
        if (x <= 0.0) x = std::numeric_limits<double>::min();
        return phi_from + x;
    }

    void build(int panels, Convexity convexity) {
        if (panels < 8) throw Error(ErrorKind::invalid_argument, "need at least 8 panels");
        if (kind_ != CurveKind::generic || !modes_.empty()) period_ = kTwoPi;
        panel_width_ = period_ / panels;
        phi_nodes_.resize(panels + 1);
        s_nodes_.resize(panels + 1);
        speed_nodes_.resize(panels + 1);
        tau_nodes_.resize(panels + 1);
        s_nodes_[0] = 0.0;
        for (int j = 0; j <= panels; ++j) phi_nodes_[j] = (j == panels) ? period_ : j * panel_width_;
        for (int j = 0; j < panels; ++j) {
            s_nodes_[j + 1] = s_nodes_[j] + panel_integral(phi_nodes_[j], phi_nodes_[j + 1]);
        }
        length_ = s_nodes_[panels];
        for (int j = 0; j <= panels; ++j) {
            speed_nodes_[j] = speed(phi_nodes_[j]);
            if (!(speed_nodes_[j] > 0.0)) {
                throw Error(ErrorKind::invalid_argument, "parametrization has a singular point");
            }
        }
        {
            const Vec2 d = first(0.0);
            tau_nodes_[0] = std::atan2(d.y, d.x);
            for (int j = 1; j <= panels; ++j) {
                const Vec2 dj = first(phi_nodes_[j]);
                double raw = std::atan2(dj.y, dj.x);
                raw += kTwoPi * std::round((tau_nodes_[j - 1] - raw) / kTwoPi);
                tau_nodes_[j] = raw;
            }
        }
        area_ = 0.0;
        for (int j = 0; j < panels; ++j) {
            area_ += 0.5 * boost::math::quadrature::gauss<double, 10>::integrate(
                                [this](double t) { return cross(position(t), first(t)); },
                                phi_nodes_[j], phi_nodes_[j + 1]);
        }
        extent_ = 0.0;
        for (int j = 0; j < panels; ++j) extent_ = std::max(extent_, norm(position(phi_nodes_[j])));
        locate_curvature_extrema(8 * panels);

        const double rel = 1e-8;
        if (convexity == Convexity::strict && !(kappa_min_ > rel * kappa_max_)) {
            throw Error(ErrorKind::convexity_violation,
                        "boundary is not strictly convex (min kappa = " +
                            std::to_string(kappa_min_) + ")");
        }
        if (convexity == Convexity::allow_flat_points && kappa_min_ < -rel * kappa_max_) {
            throw Error(ErrorKind::convexity_violation,
                        "boundary is not convex (min kappa = " + std::to_string(kappa_min_) + ")");
        }
    }

    void locate_curvature_extrema(int samples) {
        const double h = period_ / samples;
        int jmin = 0, jmax = 0;
        double kmin = std::numeric_limits<double>::infinity();
        double kmax = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < samples; ++j) {
            const double k = curvature_native(j * h);
            if (k < kmin) { kmin = k; jmin = j; }
            if (k > kmax) { kmax = k; jmax = j; }
        }
        auto refine = [&](int j, double sign) {
            const double a = (j - 1) * h, b = (j + 1) * h;
            auto f = [&](double t) { return sign * curvature_native(t); };
            const auto r = boost::math::tools::brent_find_minima(f, a, b, 40);
            return std::pair<double, double>{r.first, sign * r.second};
        };
        auto [pmin, vmin] = refine(jmin, 1.0);
        auto [pmax, vmax] = refine(jmax, -1.0);
        kappa_min_ = std::min(vmin, kmin);
        kappa_max_ = std::max(vmax, kmax);
        kappa_argmin_phi_ = wrap_positive(vmin <= kmin ? pmin : jmin * h, period_);
        kappa_argmax_phi_ = wrap_positive(vmax >= kmax ? pmax : jmax * h, period_);
    }

    CurveKind kind_ = CurveKind::circle;
    double radius_ = 0.0;
    double lambda_ = 0.0;
    std::vector<FourierMode> modes_;
    Parametrization param_;
    std::optional<Quadric> quadric_;
    int smoothness_ = 3;

    double period_ = kTwoPi;
    double panel_width_ = 0.0;
    double length_ = 0.0;
    double area_ = 0.0;
    double extent_ = 0.0;
    std::vector<double> phi_nodes_;
    std::vector<double> s_nodes_;
    std::vector<double> speed_nodes_;
    std::vector<double> tau_nodes_;

    double kappa_min_ = 0.0;
    double kappa_max_ = 0.0;
    double kappa_argmin_phi_ = 0.0;
    double kappa_argmax_phi_ = 0.0;
};

// --- free-function surface ---------------------------------------------------------

inline BoundaryPoint evaluate(const Curve& curve, double s) { return curve.evaluate(s); }

inline double native_to_arclength(const Curve& curve, double phi) { return curve.arclength_at(phi); }

inline double arclength_to_native(const Curve& curve, double s) { return curve.native_at(s); }

inline CurvaturePair curvature_extrema(const Curve& curve, const Tolerances& tol = {}) {
    return curve.curvature_pair(tol);
}

inline Regime classify_regime(const Curve& curve, double mu, const Tolerances& tol = {}) {
    if (!(mu > 0.0)) throw Error(ErrorKind::invalid_argument, "mu must be positive");
    const CurvaturePair cp = curve.curvature_pair(tol);
    if (std::abs(mu - cp.rho_min) <= tol.regime * cp.rho_min ||
        std::abs(mu - cp.rho_max) <= tol.regime * cp.rho_max) {
        return Regime::boundary;
    }
    if (mu < cp.rho_min) return Regime::strong_field;
    if (mu > cp.rho_max) return Regime::weak_field;
    return Regime::intermediate;
}

inline double inside(const Curve& curve, Vec2 p) { return curve.signed_distance(p); }

/// Fourier coefficient file: one mode per line, "k ax bx ay by", '#' comments.
inline std::vector<FourierMode> parse_fourier_modes(std::istream& in) {
    std::vector<FourierMode> modes;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        FourierMode m;
        if (!(ls >> m.k)) continue;
        if (!(ls >> m.ax >> m.bx >> m.ay >> m.by) || m.k < 0) {
            throw Error(ErrorKind::invalid_argument,
                        "fourier file line " + std::to_string(lineno) + ": expected 'k ax bx ay by'");
        }
        modes.push_back(m);
    }
    return modes;
}

inline std::vector<FourierMode> load_fourier_modes(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::invalid_argument, "cannot open fourier file '" + path + "'");
    return parse_fourier_modes(in);
}

/// Parses "circle:R=1.0", "ellipse:lambda=2.0" or "fourier:file=PATH".
inline Curve curve_from_spec(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    std::string key, value;
    if (colon != std::string::npos) {
        const std::string rest = spec.substr(colon + 1);
        const auto eq = rest.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::invalid_argument, "curve spec '" + spec + "': expected key=value");
        }
        key = rest.substr(0, eq);
        value = rest.substr(eq + 1);
    }
    auto number = [&](const char* expected) {
        if (key != expected) {
            throw Error(ErrorKind::invalid_argument,
                        "curve spec '" + spec + "': expected parameter '" + expected + "'");
        }
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != value.size() || value.empty()) {
            throw Error(ErrorKind::invalid_argument, "curve spec '" + spec + "': bad number");
        }
        return v;
    };
    if (kind == "circle") return Curve::circle(number("R"));
    if (kind == "ellipse") return Curve::ellipse(number("lambda"));
    if (kind == "fourier") {
        if (key != "file") {
            throw Error(ErrorKind::invalid_argument, "curve spec '" + spec + "': expected file=PATH");
        }
        return Curve::fourier(load_fourier_modes(value));
    }
    throw Error(ErrorKind::invalid_argument, "unknown curve kind '" + kind + "'");
}

}  // namespace imb
