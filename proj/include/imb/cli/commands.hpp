#pragma once

// Subcommands of imb-lab. Each one writes its CSV (and SVG twin) into
// cfg.out and returns a process exit code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "imb/action.hpp"
#include "imb/analysis.hpp"
#include "imb/boundary.hpp"
#include "imb/cli/config.hpp"
#include "imb/dynamics.hpp"
#include "imb/error.hpp"
#include "imb/io/csv.hpp"
#include "imb/io/svg.hpp"
#include "imb/orbits.hpp"
#include "imb/version.hpp"

namespace imb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct Context {
    RunConfig cfg;
    Curve curve;
    double mu = 0.0;
    Tolerances tol;
    std::filesystem::path out;

    std::string path(const std::string& name) const { return (out / name).string(); }
};

/// Builds the curve, mu and tolerances; config problems become ConfigError.
inline Context make_context(const RunConfig& cfg) {
    Tolerances tol = cfg.tolerances();
    const double mu = cfg.resolve_mu();
    if (cfg.jobs < 0) throw ConfigError("jobs must be non-negative");
    Curve curve = [&] {
        try {
            return curve_from_spec(cfg.curve);
        } catch (const Error& e) {
            throw ConfigError(std::string("curve: ") + e.what());
        }
    }();
    std::error_code ec;
    std::filesystem::create_directories(cfg.out, ec);
    if (ec) throw ConfigError("out: cannot create '" + cfg.out + "': " + ec.message());
    return Context{cfg, std::move(curve), mu, tol, cfg.out};
}

namespace detail {

// Uniform in [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementations, so runs repeat across platforms.
class Uniform {
public:
    explicit Uniform(std::uint64_t seed) : gen_(seed) {}
    double operator()() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    double operator()(double a, double b) { return a + (b - a) * (*this)(); }

private:
    std::mt19937_64 gen_;
};

inline std::vector<Vec2> boundary_polyline(const Curve& c, int n = 720) {
    std::vector<Vec2> pts;
    pts.reserve(n);
    for (int k = 0; k < n; ++k) pts.push_back(c.position(c.period() * k / n));
    return pts;
}

// Larmor arc from p1 to p2 sampled on the side that lies outside the domain.
inline std::vector<Vec2> arc_polyline(const Curve& c, const ArcRecord& a, int n = 64) {
    const double a1 = polar_angle(a.p1 - a.center);
    const double sweep = 2.0 * a.chi;
    std::vector<Vec2> ccw, cw;
    for (int k = 0; k <= n; ++k) {
        const double t = sweep * k / n;
        ccw.push_back(a.center + a.mu * unit_from_angle(a1 + t));
        cw.push_back(a.center + a.mu * unit_from_angle(a1 - t));
    }
    const Vec2 mid_ccw = ccw[n / 2], mid_cw = cw[n / 2];
    const bool use_ccw = norm(ccw[n] - a.p2) + (c.signed_distance(mid_ccw) > 0.0 ? 0.0 : 1.0) <=
                         norm(cw[n] - a.p2) + (c.signed_distance(mid_cw) > 0.0 ? 0.0 : 1.0);
    return use_ccw ? ccw : cw;
}

struct Box {
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    void add(Vec2 p) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    io::Svg canvas() const {
        const double pad = 0.05 * std::max(xmax - xmin, ymax - ymin);
        return io::Svg(xmin - pad, xmax + pad, ymin - pad, ymax + pad);
    }
};

inline void draw_segments(io::Svg& svg, const Curve& c, const std::vector<SegmentRecord>& recs) {
    for (const auto& r : recs) {
        if (r.boundary_limit) continue;
        svg.line(r.chord.p0, r.chord.p1, "#1f4e9c", 1.0);
        svg.polyline(arc_polyline(c, r.arc), "#c0392b", 1.0);
    }
    for (const auto& r : recs) {
        if (r.boundary_limit) continue;
        svg.dot(r.arc.center, 3.0, "#e67e22");
        svg.dot(r.chord.p0, 3.0, "#4b0f5e");
        svg.dot(r.chord.p1, 3.0, "#4b0f5e");
    }
}

inline Box box_of(const Curve& c, const std::vector<SegmentRecord>& recs) {
    Box b;
    for (const auto& p : boundary_polyline(c, 180)) b.add(p);
    for (const auto& r : recs) {
        if (r.boundary_limit) continue;
        for (const auto& p : arc_polyline(c, r.arc, 16)) b.add(p);
        b.add(r.arc.center);
    }
    return b;
}

inline PhaseState start_state(const Context& ctx) {
    if (ctx.cfg.theta0) {
        const double th = *ctx.cfg.theta0;
        if (!(th >= 0.0 && th <= kPi)) throw ConfigError("theta0 must lie in [0, pi]");
        return PhaseState::from_angle(ctx.cfg.s0, th);
    }
    return PhaseState::from_u(ctx.cfg.s0, ctx.cfg.u0);
}

}  // namespace detail

// --- info -------------------------------------------------------------------------------------

inline int cmd_info(const Context& ctx, std::ostream& os) {
    const Curve& c = ctx.curve;
    const double kmin = c.min_curvature(), kmax = c.max_curvature();
    const double rho_min = 1.0 / kmax;
    const double rho_max = kmin > 0.0 ? 1.0 / kmin : std::numeric_limits<double>::infinity();
    const Regime regime = classify_regime(c, ctx.mu, ctx.tol);
    const MuIntersection mi = mu_intersection_check(c, ctx.mu, 128, ctx.tol);
    const auto energy = ctx.cfg.energy();

    io::CsvWriter csv(ctx.path("info.csv"), "info", {"key", "value"});
    auto put = [&](const std::string& k, const std::string& v) {
        csv.row(k, v);
        os << fmt::format("{:<18} {}\n", k, v);
    };
    put("curve", c.description());
    put("mu", io::num(ctx.mu));
    if (energy) put("energy", io::num(*energy));
    put("length", io::num(c.length()));
    put("kappa_min", io::num(kmin));
    put("kappa_max", io::num(kmax));
    put("rho_min", io::num(rho_min));
    put("rho_max", io::num(rho_max));
    put("regime", to_string(regime));
    put("mu_intersection", mi.holds ? "holds" : "fails");
    put("mu_intersection_by", mi.by_regime ? "regime" : "sampling");
    put("max_crossings", std::to_string(mi.max_crossings));
    return kExitOk;
}

// --- portrait ---------------------------------------------------------------------------------

inline int cmd_portrait(const Context& ctx, std::ostream& os) {
    PortraitSpec spec;
    spec.ns = ctx.cfg.grid_s;
    spec.nu = ctx.cfg.grid_u;
    spec.iterations = ctx.cfg.iters;
    spec.native_angle = ctx.cfg.native_angle;
    const auto orbits = phase_portrait(ctx.curve, ctx.mu, spec, ctx.cfg.jobs, ctx.tol);

    const char* xname = spec.native_angle ? "phi" : "s";
    io::CsvWriter csv(ctx.path("portrait.csv"), "portrait", {"orbit_id", "k", xname, "u"});
    const double xmax = spec.native_angle ? ctx.curve.period() : ctx.curve.length();
    io::Svg svg(0.0, xmax, -1.0, 1.0, 900.0, false);
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    int stopped = 0;
    for (const auto& o : orbits) {
        stopped += o.tangency_stop;
        for (std::size_t k = 0; k < o.points.size(); ++k) {
            const auto [x, u] = o.points[k];
            csv.row(o.id, k, x, u);
            svg.dot({x, u}, 1.0, palette[o.id % 10]);
        }
    }
    svg.save(ctx.path("portrait.svg"));
    os << fmt::format("portrait: {} orbits, {} iterations, {} stopped at a tangency\n", orbits.size(),
                      spec.iterations, stopped);
    return kExitOk;
}

// --- orbit ------------------------------------------------------------------------------------

inline int cmd_orbit(const Context& ctx, std::ostream& os) {
    const PhaseState start = detail::start_state(ctx);
    const OrbitTrace tr = iterate(ctx.curve, ctx.mu, start, ctx.cfg.iters, ctx.tol);

    io::CsvWriter csv(ctx.path("orbit.csv"), "orbit",
                      {"k", "s", "u", "phi", "x0", "y0", "x1", "y1", "cx", "cy", "x2", "y2", "chi",
                       "chord_length", "arc_chord_length", "advance", "s2", "u2"});
    for (std::size_t k = 0; k < tr.records.size(); ++k) {
        const auto& r = tr.records[k];
        const auto& st = tr.states[k];
        csv.row(k, st.s, st.u, wrap_positive(r.chord.phi0, ctx.curve.period()), r.chord.p0.x, r.chord.p0.y,
                r.chord.p1.x, r.chord.p1.y, r.arc.center.x, r.arc.center.y, r.arc.p2.x, r.arc.p2.y, r.arc.chi,
                r.chord.length, r.arc.length, r.advance, tr.states[k + 1].s, tr.states[k + 1].u);
    }
    const std::size_t drawn = std::min<std::size_t>(tr.records.size(), 200);
    const std::vector<SegmentRecord> shown(tr.records.begin(), tr.records.begin() + drawn);
    io::Svg svg = detail::box_of(ctx.curve, shown).canvas();
    svg.polyline(detail::boundary_polyline(ctx.curve), "black", 1.5, true);
    detail::draw_segments(svg, ctx.curve, shown);
    svg.save(ctx.path("orbit.svg"));

    os << fmt::format("orbit: {} returns from (s, u) = ({}, {}), regime {}\n", tr.records.size(),
                      io::num(start.s), io::num(start.u), to_string(tr.regime));
    if (tr.records.size() >= 100) {
        const auto rn = rotation_number(tr, ctx.tol);
        os << fmt::format("rotation number {} (window spread {})\n", io::num(rn.omega), io::num(rn.error));
    }
    if (tr.tangency_stop) {
        std::cerr << "orbit stopped after " << tr.records.size() << " returns: " << tr.stop_reason << '\n';
        return kExitNumerical;
    }
    return kExitOk;
}

// --- periodic ---------------------------------------------------------------------------------

inline int cmd_periodic(const Context& ctx, std::ostream& os) {
    const auto& cfg = ctx.cfg;
    if (!(cfg.m >= 1 && cfg.m < cfg.n)) throw ConfigError("periodic needs 1 <= m < n");
    std::vector<std::string> methods;
    if (cfg.method != "shooting") methods.push_back("variational");
    if (cfg.method != "variational") methods.push_back("shooting");

    const int jobs = cfg.jobs;
    struct Outcome {
        bool ok = false;
        PeriodicOrbit orbit;
        std::string error;
    };
    const auto results = parallel_map(methods.size(), jobs, [&](std::size_t i) {
        Outcome o;
        try {
            if (methods[i] == "variational") {
                VariationalOptions opt;
                opt.s0 = cfg.s0;
                o.orbit = find_periodic_variational(ctx.curve, ctx.mu, cfg.m, cfg.n, opt, ctx.tol);
            } else {
                const PhaseState seed = shooting_seed(ctx.curve, ctx.mu, cfg.m, cfg.n, cfg.s0, 200, ctx.tol);
                o.orbit = find_periodic_shooting(ctx.curve, ctx.mu, cfg.m, cfg.n, seed, {}, ctx.tol);
            }
            o.ok = true;
        } catch (const Error& e) {
            o.error = e.what();
        }
        return o;
    });

    io::CsvWriter summary(ctx.path("periodic.csv"), "periodic",
                          {"method", "status", "m", "n", "minimal_period", "residual", "gradient", "action",
                           "rotation_number", "trace", "det", "family", "iterations", "message"});
    io::CsvWriter points(ctx.path("periodic_points.csv"), "periodic",
                         {"method", "j", "s", "u", "x", "y", "cx", "cy", "chi"});
    bool any_ok = false, all_ok = true;
    const PeriodicOrbit* drawn = nullptr;
    for (std::size_t i = 0; i < methods.size(); ++i) {
        const auto& r = results[i];
        if (!r.ok) {
            all_ok = false;
            summary.row(methods[i], "failed", cfg.m, cfg.n, 0, "", "", "", "", "", "", "", 0,
                        fmt::format("\"{}\"", r.error));
            std::cerr << methods[i] << ": " << r.error << '\n';
            continue;
        }
        any_ok = true;
        const auto& po = r.orbit;
        if (!drawn) drawn = &po;
        // Shooting does not evaluate the action, so its action and family are left blank.
        const bool variational = methods[i] == "variational";
        summary.row(methods[i], "ok", po.m, po.n, po.minimal_period, po.residual, po.gradient,
                    variational ? io::num(po.action) : std::string(), po.rotation_number(), po.trace, po.det,
                    po.family, po.iterations, "");
        for (std::size_t j = 0; j < po.records.size(); ++j) {
            const auto& rec = po.records[j];
            points.row(methods[i], j, po.states[j].s, po.states[j].u, rec.chord.p0.x, rec.chord.p0.y,
                       rec.arc.center.x, rec.arc.center.y, rec.arc.chi);
        }
        os << fmt::format("{}: ({}, {}) residual {} rotation {} minimal period {} family {}\n", methods[i], po.m,
                          po.n, io::num(po.residual), io::num(po.rotation_number()), po.minimal_period, po.family);
    }
    io::Svg svg = drawn ? detail::box_of(ctx.curve, drawn->records).canvas()
                        : detail::box_of(ctx.curve, {}).canvas();
    svg.polyline(detail::boundary_polyline(ctx.curve), "black", 1.5, true);
    if (drawn) detail::draw_segments(svg, ctx.curve, drawn->records);
    svg.save(ctx.path("periodic.svg"));
    if (!any_ok || !all_ok) return kExitNumerical;
    return kExitOk;
}

// --- check ------------------------------------------------------------------------------------

namespace detail {

inline double rel_matrix_error(const Jacobian2& a, const Jacobian2& b) {
    const double num = std::hypot(std::hypot(a.ss - b.ss, a.su - b.su), std::hypot(a.us - b.us, a.uu - b.uu));
    const double den = std::hypot(std::hypot(b.ss, b.su), std::hypot(b.us, b.uu));
    return num / std::max(den, 1.0);
}

inline Jacobian2 fd_jacobian_return(const Curve& c, const PhaseState& st, double mu, const Tolerances& tol,
                                    double h = 1e-6) {
    auto at = [&](double s, double u) { return return_map(c, PhaseState::from_u(s, u), mu, tol); };
    const auto sp = at(st.s + h, st.u), sm = at(st.s - h, st.u);
    const auto up = at(st.s, st.u + h), um = at(st.s, st.u - h);
    Jacobian2 j;
    j.ss = (2.0 * h + sp.advance - sm.advance) / (2.0 * h);
    j.us = (sp.reentry().u - sm.reentry().u) / (2.0 * h);
    j.su = (up.advance - um.advance) / (2.0 * h);
    j.uu = (up.reentry().u - um.reentry().u) / (2.0 * h);
    return j;
}

inline std::string status(bool ok) { return ok ? "pass" : "fail"; }

}  // namespace detail

/// Runs the invariant suites and writes check.json. Suites that do not apply
/// to the regime are reported as "skipped"; regime phenomena that are
/// expected (non-twist, tangency jumps) are reported as "detected".
inline nlohmann::ordered_json run_checks(const Context& ctx) {
    using nlohmann::ordered_json;
    const Curve& c = ctx.curve;
    const double mu = ctx.mu;
    const Tolerances& tol = ctx.tol;
    const double L = c.length();
    const Regime regime = classify_regime(c, mu, tol);
    const int samples = std::max(1, ctx.cfg.samples);
    detail::Uniform rng(ctx.cfg.seed);

    ordered_json rep;
    rep["program"] = fmt::format("{} v{}", kProgramName, kVersion);
    rep["curve"] = c.description();
    rep["mu"] = mu;
    rep["regime"] = to_string(regime);
    rep["seed"] = ctx.cfg.seed;
    ordered_json suites = ordered_json::array();

    std::vector<PhaseState> states;
    for (int k = 0; k < samples; ++k) states.push_back(PhaseState::from_u(rng(0.0, L), rng(-0.98, 0.98)));

    {
        double det_err = 0.0, cor_err = 0.0;
        int used = 0, skipped = 0;
        for (const auto& st : states) {
            try {
                const auto rec = return_map(c, st, mu, tol);
                const auto J = jacobian_return(rec, tol);
                det_err = std::max(det_err, std::abs(J.det() - 1.0));
                cor_err = std::max(cor_err, detail::rel_matrix_error(jacobian_return_closed_form(rec), J));
                ++used;
            } catch (const Error&) {
                ++skipped;
            }
        }
        const bool ok = used > 0 && det_err < tol.det && cor_err < 1e-9;
        suites.push_back({{"name", "symplectic"}, {"status", detail::status(ok)}, {"states", used},
                          {"skipped", skipped}, {"max_det_error", det_err}, {"max_closed_form_error", cor_err}});
    }
    {
        double err = 0.0;
        int used = 0, skipped = 0;
        for (std::size_t k = 0; k < std::min<std::size_t>(states.size(), 50); ++k) {
            try {
                const auto J = jacobian_return(c, states[k], mu, tol);
                err = std::max(err, detail::rel_matrix_error(J, detail::fd_jacobian_return(c, states[k], mu, tol)));
                ++used;
            } catch (const Error&) {
                ++skipped;
            }
        }
        const bool ok = used > 0 && err < 1e-5;
        suites.push_back({{"name", "jacobian_fd"}, {"status", detail::status(ok)}, {"states", used},
                          {"skipped", skipped}, {"max_relative_error", err}});
    }
    if (regime == Regime::strong_field) {
        double err = 0.0;
        int used = 0;
        const double h = 1e-6;
        for (std::size_t k = 0; k < std::min<std::size_t>(states.size(), 20); ++k) {
            const auto rec = return_map(c, states[k], mu, tol);
            const double s0 = states[k].s, s2 = s0 + rec.advance;
            if (!(rec.advance > 10 * h && rec.advance < L - 10 * h)) continue;
            const double g0 = (generating_function(c, mu, s0 + h, s2, tol).G -
                               generating_function(c, mu, s0 - h, s2, tol).G) / (2.0 * h);
            const double g2 = (generating_function(c, mu, s0, s2 + h, tol).G -
                               generating_function(c, mu, s0, s2 - h, tol).G) / (2.0 * h);
            const double expect0 = -states[k].u, expect2 = rec.reentry().u;
            err = std::max(err, std::hypot(g0 - expect0, g2 - expect2) / std::max(1.0, std::hypot(expect0, expect2)));
            ++used;
        }
        const bool ok = used > 0 && err < 1e-6;
        suites.push_back({{"name", "gradient"}, {"status", detail::status(ok)}, {"pairs", used},
                          {"max_relative_error", err}});
    } else {
        suites.push_back({{"name", "gradient"}, {"status", "skipped"}, {"reason", "no twist outside the strong field regime"}});
    }
    {
        ordered_json rows = ordered_json::array();
        bool ok = true;
        int used = 0;
        for (double s : {0.0, 0.125 * L, 0.25 * L}) {
            for (Side side : {Side::minus_one, Side::plus_one}) {
                for (int which = 0; which < 2; ++which) {
                    try {
                        const auto tc = which == 0 ? taylor_check_T2(c, mu, s, side, tol) : taylor_check_T(c, mu, s, side, tol);
                        const bool row_ok = tc.relative_error < 1e-2;
                        ok = ok && row_ok;
                        ++used;
                        rows.push_back({{"map", which == 0 ? "T2" : "T"}, {"s", s}, {"side", to_string(side)},
                                        {"predicted", tc.predicted}, {"measured", tc.measured},
                                        {"relative_error", tc.relative_error}});
                    } catch (const Error& e) {
                        rows.push_back({{"map", which == 0 ? "T2" : "T"}, {"s", s}, {"side", to_string(side)},
                                        {"skipped", e.what()}});
                    }
                }
            }
        }
        suites.push_back({{"name", "taylor"}, {"status", used == 0 ? "skipped" : detail::status(ok)}, {"cases", rows}});
    }
    {
        const auto tm = twist_measure(c, mu, 40, 40, tol);
        std::string st;
        if (regime == Regime::strong_field) {
            st = detail::status(tm.min_slope > 0.0);
        } else {
            st = tm.min_slope > 0.0 ? "monotone-on-grid" : "non-twist-detected";
        }
        suites.push_back({{"name", "twist"}, {"status", st}, {"min_slope", tm.min_slope},
                          {"argmin_s", tm.argmin.s}, {"argmin_u", tm.argmin.u}, {"evaluated", tm.evaluated},
                          {"skipped", tm.skipped}});
    }
    {
        std::vector<double> us;
        for (int j = 0; j < 200; ++j) us.push_back(-1.0 + 2.0 * (j + 0.5) / 200);
        int flagged = 0, lines = 8;
        for (int i = 0; i < lines; ++i) {
            flagged += image_of_vertical_line(c, mu, L * i / lines, us, tol).tangency_flagged;
        }
        std::string st;
        if (regime == Regime::intermediate) {
            st = flagged > 0 ? "detected" : "none-on-grid";
        } else {
            st = detail::status(flagged == 0);
        }
        suites.push_back({{"name", "tangency"}, {"status", st}, {"lines", lines}, {"flagged", flagged}});
    }
    {
        const auto mi = mu_intersection_check(c, mu, 64, tol);
        suites.push_back({{"name", "mu_intersection"}, {"status", mi.holds ? "holds" : "fails"},
                          {"by_regime", mi.by_regime}, {"max_crossings", mi.max_crossings}});
    }
    if (c.kind() == CurveKind::circle) {
        double adv_err = 0.0, drift = 0.0;
        const double R = c.radius();
        for (std::size_t k = 0; k < std::min<std::size_t>(states.size(), 50); ++k) {
            const double th = states[k].theta;
            const double chi = th + std::atan2(mu * std::sin(th), R - mu * std::cos(th));
            const auto rec = return_map(c, states[k], mu, tol);
            adv_err = std::max(adv_err, std::abs(rec.advance - 2.0 * R * chi));
            drift = std::max(drift, std::abs(rec.reentry().u - states[k].u));
        }
        const bool ok = adv_err < 1e-9 && drift < 1e-10;
        suites.push_back({{"name", "circle_oracle"}, {"status", detail::status(ok)},
                          {"max_advance_error", adv_err}, {"max_u_drift", drift}});
    }
    bool pass = true;
    for (const auto& s : suites) pass = pass && s["status"] != "fail";
    rep["suites"] = suites;
    rep["pass"] = pass;
    return rep;
}

inline int cmd_check(const Context& ctx, std::ostream& os) {
    const auto rep = run_checks(ctx);
    std::ofstream(ctx.path("check.json"), std::ios::binary) << rep.dump(2) << '\n';
    io::CsvWriter csv(ctx.path("check.csv"), "check", {"suite", "status"});
    for (const auto& s : rep["suites"]) {
        csv.row(s["name"].get<std::string>(), s["status"].get<std::string>());
        os << fmt::format("{:<16} {}\n", s["name"].get<std::string>(), s["status"].get<std::string>());
    }
    os << "overall " << (rep["pass"].get<bool>() ? "pass" : "fail") << '\n';
    return rep["pass"].get<bool>() ? kExitOk : kExitNumerical;
}

// --- caustic ----------------------------------------------------------------------------------

inline int cmd_caustic(const Context& ctx, std::ostream& os) {
    const PhaseState start = detail::start_state(ctx);
    const OrbitTrace tr = iterate(ctx.curve, ctx.mu, start, ctx.cfg.iters, ctx.tol);
    const CausticReport rep = caustic_report(ctx.curve, tr, {0.0, 0.0}, ctx.tol);

    io::CsvWriter csv(ctx.path("caustic.csv"), "caustic",
                      {"k", "inner_distance", "outer_distance", "x0", "y0", "x1", "y1", "cx", "cy"});
    std::size_t used = 0;
    for (std::size_t k = 0; k < tr.records.size(); ++k) {
        const auto& r = tr.records[k];
        if (r.boundary_limit) continue;
        csv.row(k, rep.inner_distances[used], rep.outer_distances[used], r.chord.p0.x, r.chord.p0.y, r.chord.p1.x,
                r.chord.p1.y, r.arc.center.x, r.arc.center.y);
        ++used;
    }
    io::CsvWriter env(ctx.path("caustic_envelope.csv"), "caustic", {"x", "y"});
    for (const auto& p : rep.envelope) env.row(p.x, p.y);
    io::CsvWriter sum(ctx.path("caustic_summary.csv"), "caustic", {"key", "value"});
    sum.row("chords", rep.chords);
    sum.row("inner_min", rep.inner.min);
    sum.row("inner_max", rep.inner.max);
    sum.row("outer_min", rep.outer.min);
    sum.row("outer_max", rep.outer.max);
    sum.row("envelope_convex", rep.envelope_convex);
    sum.row("guard_passed", rep.guard_passed);
    sum.row("inner_caustic", rep.inner_caustic);
    sum.row("outer_constant", rep.outer_constant);

    const std::size_t drawn = std::min<std::size_t>(tr.records.size(), 300);
    const std::vector<SegmentRecord> shown(tr.records.begin(), tr.records.begin() + drawn);
    detail::Box box = detail::box_of(ctx.curve, shown);
    io::Svg svg = box.canvas();
    svg.polyline(detail::boundary_polyline(ctx.curve), "black", 1.5, true);
    for (const auto& r : shown) {
        if (!r.boundary_limit) svg.line(r.chord.p0, r.chord.p1, "#1f4e9c", 0.5);
    }
    for (const auto& p : rep.envelope) {
        if (p.x >= box.xmin && p.x <= box.xmax && p.y >= box.ymin && p.y <= box.ymax) svg.dot(p, 1.2, "#2ca02c");
    }
    for (const auto& p : larmor_center_locus(tr)) svg.dot(p, 1.2, "#e67e22");
    svg.save(ctx.path("caustic.svg"));

    os << fmt::format("caustic: {} chords, inner distance [{}, {}], outer [{}, {}]\n", rep.chords,
                      io::num(rep.inner.min), io::num(rep.inner.max), io::num(rep.outer.min), io::num(rep.outer.max));
    os << fmt::format("inner caustic {}, envelope convex {}, curvature guard {}\n", rep.inner_caustic ? "yes" : "no",
                      rep.envelope_convex ? "yes" : "no", rep.guard_passed ? "passed" : "failed");
    if (tr.tangency_stop) {
        std::cerr << "caustic orbit stopped: " << tr.stop_reason << '\n';
        return kExitNumerical;
    }
    return kExitOk;
}

/// Dispatch with the exit-code contract: 2 for configuration problems,
/// 3 for numerical failures.
inline int run_command(const RunConfig& cfg, std::ostream& os = std::cout) {
    try {
        const Context ctx = make_context(cfg);
        if (cfg.command == "info") return cmd_info(ctx, os);
        if (cfg.command == "portrait") return cmd_portrait(ctx, os);
        if (cfg.command == "orbit") return cmd_orbit(ctx, os);
        if (cfg.command == "periodic") return cmd_periodic(ctx, os);
        if (cfg.command == "check") return cmd_check(ctx, os);
        if (cfg.command == "caustic") return cmd_caustic(ctx, os);
        throw ConfigError("unknown subcommand '" + cfg.command + "'");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::invalid_argument || e.kind() == ErrorKind::convexity_violation) {
            std::cerr << "config error: " << e.what() << '\n';
            return kExitConfig;
        }
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace imb::cli
