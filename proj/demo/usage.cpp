// Walk through the library: one return of the map, its Jacobian, the
// generating function and a (2,4) periodic orbit in an ellipse.

#include <cstdio>

#include "imb/action.hpp"
#include "imb/analysis.hpp"
#include "imb/boundary.hpp"
#include "imb/dynamics.hpp"
#include "imb/orbits.hpp"

int main() {
    using namespace imb;
    const Curve ellipse = Curve::ellipse(2.0);
    const double mu = 0.3;
    std::printf("%s  L = %.12f  regime %s\n", ellipse.description().c_str(), ellipse.length(),
                to_string(classify_regime(ellipse, mu)));

    const auto rec = return_map(ellipse, PhaseState::from_u(0.4, -0.2), mu);
    const auto J = jacobian_return(rec);
    std::printf("T(0.4, -0.2) = (%.12f, %.12f)  chi = %.6f  det DT = %.15f\n", rec.reentry().s,
                rec.reentry().u, rec.chi(), J.det());

    const auto G = generating_function(ellipse, mu, rec);
    std::printf("G = %.12f  (chord %.6f, arc %.6f, outside area %.6f)\n", G.G, G.l1, G.arc_length, G.S);

    const auto po = find_periodic_variational(ellipse, mu, 2, 4);
    std::printf("(2,4) orbit: residual %.2e  rotation number %.12f  %s\n", po.residual,
                po.rotation_number(), po.family.c_str());
    for (const auto& st : po.states) std::printf("  s = %.10f  u = %.10f\n", st.s, st.u);

    const auto circle = Curve::circle(1.0);
    const auto tr = iterate(circle, 0.5, PhaseState::from_u(0.0, -0.6), 2000);
    const auto rep = caustic_report(circle, tr, {0.0, 0.0});
    std::printf("circle caustics: inner radius %.12f  outer radius %.12f\n", rep.inner.mean, rep.outer.mean);
    return 0;
}
