#pragma once

#include <map>
#include <string>

#include "imb/error.hpp"

namespace imb {

/// Numerical tolerances shared by all modules. Every field can be overridden
/// by name (see `set`), which is how the CLI's --tol-override works.
struct Tolerances {
    double geom = 1e-10;           // geometric identities (unit speed, curvature)
    double param = 1e-9;           // native <-> arc-length round trips
    double regime = 1e-8;          // relative band for curvature-regime boundaries
    double root = 1e-12;           // root-finder target
    double tangent = 1e-14;        // 1 - |u| below this counts as tangent
    double tangent_slope = 1e-9;   // relative slope of the gap function at a grazing crossing
    double chi = 1e-6;             // |cos chi| below this switches Jacobian grouping
    double det = 1e-8;             // |det - 1| for symplectic checks
    double area = 1e-10;           // quadrature failure threshold
    double orbit = 1e-10;          // periodic-orbit residual
    double rot = 1e-6;             // rotation-number window spread
    double caustic = 1e-6;         // caustic spread verdict

    void set(const std::string& key, double value) {
        auto fields = field_map();
        auto it = fields.find(key);
        if (it == fields.end()) {
            throw Error(ErrorKind::invalid_argument, "unknown tolerance key '" + key + "'");
        }
        this->*(it->second) = value;
    }

    double get(const std::string& key) const {
        auto fields = field_map();
        auto it = fields.find(key);
        if (it == fields.end()) {
            throw Error(ErrorKind::invalid_argument, "unknown tolerance key '" + key + "'");
        }
        return this->*(it->second);
    }

    static std::map<std::string, double Tolerances::*> field_map() {
        return {{"geom", &Tolerances::geom},       {"param", &Tolerances::param},
                {"regime", &Tolerances::regime},   {"root", &Tolerances::root},
                {"tangent", &Tolerances::tangent}, {"tangent_slope", &Tolerances::tangent_slope},
                {"chi", &Tolerances::chi},         {"det", &Tolerances::det},
                {"area", &Tolerances::area},       {"orbit", &Tolerances::orbit},
                {"rot", &Tolerances::rot},         {"caustic", &Tolerances::caustic}};
    }
};

}  // namespace imb
