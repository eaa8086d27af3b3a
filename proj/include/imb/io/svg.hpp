#pragma once

// Minimal SVG 1.1 writer: polylines, circles, point clouds, circular arcs
// and text in a data coordinate box mapped onto a fixed canvas.

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "imb/error.hpp"
#include "imb/vec2.hpp"

namespace imb::io {

class Svg {
public:
    Svg(double xmin, double xmax, double ymin, double ymax, double width = 800.0, bool equal_aspect = true)
        : xmin_(xmin), ymin_(ymin), width_(width) {
        const double dx = std::max(xmax - xmin, 1e-12), dy = std::max(ymax - ymin, 1e-12);
        if (equal_aspect) {
            sx_ = sy_ = width / dx;
            height_ = dy * sy_;
        } else {
            sx_ = width / dx;
            height_ = 0.75 * width;
            sy_ = height_ / dy;
        }
        ymax_ = ymax;
    }

    double px(double x) const { return (x - xmin_) * sx_; }
    double py(double y) const { return (ymax_ - y) * sy_; }

    void polyline(const std::vector<Vec2>& pts, const std::string& stroke, double w = 1.0, bool closed = false) {
        if (pts.empty()) return;
        body_ << (closed ? "<polygon" : "<polyline") << " fill=\"none\" stroke=\"" << stroke
              << "\" stroke-width=\"" << fmt::format("{:.3f}", w) << "\" points=\"";
        for (const auto& p : pts) body_ << fmt::format("{:.3f},{:.3f} ", px(p.x), py(p.y));
        body_ << "\"/>\n";
    }

    void line(Vec2 a, Vec2 b, const std::string& stroke, double w = 1.0) {
        body_ << fmt::format("<line x1=\"{:.3f}\" y1=\"{:.3f}\" x2=\"{:.3f}\" y2=\"{:.3f}\" stroke=\"{}\" stroke-width=\"{:.3f}\"/>\n",
                             px(a.x), py(a.y), px(b.x), py(b.y), stroke, w);
    }

    void dot(Vec2 p, double r, const std::string& fill) {
        body_ << fmt::format("<circle cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"{:.3f}\" fill=\"{}\"/>\n", px(p.x), py(p.y), r, fill);
    }

    /// Counterclockwise circular arc (in data coordinates) from a to b around a circle of radius r.
    void arc(Vec2 a, Vec2 b, double r, bool large, const std::string& stroke, double w = 1.0) {
        // Data y points up, canvas y points down, so CCW in data is sweep-flag 0.
        body_ << fmt::format("<path fill=\"none\" stroke=\"{}\" stroke-width=\"{:.3f}\" d=\"M {:.3f} {:.3f} A {:.3f} {:.3f} 0 {} 0 {:.3f} {:.3f}\"/>\n",
                             stroke, w, px(a.x), py(a.y), r * sx_, r * sy_, large ? 1 : 0, px(b.x), py(b.y));
    }

    void text(Vec2 p, const std::string& s, double size = 14.0) {
        body_ << fmt::format("<text x=\"{:.3f}\" y=\"{:.3f}\" font-family=\"sans-serif\" font-size=\"{:.1f}\">{}</text>\n",
                             px(p.x), py(p.y), size, s);
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error(ErrorKind::invalid_argument, "cannot write '" + path + "'");
        out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
            << fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.3f} {:.3f}\">\n",
                           width_, height_, width_, height_)
            << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
            << body_.str() << "</svg>\n";
    }

private:
    double xmin_, ymin_, ymax_ = 0.0;
    double width_, height_ = 0.0;
    double sx_ = 1.0, sy_ = 1.0;
    std::ostringstream body_;
};

}  // namespace imb::io
