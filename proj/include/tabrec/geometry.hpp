#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "tabrec/errors.hpp"

namespace tabrec {

// Axis-aligned rectangle in image pixel space. x grows rightward, y downward.
// Containment follows the pixel-center convention: pixel (px, py) is inside
// iff x1 <= px + 0.5 < x2 and y1 <= py + 0.5 < y2.
struct Rect {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double x_mid() const { return 0.5 * (x1 + x2); }
    double y_mid() const { return 0.5 * (y1 + y2); }
    double area() const { return width() * height(); }

    bool valid() const {
        return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
               std::isfinite(y2) && x1 >= 0.0 && y1 >= 0.0 && x1 < x2 && y1 < y2;
    }

    bool contains_pixel(int px, int py) const {
        const double cx = px + 0.5;
        const double cy = py + 0.5;
        return x1 <= cx && cx < x2 && y1 <= cy && cy < y2;
    }

    bool contains_rect(const Rect& o) const {
        return x1 <= o.x1 && y1 <= o.y1 && o.x2 <= x2 && o.y2 <= y2;
    }

    // Scales each dimension by (1 - 2*per_side) about the center.
    Rect shrink(double per_side) const {
        const double dx = per_side * width();
        const double dy = per_side * height();
        return {x1 + dx, y1 + dy, x2 - dx, y2 - dy};
    }

    bool operator==(const Rect&) const = default;
};

inline std::optional<Rect> intersect(const Rect& a, const Rect& b) {
    Rect r{std::max(a.x1, b.x1), std::max(a.y1, b.y1), std::min(a.x2, b.x2),
           std::min(a.y2, b.y2)};
    if (r.x1 >= r.x2 || r.y1 >= r.y2) return std::nullopt;
    return r;
}

inline double iou(const Rect& a, const Rect& b) {
    auto inter = intersect(a, b);
    if (!inter) return 0.0;
    const double ia = inter->area();
    return ia / (a.area() + b.area() - ia);
}

// Half-open pixel index range [first, last) covered by a 1-d interval
// under the pixel-center convention.
struct PixelSpan {
    int first = 0;
    int last = 0;
    int count() const { return last > first ? last - first : 0; }
};

inline PixelSpan pixel_span(double lo, double hi) {
    // smallest p with lo <= p + 0.5  and  smallest p with hi <= p + 0.5
    int first = static_cast<int>(std::ceil(lo - 0.5));
    int last = static_cast<int>(std::ceil(hi - 0.5));
    if (first < 0) first = 0;
    if (last < first) last = first;
    return {first, last};
}

}  // namespace tabrec
