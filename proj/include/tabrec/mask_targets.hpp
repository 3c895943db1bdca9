#pragma once

#include <map>

#include "tabrec/scalar_map.hpp"
#include "tabrec/table_model.hpp"

namespace tabrec {

// Fraction taken off each side when a cell rect is shrunk for the global
// targets; each dimension ends up scaled by 0.95 about the center.
inline constexpr double kShrinkPerSide = 0.025;

struct LocalTarget {
    Rect proposal;
    Rect text_rect;
    ScalarMap mask;    // 1 exactly on pixels inside text_rect
    ScalarMap pyr_h;
    ScalarMap pyr_v;
};

struct GlobalTarget {
    ScalarMap seg;     // all cells, empty included, shrunk rects
    ScalarMap pyr_h;   // non-empty cells only
    ScalarMap pyr_v;
};

// Pyramid ramp at local pixel index w: w / mid for w <= mid, else
// (extent - w) / (extent - mid).
double pyramid_value(double w, double mid, double extent);

// Per-proposal soft-mask targets. Throws "degenerate-pyramid" when the
// text midline sits on a proposal edge.
LocalTarget lpma_targets(const Rect& proposal, const Rect& text_rect);

// Whole-image targets: every aligned rect shrunk and rasterized into seg;
// non-empty cells additionally get pyramid ramps peaked at the text-rect
// midline. Throws "vanished-cell" if a shrunk rect rasterizes to nothing.
GlobalTarget gpma_targets(const TableAnnotation& ann,
                          const std::map<int, Rect>& aligned);

}  // namespace tabrec
