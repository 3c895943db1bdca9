#include "tabrec/mask_targets.hpp"

#include <algorithm>
#include <cmath>

namespace tabrec {

double pyramid_value(double w, double mid, double extent) {
    const double v = w <= mid ? w / mid : (extent - w) / (extent - mid);
    return std::clamp(v, 0.0, 1.0);
}

LocalTarget lpma_targets(const Rect& proposal, const Rect& text_rect) {
    if (!proposal.valid() || !text_rect.valid())
        throw StructureError("bad-rect", "invalid proposal or text rect");
    if (!proposal.contains_rect(text_rect))
        throw StructureError("bad-rect", "text rect not inside proposal");

    const PixelSpan sx = pixel_span(proposal.x1, proposal.x2);
    const PixelSpan sy = pixel_span(proposal.y1, proposal.y2);
    const int w_px = sx.count();
    const int h_px = sy.count();
    if (w_px < 1 || h_px < 1)
        throw StructureError("empty-map", "proposal rasterizes to zero pixels");

    // Proposal-local coordinates: W, H are the rasterized size, the ramp is
    // evaluated at integer column/row offsets.
    const double width = w_px;
    const double height = h_px;
    const double x_mid = text_rect.x_mid() - proposal.x1;
    const double y_mid = text_rect.y_mid() - proposal.y1;
    if (x_mid <= 0.0 || x_mid >= width || y_mid <= 0.0 || y_mid >= height)
        throw StructureError("degenerate-pyramid",
                             "text midline on a proposal edge");

    LocalTarget out{proposal, text_rect, ScalarMap(w_px, h_px),
                    ScalarMap(w_px, h_px), ScalarMap(w_px, h_px)};
    for (int i = 0; i < h_px; ++i) {
        const float tv = static_cast<float>(pyramid_value(i, y_mid, height));
        for (int j = 0; j < w_px; ++j) {
            const float th = static_cast<float>(pyramid_value(j, x_mid, width));
            out.pyr_h.at(j, i) = th;
            out.pyr_v.at(j, i) = tv;
            if (text_rect.contains_pixel(sx.first + j, sy.first + i))
                out.mask.at(j, i) = 1.0f;
        }
    }
    return out;
}

namespace {

// Ramp over [lo, hi] peaked at mid, sampled at an absolute coordinate.
double span_ramp(double x, double lo, double hi, double mid) {
    mid = std::clamp(mid, std::nextafter(lo, hi), std::nextafter(hi, lo));
    const double v = x <= mid ? (x - lo) / (mid - lo) : (hi - x) / (hi - mid);
    return std::clamp(v, 0.0, 1.0);
}

}  // namespace

GlobalTarget gpma_targets(const TableAnnotation& ann,
                          const std::map<int, Rect>& aligned) {
    ann.validate();
    GlobalTarget out{ScalarMap(ann.image_width, ann.image_height),
                     ScalarMap(ann.image_width, ann.image_height),
                     ScalarMap(ann.image_width, ann.image_height)};
    for (const auto& cell : ann.cells) {
        auto it = aligned.find(cell.id);
        if (it == aligned.end())
            throw StructureError("missing-aligned-box",
                                 "no aligned rect for cell " + std::to_string(cell.id));
        const Rect shrunk = it->second.shrink(kShrinkPerSide);
        const PixelSpan sx = pixel_span(shrunk.x1, std::min<double>(shrunk.x2, ann.image_width));
        const PixelSpan sy = pixel_span(shrunk.y1, std::min<double>(shrunk.y2, ann.image_height));
        if (sx.count() < 1 || sy.count() < 1)
            throw StructureError("vanished-cell",
                                 "shrunk rect of cell " + std::to_string(cell.id) +
                                     " rasterizes to zero pixels");
        for (int py = sy.first; py < sy.last; ++py)
            for (int px = sx.first; px < sx.last; ++px)
                out.seg.at(px, py) = 1.0f;
        if (cell.is_empty()) continue;

        const double peak_x = cell.text_rect->x_mid();
        const double peak_y = cell.text_rect->y_mid();
        for (int py = sy.first; py < sy.last; ++py) {
            const double tv = span_ramp(py + 0.5, shrunk.y1, shrunk.y2, peak_y);
            for (int px = sx.first; px < sx.last; ++px) {
                const double th = span_ramp(px + 0.5, shrunk.x1, shrunk.x2, peak_x);
                out.pyr_h.at(px, py) = static_cast<float>(th);
                out.pyr_v.at(px, py) = static_cast<float>(tv);
            }
        }
    }
    return out;
}

}  // namespace tabrec
