#include "tabrec/refine.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace tabrec {

namespace {

// Weight of the global term at coordinate x: 0 on the text midline,
// 1 at the box edges, linear between.
// The local weight is 1 minus this, so the blend is written as
// L + w_g * (G - L) to keep the identity case exact.
double global_weight(double x, double lo, double hi, double mid) {
    if (x <= mid) return (mid - x) / (mid - lo);
    return (x - mid) / (hi - mid);
}

// Blend over the overlap set. The local maps are rasterized over the
// proposal the detector emitted; (local_x0, local_y0) is that raster's
// origin, which stays fixed across refinement iterations even though the
// box moves. Pixels outside the local raster take the global value.
RescoredMask rescore_with_origin(const Rect& box, const Rect& text_rect,
                                 const ScalarMap& local_h, const ScalarMap& local_v,
                                 int local_x0, int local_y0,
                                 const GlobalPrediction& global,
                                 const PixelSet& overlap) {
    if (overlap.empty())
        throw StructureError("empty-overlap", "overlap region has no pixels");
    const double x_mid = text_rect.x_mid();
    const double y_mid = text_rect.y_mid();
    if (x_mid <= box.x1 || x_mid >= box.x2 || y_mid <= box.y1 || y_mid >= box.y2)
        throw StructureError("degenerate-midpoint",
                             "text midline on or outside a box edge");

    RescoredMask out;
    out.pyr_h.reserve(overlap.size());
    out.pyr_v.reserve(overlap.size());
    for (const Pixel& p : overlap) {
        const int lx = p.x - local_x0;
        const int ly = p.y - local_y0;
        const bool has_local = lx >= 0 && lx < local_h.width() && ly >= 0 &&
                               ly < local_h.height();
        const double gh = global.pyr_h_global.in_bounds(p.x, p.y)
                              ? global.pyr_h_global.at(p.x, p.y)
                              : 0.0;
        const double gv = global.pyr_v_global.in_bounds(p.x, p.y)
                              ? global.pyr_v_global.at(p.x, p.y)
                              : 0.0;
        double fh = gh;
        double fv = gv;
        if (has_local) {
            const double lh = local_h.at(lx, ly);
            const double lv = local_v.at(lx, ly);
            const double wh = global_weight(p.x + 0.5, box.x1, box.x2, x_mid);
            const double wv = global_weight(p.y + 0.5, box.y1, box.y2, y_mid);
            fh = lh + wh * (gh - lh);
            fv = lv + wv * (gv - lv);
        }
        out.pyr_h.push_back(static_cast<float>(std::clamp(fh, 0.0, 1.0)));
        out.pyr_v.push_back(static_cast<float>(std::clamp(fv, 0.0, 1.0)));
    }
    return out;
}

}  // namespace

PixelSet match_global_region(const Rect& box, const ScalarMap& seg, double threshold) {
    if (threshold <= 0.0 || threshold >= 1.0)
        throw StructureError("bad-threshold", "seg threshold must be in (0,1)");
    const int w = seg.width();
    const int h = seg.height();
    std::vector<int> label(static_cast<size_t>(w) * h, -1);
    auto lab = [&](int x, int y) -> int& { return label[static_cast<size_t>(y) * w + x]; };
    auto fg = [&](int x, int y) { return seg.at(x, y) >= threshold; };

    int n_labels = 0;
    std::vector<long long> overlap_count;
    std::vector<Pixel> stack;
    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            if (!fg(x0, y0) || lab(x0, y0) != -1) continue;
            const int id = n_labels++;
            overlap_count.push_back(0);
            stack.push_back({x0, y0});
            lab(x0, y0) = id;
            while (!stack.empty()) {
                const Pixel p = stack.back();
                stack.pop_back();
                if (box.contains_pixel(p.x, p.y)) ++overlap_count[id];
                constexpr int dx[4] = {1, -1, 0, 0};
                constexpr int dy[4] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    const int nx = p.x + dx[k];
                    const int ny = p.y + dy[k];
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    if (!fg(nx, ny) || lab(nx, ny) != -1) continue;
                    lab(nx, ny) = id;
                    stack.push_back({nx, ny});
                }
            }
        }
    }

    int best = -1;
    long long best_overlap = 0;
    for (int id = 0; id < n_labels; ++id) {
        if (overlap_count[id] > best_overlap) {  // ties keep the lowest label
            best = id;
            best_overlap = overlap_count[id];
        }
    }
    if (best < 0)
        throw StructureError("no-global-match",
                             "no segmentation component intersects the box");
    PixelSet region;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (lab(x, y) == best) region.push_back({x, y});
    return region;
}

RescoredMask rescore(const ProposalPrediction& pred, const GlobalPrediction& global,
                     const PixelSet& overlap) {
    const PixelSpan sx = pixel_span(pred.box.x1, pred.box.x2);
    const PixelSpan sy = pixel_span(pred.box.y1, pred.box.y2);
    return rescore_with_origin(pred.box, pred.text_rect, pred.pyr_h_local,
                               pred.pyr_v_local, sx.first, sy.first, global,
                               overlap);
}

PlaneFit fit_plane(const std::vector<std::array<double, 3>>& points) {
    const size_t n = points.size();
    if (n < 3)
        throw StructureError("degenerate-fit", "need at least 3 points");

    // Center (x, y) for conditioning; the normal equations then split into
    // a 2x2 block for (a, b) and a scalar equation for the offset.
    double mx = 0.0, my = 0.0, mz = 0.0;
    for (const auto& p : points) {
        mx += p[0];
        my += p[1];
        mz += p[2];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    mz /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0, syy = 0.0, sxz = 0.0, syz = 0.0;
    for (const auto& p : points) {
        const double dx = p[0] - mx;
        const double dy = p[1] - my;
        const double dz = p[2] - mz;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
        sxz += dx * dz;
        syz += dy * dz;
    }
    const double det = sxx * syy - sxy * sxy;
    const double scale = std::max(sxx, syy);
    if (scale <= 0.0 || det <= 1e-9 * scale * scale)
        throw StructureError("degenerate-fit",
                             "points are collinear or ill-conditioned");
    PlaneFit fit;
    fit.a = (syy * sxz - sxy * syz) / det;
    fit.b = (sxx * syz - sxy * sxz) / det;
    fit.c = mz - fit.a * mx - fit.b * my;
    return fit;
}

namespace {

// Boundary from the fitted plane's intersection with z = 0, averaged over
// the distinct cross-axis raster lines present in the fitted pixel set.
// For horizontal boundaries the caller swaps axes first.
std::optional<double> refine_side(const std::vector<std::array<double, 3>>& pts,
                                  const std::set<int>& cross_lines) {
    PlaneFit fit;
    try {
        fit = fit_plane(pts);
    } catch (const StructureError&) {
        return std::nullopt;
    }
    if (std::abs(fit.a) < 1e-9 || cross_lines.empty()) return std::nullopt;
    double sum = 0.0;
    for (int line : cross_lines) sum += (fit.b * (line + 0.5) + fit.c) / fit.a;
    return -sum / static_cast<double>(cross_lines.size());
}

}  // namespace

RefineResult refine_box(const ProposalPrediction& pred, const RescoredMask& rescored,
                        const PixelSet& overlap, int image_width, int image_height) {
    if (overlap.size() != rescored.pyr_h.size() ||
        overlap.size() != rescored.pyr_v.size())
        throw StructureError("size-mismatch",
                             "rescored mask does not match the pixel set");
    const Rect& b = pred.box;
    const double x_mid = pred.text_rect.x_mid();
    const double y_mid = pred.text_rect.y_mid();

    // left, top, right, bottom
    std::array<std::vector<std::array<double, 3>>, 4> pts;
    std::array<std::set<int>, 4> lines;
    for (size_t i = 0; i < overlap.size(); ++i) {
        const double cx = overlap[i].x + 0.5;
        const double cy = overlap[i].y + 0.5;
        const double fh = rescored.pyr_h[i];
        const double fv = rescored.pyr_v[i];
        if (b.x1 <= cx && cx <= x_mid) {
            pts[0].push_back({cx, cy, fh});
            lines[0].insert(overlap[i].y);
        }
        if (x_mid <= cx && cx <= b.x2) {
            pts[2].push_back({cx, cy, fh});
            lines[2].insert(overlap[i].y);
        }
        if (b.y1 <= cy && cy <= y_mid) {
            pts[1].push_back({cy, cx, fv});  // axes swapped
            lines[1].insert(overlap[i].x);
        }
        if (y_mid <= cy && cy <= b.y2) {
            pts[3].push_back({cy, cx, fv});
            lines[3].insert(overlap[i].x);
        }
    }

    RefineResult result;
    std::array<double, 4> coord{b.x1, b.y1, b.x2, b.y2};
    for (int s = 0; s < 4; ++s) {
        if (pts[s].empty()) {
            result.sides[s] = SideStatus::kNoPixels;
            continue;
        }
        auto refined = refine_side(pts[s], lines[s]);
        if (!refined) {
            result.sides[s] = SideStatus::kDegenerate;
            continue;
        }
        coord[s] = *refined;
    }
    Rect r{std::clamp(coord[0], 0.0, static_cast<double>(image_width)),
           std::clamp(coord[1], 0.0, static_cast<double>(image_height)),
           std::clamp(coord[2], 0.0, static_cast<double>(image_width)),
           std::clamp(coord[3], 0.0, static_cast<double>(image_height))};
    result.box = r.valid() ? r : b;
    return result;
}

RefineResult refine_proposal(const ProposalPrediction& pred,
                             const GlobalPrediction& global,
                             const RefineConfig& config) {
    if (config.iterations < 1)
        throw StructureError("bad-config", "iterations must be >= 1");

    const PixelSpan orig_sx = pixel_span(pred.box.x1, pred.box.x2);
    const PixelSpan orig_sy = pixel_span(pred.box.y1, pred.box.y2);

    Rect box = pred.box;
    // Clamp the text rect into the box; a badly placed text mask would
    // otherwise put the pyramid peak outside the blending interval.
    auto clamped_text = [&](const Rect& b) {
        Rect t{std::max(pred.text_rect.x1, b.x1), std::max(pred.text_rect.y1, b.y1),
               std::min(pred.text_rect.x2, b.x2), std::min(pred.text_rect.y2, b.y2)};
        return t;
    };
    Rect text = clamped_text(box);
    if (!text.valid())
        throw StructureError("degenerate-midpoint", "text rect outside the box");

    RefineResult result;
    result.box = box;
    for (int iter = 0; iter < config.iterations; ++iter) {
        PixelSet overlap;
        try {
            PixelSet region = match_global_region(box, global.seg, config.seg_threshold);
            overlap = overlap_region(region, box);
        } catch (const StructureError& e) {
            if (e.kind() != "no-global-match") throw;
        }
        ProposalPrediction work{box, text, pred.pyr_h_local, pred.pyr_v_local};
        if (overlap.empty()) {
            // Local-only fallback over the whole box raster: blend the local
            // maps with themselves, which reduces to the local prediction.
            for (int y = orig_sy.first; y < orig_sy.last; ++y)
                for (int x = orig_sx.first; x < orig_sx.last; ++x)
                    overlap.push_back({x, y});
            RescoredMask identity;
            identity.pyr_h.reserve(overlap.size());
            identity.pyr_v.reserve(overlap.size());
            for (const Pixel& p : overlap) {
                identity.pyr_h.push_back(
                    pred.pyr_h_local.at(p.x - orig_sx.first, p.y - orig_sy.first));
                identity.pyr_v.push_back(
                    pred.pyr_v_local.at(p.x - orig_sx.first, p.y - orig_sy.first));
            }
            result = refine_box(work, identity, overlap, global.seg.width(),
                                global.seg.height());
        } else {
            RescoredMask blended = rescore_with_origin(
                box, text, pred.pyr_h_local, pred.pyr_v_local, orig_sx.first,
                orig_sy.first, global, overlap);
            result = refine_box(work, blended, overlap, global.seg.width(),
                                global.seg.height());
        }
        box = result.box;
        text = clamped_text(box);
        if (!text.valid()) break;
    }
    return result;
}

}  // namespace tabrec
