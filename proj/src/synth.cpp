#include "tabrec/synth.hpp"

#include <algorithm>
#include <cmath>

#include "tabrec/mask_targets.hpp"
#include "tabrec/metrics.hpp"
#include "tabrec/recovery.hpp"

namespace tabrec {

void SynthConfig::validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(span_prob) || !prob(empty_prob) || !prob(seg_flip_rate))
        throw StructureError("bad-config", "probabilities must be in [0,1]");
    if (rows_min < 1 || rows_min > rows_max || cols_min < 1 || cols_min > cols_max)
        throw StructureError("bad-config", "bad row/column ranges");
    if (cell_w_min <= 0 || cell_w_min > cell_w_max || cell_h_min <= 0 ||
        cell_h_min > cell_h_max)
        throw StructureError("bad-config", "bad cell size ranges");
    if (inset_min < 1 || inset_min > inset_max)
        throw StructureError("bad-config", "bad inset range");
    // Single-span cells must keep a positive text extent; multi-span cells
    // use insets up to inset_max + 4 but cover at least two slots.
    if (2.0 * inset_max >= std::min(cell_w_min, cell_h_min) ||
        2.0 * (inset_max + 4.0) >= 2.0 * std::min(cell_w_min, cell_h_min))
        throw StructureError("bad-config", "insets too large for the cell sizes");
    if (box_jitter < 0 || box_jitter > 0.45 || pyramid_noise < 0)
        throw StructureError("bad-config", "bad noise parameters");
}

namespace {

struct Slot {
    int cell = -1;
};

struct ProtoCell {
    int row_start, row_end, col_start, col_end;
    bool empty = false;
};

// Recoverability: each row needs a live single-row cell, each column a
// live single-column cell. `cells` indices present in `grid` only.
bool recoverable(const std::vector<ProtoCell>& cells, int rows, int cols) {
    std::vector<bool> row_ok(rows, false), col_ok(cols, false);
    for (const auto& c : cells) {
        if (c.empty) continue;
        if (c.row_start == c.row_end) row_ok[c.row_start] = true;
        if (c.col_start == c.col_end) col_ok[c.col_start] = true;
    }
    return std::all_of(row_ok.begin(), row_ok.end(), [](bool b) { return b; }) &&
           std::all_of(col_ok.begin(), col_ok.end(), [](bool b) { return b; });
}

// Noiseless segmentation ground truth: shrunk aligned rects of every
// cell, empty cells included.
ScalarMap ideal_seg(const TableAnnotation& ann, const std::map<int, Rect>& aligned) {
    ScalarMap seg(ann.image_width, ann.image_height);
    for (const auto& cell : ann.cells) {
        const Rect shrunk = aligned.at(cell.id).shrink(kShrinkPerSide);
        const PixelSpan sx =
            pixel_span(shrunk.x1, std::min<double>(shrunk.x2, ann.image_width));
        const PixelSpan sy =
            pixel_span(shrunk.y1, std::min<double>(shrunk.y2, ann.image_height));
        for (int y = sy.first; y < sy.last; ++y)
            for (int x = sx.first; x < sx.last; ++x) seg.at(x, y) = 1.0f;
    }
    return seg;
}

// The midpoint-containment matching rule cannot express every layout:
// two span cells can share a row without containing each other's
// midlines, splitting the row's clique. Generated tables must round-trip
// through recovery, so layouts that don't are rejected and re-rolled.
bool round_trips(const TableAnnotation& ann) {
    const std::map<int, Rect> aligned = derive_aligned_boxes(ann);
    std::vector<std::pair<int, Rect>> boxes;
    for (const auto& cell : ann.cells)
        if (!cell.is_empty()) boxes.emplace_back(cell.id, aligned.at(cell.id));
    try {
        TableGrid grid = recover(boxes, ideal_seg(ann, aligned));
        return structure_equal(grid, ann);
    } catch (const StructureError&) {
        return false;
    }
}

TableAnnotation generate_attempt(const SynthConfig& config, Rng& rng);

}  // namespace

TableAnnotation generate_table(const SynthConfig& config, uint64_t seed) {
    config.validate();
    constexpr int kMaxAttempts = 256;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Rng rng(seed + 0x9e3779b97f4a7c15ull * static_cast<uint64_t>(attempt));
        TableAnnotation ann = generate_attempt(config, rng);
        if (round_trips(ann)) return ann;
    }
    throw StructureError("generation-failed",
                         "no recoverable layout found for this seed");
}

namespace {

TableAnnotation generate_attempt(const SynthConfig& config, Rng& rng) {
    const int rows = rng.uniform_int(config.rows_min, config.rows_max);
    const int cols = rng.uniform_int(config.cols_min, config.cols_max);

    std::vector<double> col_x(cols + 1), row_y(rows + 1);
    col_x[0] = config.margin;
    for (int c = 0; c < cols; ++c)
        col_x[c + 1] = col_x[c] + rng.uniform(config.cell_w_min, config.cell_w_max);
    row_y[0] = config.margin;
    for (int r = 0; r < rows; ++r)
        row_y[r + 1] = row_y[r] + rng.uniform(config.cell_h_min, config.cell_h_max);

    // Start from a full grid of 1x1 cells, then greedily merge adjacent
    // pairs while the table stays recoverable.
    std::vector<ProtoCell> cells;
    std::vector<int> owner(static_cast<size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            owner[static_cast<size_t>(r) * cols + c] = static_cast<int>(cells.size());
            cells.push_back({r, r, c, c, false});
        }

    auto at = [&](int r, int c) -> int& {
        return owner[static_cast<size_t>(r) * cols + c];
    };
    const int attempts =
        static_cast<int>(std::lround(config.span_prob * 2.0 * rows * cols));
    for (int k = 0; k < attempts; ++k) {
        const int r = rng.uniform_int(0, rows - 1);
        const int c = rng.uniform_int(0, cols - 1);
        const bool down = rng.bernoulli(0.5);
        const int r2 = down ? r + 1 : r;
        const int c2 = down ? c : c + 1;
        if (r2 >= rows || c2 >= cols) continue;
        const int a = at(r, c);
        const int b = at(r2, c2);
        if (a == b) continue;
        ProtoCell merged{std::min(cells[a].row_start, cells[b].row_start),
                         std::max(cells[a].row_end, cells[b].row_end),
                         std::min(cells[a].col_start, cells[b].col_start),
                         std::max(cells[a].col_end, cells[b].col_end), false};
        // Union must be a full rectangle owned by just these two cells.
        bool rect_ok = true;
        for (int rr = merged.row_start; rr <= merged.row_end && rect_ok; ++rr)
            for (int cc = merged.col_start; cc <= merged.col_end; ++cc)
                if (at(rr, cc) != a && at(rr, cc) != b) {
                    rect_ok = false;
                    break;
                }
        if (!rect_ok) continue;
        std::vector<ProtoCell> trial = cells;
        trial[a] = merged;
        trial[b].row_start = -1;  // tombstone: drop from recoverability scan
        std::vector<ProtoCell> live;
        for (const auto& t : trial)
            if (t.row_start >= 0) live.push_back(t);
        if (!recoverable(live, rows, cols)) continue;
        cells[a] = merged;
        cells[b].row_start = -1;
        for (int rr = merged.row_start; rr <= merged.row_end; ++rr)
            for (int cc = merged.col_start; cc <= merged.col_end; ++cc) at(rr, cc) = a;
    }

    std::vector<ProtoCell> live;
    for (const auto& c : cells)
        if (c.row_start >= 0) live.push_back(c);

    // Empty marking, guarded so each row/column keeps its anchor.
    for (auto& c : live) {
        if (!rng.bernoulli(config.empty_prob)) continue;
        c.empty = true;
        if (!recoverable(live, rows, cols)) c.empty = false;
    }

    TableAnnotation ann;
    int next_id = 0;
    for (const auto& c : live) {
        CellAnnotation cell;
        cell.id = next_id++;
        cell.row_start = c.row_start;
        cell.row_end = c.row_end;
        cell.col_start = c.col_start;
        cell.col_end = c.col_end;
        if (!c.empty) {
            // Single-span axes take a free inset; multi-span axes use an
            // inset past inset_max so the text stays inside the aligned
            // extents defined by the single-span cells.
            auto inset = [&](bool single) {
                return single ? rng.uniform(config.inset_min, config.inset_max)
                              : rng.uniform(config.inset_max + 1.0,
                                            config.inset_max + 4.0);
            };
            const bool single_col = c.col_start == c.col_end;
            const bool single_row = c.row_start == c.row_end;
            const double x1 = col_x[c.col_start] + inset(single_col);
            const double x2 = col_x[c.col_end + 1] - inset(single_col);
            const double y1 = row_y[c.row_start] + inset(single_row);
            const double y2 = row_y[c.row_end + 1] - inset(single_row);
            cell.text_rect = Rect{x1, y1, x2, y2};
        }
        ann.cells.push_back(cell);
    }
    ann.image_width = static_cast<int>(std::ceil(col_x[cols] + config.margin));
    ann.image_height = static_cast<int>(std::ceil(row_y[rows] + config.margin));
    ann.validate();
    return ann;
}

// Ideal pyramid ramp of one cell in image coordinates: 0 at the aligned
// rect's edges, 1 at the text midline.
double ideal_ramp(double coord, double lo, double hi, double peak) {
    const double v = coord <= peak ? (coord - lo) / (peak - lo)
                                   : (hi - coord) / (hi - peak);
    return std::clamp(v, 0.0, 1.0);
}

}  // namespace

PredictionBundle corrupt_predictions(const TableAnnotation& ann,
                                     const std::map<int, Rect>& aligned,
                                     const SynthConfig& config, uint64_t seed) {
    config.validate();
    ann.validate();
    Rng rng(seed);
    PredictionBundle bundle;
    bundle.global.seg = ScalarMap(ann.image_width, ann.image_height);
    bundle.global.pyr_h_global = ScalarMap(ann.image_width, ann.image_height);
    bundle.global.pyr_v_global = ScalarMap(ann.image_width, ann.image_height);

    auto noise = [&]() {
        return config.pyramid_noise == 0.0
                   ? 0.0
                   : rng.uniform(-config.pyramid_noise, config.pyramid_noise);
    };

    for (const auto& cell : ann.cells) {
        const Rect& box = aligned.at(cell.id);
        const Rect shrunk = box.shrink(kShrinkPerSide);
        const PixelSpan sx = pixel_span(shrunk.x1, std::min<double>(shrunk.x2, ann.image_width));
        const PixelSpan sy = pixel_span(shrunk.y1, std::min<double>(shrunk.y2, ann.image_height));
        for (int y = sy.first; y < sy.last; ++y)
            for (int x = sx.first; x < sx.last; ++x)
                bundle.global.seg.at(x, y) = 1.0f;
        if (cell.is_empty()) continue;

        const double px = cell.text_rect->x_mid();
        const double py = cell.text_rect->y_mid();
        const PixelSpan fx = pixel_span(box.x1, std::min<double>(box.x2, ann.image_width));
        const PixelSpan fy = pixel_span(box.y1, std::min<double>(box.y2, ann.image_height));
        for (int y = fy.first; y < fy.last; ++y) {
            const double rv = ideal_ramp(y + 0.5, box.y1, box.y2, py);
            for (int x = fx.first; x < fx.last; ++x) {
                const double rh = ideal_ramp(x + 0.5, box.x1, box.x2, px);
                bundle.global.pyr_h_global.at(x, y) =
                    static_cast<float>(std::clamp(rh + noise(), 0.0, 1.0));
                bundle.global.pyr_v_global.at(x, y) =
                    static_cast<float>(std::clamp(rv + noise(), 0.0, 1.0));
            }
        }
    }

    // Proposals for non-empty cells: per-side jitter, clamped to keep the
    // text rect inside the box and the box inside the image.
    for (const auto& cell : ann.cells) {
        if (cell.is_empty()) continue;
        const Rect& box = aligned.at(cell.id);
        const Rect& text = *cell.text_rect;
        auto jit = [&](double extent) {
            return config.box_jitter == 0.0
                       ? 0.0
                       : rng.uniform(-config.box_jitter, config.box_jitter) * extent;
        };
        Rect prop{box.x1 + jit(box.width()), box.y1 + jit(box.height()),
                  box.x2 + jit(box.width()), box.y2 + jit(box.height())};
        prop.x1 = std::clamp(prop.x1, 0.0, text.x1 - 0.5);
        prop.y1 = std::clamp(prop.y1, 0.0, text.y1 - 0.5);
        prop.x2 = std::clamp(prop.x2, text.x2 + 0.5,
                             static_cast<double>(ann.image_width));
        prop.y2 = std::clamp(prop.y2, text.y2 + 0.5,
                             static_cast<double>(ann.image_height));

        ProposalPrediction pred;
        pred.box = prop;
        pred.text_rect = text;
        const PixelSpan sx = pixel_span(prop.x1, prop.x2);
        const PixelSpan sy = pixel_span(prop.y1, prop.y2);
        pred.pyr_h_local = ScalarMap(std::max(sx.count(), 1), std::max(sy.count(), 1));
        pred.pyr_v_local = ScalarMap(std::max(sx.count(), 1), std::max(sy.count(), 1));
        for (int y = sy.first; y < sy.last; ++y) {
            const double rv = ideal_ramp(y + 0.5, box.y1, box.y2, text.y_mid());
            for (int x = sx.first; x < sx.last; ++x) {
                const double rh = ideal_ramp(x + 0.5, box.x1, box.x2, text.x_mid());
                pred.pyr_h_local.at(x - sx.first, y - sy.first) =
                    static_cast<float>(std::clamp(rh + noise(), 0.0, 1.0));
                pred.pyr_v_local.at(x - sx.first, y - sy.first) =
                    static_cast<float>(std::clamp(rv + noise(), 0.0, 1.0));
            }
        }
        bundle.proposals.emplace_back(cell.id, std::move(pred));
    }

    if (config.seg_flip_rate > 0.0) {
        for (float& v : bundle.global.seg.values())
            if (rng.bernoulli(config.seg_flip_rate)) v = 1.0f - v;
    }
    return bundle;
}

}  // namespace tabrec
