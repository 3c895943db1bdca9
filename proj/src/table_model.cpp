#include "tabrec/table_model.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace tabrec {

namespace {

template <typename Cell>
int max_row(const std::vector<Cell>& cells) {
    int r = -1;
    for (const auto& c : cells) r = std::max(r, c.row_end);
    return r + 1;
}

template <typename Cell>
int max_col(const std::vector<Cell>& cells) {
    int c = -1;
    for (const auto& cell : cells) c = std::max(c, cell.col_end);
    return c + 1;
}

// Occupancy scan shared by annotation validation and grid validation.
template <typename Cell>
std::vector<GridViolation> check_tiling(const std::vector<Cell>& cells) {
    std::vector<GridViolation> out;
    const int rows = max_row(cells);
    const int cols = max_col(cells);
    if (rows <= 0 || cols <= 0) {
        out.push_back({"empty", {}, "table has no cells"});
        return out;
    }
    std::vector<int> owner(static_cast<size_t>(rows) * cols, -1);
    for (const auto& c : cells) {
        if (c.row_start > c.row_end || c.col_start > c.col_end ||
            c.row_start < 0 || c.col_start < 0) {
            out.push_back({"bad-span", {c.id},
                           "inverted or negative span on cell " + std::to_string(c.id)});
            continue;
        }
        for (int r = c.row_start; r <= c.row_end; ++r) {
            for (int k = c.col_start; k <= c.col_end; ++k) {
                int& slot = owner[static_cast<size_t>(r) * cols + k];
                if (slot != -1) {
                    out.push_back({"overlap",
                                   {slot, c.id},
                                   "cells " + std::to_string(slot) + " and " +
                                       std::to_string(c.id) + " both claim (" +
                                       std::to_string(r) + "," + std::to_string(k) + ")"});
                } else {
                    slot = c.id;
                }
            }
        }
    }
    for (int r = 0; r < rows; ++r)
        for (int k = 0; k < cols; ++k)
            if (owner[static_cast<size_t>(r) * cols + k] == -1)
                out.push_back({"hole", {},
                               "no cell covers (" + std::to_string(r) + "," +
                                   std::to_string(k) + ")"});
    return out;
}

}  // namespace

int TableAnnotation::row_count() const { return max_row(cells); }
int TableAnnotation::col_count() const { return max_col(cells); }
int TableGrid::row_count() const { return max_row(cells); }
int TableGrid::col_count() const { return max_col(cells); }

void TableAnnotation::validate() const {
    if (image_width <= 0 || image_height <= 0)
        throw StructureError("bad-image-size", "image dimensions must be positive");
    std::set<int> ids;
    for (const auto& c : cells) {
        if (!ids.insert(c.id).second)
            throw StructureError("duplicate-id", "cell id " + std::to_string(c.id));
        if (c.text_rect && !c.text_rect->valid())
            throw StructureError("bad-rect",
                                 "invalid text rect on cell " + std::to_string(c.id));
    }
    auto violations = check_tiling(cells);
    if (!violations.empty())
        throw StructureError(violations.front().rule, violations.front().detail);
}

std::map<int, Rect> derive_aligned_boxes(const TableAnnotation& ann) {
    ann.validate();
    const int rows = ann.row_count();
    const int cols = ann.col_count();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> row_top(rows, inf), row_bottom(rows, -inf);
    std::vector<double> col_left(cols, inf), col_right(cols, -inf);

    // Extents come only from cells spanning exactly one row/column in the
    // respective axis; multi-span cells would make the rule circular.
    for (const auto& c : ann.cells) {
        if (c.is_empty()) continue;
        const Rect& t = *c.text_rect;
        if (c.single_row()) {
            row_top[c.row_start] = std::min(row_top[c.row_start], t.y1);
            row_bottom[c.row_start] = std::max(row_bottom[c.row_start], t.y2);
        }
        if (c.single_col()) {
            col_left[c.col_start] = std::min(col_left[c.col_start], t.x1);
            col_right[c.col_start] = std::max(col_right[c.col_start], t.x2);
        }
    }
    for (int r = 0; r < rows; ++r)
        if (row_top[r] > row_bottom[r])
            throw StructureError("underdetermined-extent",
                                 "row " + std::to_string(r) +
                                     " has no single-row non-empty cell");
    for (int k = 0; k < cols; ++k)
        if (col_left[k] > col_right[k])
            throw StructureError("underdetermined-extent",
                                 "column " + std::to_string(k) +
                                     " has no single-column non-empty cell");

    std::map<int, Rect> out;
    for (const auto& c : ann.cells) {
        out[c.id] = Rect{col_left[c.col_start], row_top[c.row_start],
                         col_right[c.col_end], row_bottom[c.row_end]};
    }
    return out;
}

std::pair<EdgeSet, EdgeSet> relations_from_annotation(const TableAnnotation& ann) {
    ann.validate();
    EdgeSet h, v;
    for (size_t i = 0; i < ann.cells.size(); ++i) {
        for (size_t j = i + 1; j < ann.cells.size(); ++j) {
            const auto& a = ann.cells[i];
            const auto& b = ann.cells[j];
            const bool rows_meet = a.row_start <= b.row_end && b.row_start <= a.row_end;
            const bool cols_meet = a.col_start <= b.col_end && b.col_start <= a.col_end;
            if (rows_meet &&
                (a.col_end + 1 == b.col_start || b.col_end + 1 == a.col_start))
                h.insert(make_edge(a.id, b.id));
            if (cols_meet &&
                (a.row_end + 1 == b.row_start || b.row_end + 1 == a.row_start))
                v.insert(make_edge(a.id, b.id));
        }
    }
    return {h, v};
}

std::vector<GridViolation> validate_grid(const TableGrid& grid) {
    std::vector<GridViolation> out = check_tiling(grid.cells);
    std::set<int> ids;
    for (const auto& c : grid.cells) {
        if (!ids.insert(c.id).second)
            out.push_back({"duplicate-id", {c.id}, "duplicate cell id"});
        if (!c.aligned_rect.valid())
            out.push_back({"bad-rect", {c.id}, "invalid aligned rect"});
    }
    auto check_edges = [&](const EdgeSet& edges, const char* which) {
        for (const auto& [a, b] : edges) {
            if (a == b)
                out.push_back({"bad-edge", {a}, std::string(which) + " self-edge"});
            else if (!ids.count(a) || !ids.count(b))
                out.push_back({"bad-edge", {a, b},
                               std::string(which) + " edge references unknown id"});
        }
    };
    check_edges(grid.h_edges, "horizontal");
    check_edges(grid.v_edges, "vertical");
    return out;
}

}  // namespace tabrec
