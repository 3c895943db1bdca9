#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tabrec/geometry.hpp"

namespace tabrec {

using IdPair = std::pair<int, int>;  // canonical: first < second
using EdgeSet = std::set<IdPair>;

inline IdPair make_edge(int a, int b) {
    return a < b ? IdPair{a, b} : IdPair{b, a};
}

// One annotated cell. Grid indices are inclusive; empty cells carry no
// text rect.
struct CellAnnotation {
    int id = 0;
    std::optional<Rect> text_rect;
    int row_start = 0;
    int row_end = 0;
    int col_start = 0;
    int col_end = 0;

    bool is_empty() const { return !text_rect.has_value(); }
    bool single_row() const { return row_start == row_end; }
    bool single_col() const { return col_start == col_end; }
};

struct TableAnnotation {
    int image_width = 0;
    int image_height = 0;
    std::vector<CellAnnotation> cells;

    int row_count() const;
    int col_count() const;

    // Throws StructureError if ids collide, spans are inverted, the grid
    // footprints fail to tile a full rectangle, or a text rect is invalid.
    void validate() const;
};

// Recovered logical structure.
struct GridCell {
    int id = 0;
    Rect aligned_rect;
    int row_start = 0;
    int row_end = 0;
    int col_start = 0;
    int col_end = 0;
    bool is_empty = false;
};

struct TableGrid {
    std::vector<GridCell> cells;
    EdgeSet h_edges;
    EdgeSet v_edges;

    int row_count() const;
    int col_count() const;
};

// Aligned bounding boxes from text rects: row extent = min y1 / max y2 of
// single-row non-empty cells in the row, columns analogous; multi-span
// cells take the union of the rows/columns they cover. Empty cells
// inherit their row/column extents.
std::map<int, Rect> derive_aligned_boxes(const TableAnnotation& ann);

// Ground-truth adjacency: horizontal iff row ranges intersect and column
// ranges are consecutive; vertical analogous.
std::pair<EdgeSet, EdgeSet> relations_from_annotation(const TableAnnotation& ann);

struct GridViolation {
    std::string rule;       // "overlap", "hole", "bad-span", "bad-edge", ...
    std::vector<int> ids;
    std::string detail;
};

std::vector<GridViolation> validate_grid(const TableGrid& grid);

}  // namespace tabrec
