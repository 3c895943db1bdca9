#pragma once

#include <map>
#include <set>
#include <vector>

#include "tabrec/scalar_map.hpp"
#include "tabrec/table_model.hpp"

namespace tabrec {

struct RelationGraph {
    std::vector<std::pair<int, Rect>> nodes;
    EdgeSet h_edges;
    EdgeSet v_edges;
};

// Per node: the set of row/column indices it spans. Sets are nonempty and
// contiguous once assign_indices succeeds.
struct IndexAssignment {
    std::map<int, std::set<int>> row_indices;
    std::map<int, std::set<int>> col_indices;
    int row_count = 0;
    int col_count = 0;
};

struct EmptyCell {
    int row_start = 0;
    int row_end = 0;
    int col_start = 0;
    int col_end = 0;
    Rect rect;
};

struct RecoverConfig {
    double merge_ratio = 0.5;  // strip foreground ratio above which to merge
};

// Midpoint-containment adjacency: boxes are horizontally connected iff
// either box's y-midline falls inside the other's y-range; vertical is
// the x analogue. A pair may be connected both ways.
RelationGraph match_cells(const std::vector<std::pair<int, Rect>>& boxes);

// Rows = maximal cliques of the horizontal graph sorted by mean y-center
// (ties: mean x-center, then smallest member id); columns analogous on
// the vertical graph. Throws "non-contiguous-span" when a node's clique
// ranks do not form a contiguous range.
IndexAssignment assign_indices(const RelationGraph& graph);

// Grid positions covered by no node, as 1x1 empty cells sized to their
// row/column extents. Throws "underdetermined-extent" when a row/column
// has no single-span node to define its extent.
std::vector<EmptyCell> find_empty_cells(const RelationGraph& graph,
                                        const IndexAssignment& assign);

// Pixel voting on the strips between grid-adjacent empty cells, then
// greedy rectangular grouping of the merge links.
std::vector<EmptyCell> merge_empty_cells(const std::vector<EmptyCell>& vacancies,
                                         const ScalarMap& seg,
                                         double ratio_threshold);

// Foreground ratio of the strip between two empty-cell rects; zero-area
// strips (touching rects) count as 1.
double strip_foreground_ratio(const Rect& a, const Rect& b, const ScalarMap& seg);

// Full pipeline: match -> assign -> search empties -> merge; the result
// always passes validate_grid or a StructureError is thrown.
TableGrid recover(const std::vector<std::pair<int, Rect>>& boxes,
                  const ScalarMap& seg, const RecoverConfig& config = {});

}  // namespace tabrec
