#pragma once

#include <string>
#include <vector>

#include "tabrec/table_model.hpp"

namespace tabrec {

// Micro-averagable relation counts plus the derived scores.
struct RelationScore {
    long long correct = 0;
    long long predicted = 0;
    long long ground_truth = 0;

    double precision() const;
    double recall() const;
    double f1() const;
};

RelationScore operator+(const RelationScore& a, const RelationScore& b);

// Neighbor-relation scoring: predicted non-empty cells are greedily
// matched 1-to-1 to GT cells by descending aligned-rect IoU (>= the
// threshold); relations between matched cells are compared against the GT
// adjacency set. Empty cells do not participate.
RelationScore relation_score(const TableGrid& pred, const TableAnnotation& gt,
                             double iou_threshold = 0.5);

// Rooted ordered structure tree: table -> row nodes -> cell nodes with
// rowspan/colspan attributes, cells attached to their starting row.
struct StructNode {
    std::string tag;  // "table", "tr", "td"
    int rowspan = 1;
    int colspan = 1;
    std::vector<StructNode> children;

    int size() const;
    bool label_equals(const StructNode& o) const {
        return tag == o.tag && rowspan == o.rowspan && colspan == o.colspan;
    }
};

StructNode struct_tree(const TableGrid& grid);
StructNode struct_tree(const TableAnnotation& ann);

// Ordered tree edit distance, unit insert/delete, substitution cost 1 iff
// the labels differ (Zhang-Shasha).
int tree_edit_distance(const StructNode& a, const StructNode& b);

// TEDS on structure trees: 1 - TED / max(|T_pred|, |T_gt|).
double teds_struct(const TableGrid& pred, const TableAnnotation& gt);
double teds_struct(const StructNode& pred, const StructNode& gt);

// Structural equality of a recovered grid against an annotation: same
// grid footprints with matching empty flags (ids ignored).
bool structure_equal(const TableGrid& grid, const TableAnnotation& ann);

}  // namespace tabrec
