#include "tabrec/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

namespace tabrec {

double RelationScore::precision() const {
    if (predicted == 0) return 1.0;  // no false positives
    return static_cast<double>(correct) / static_cast<double>(predicted);
}

double RelationScore::recall() const {
    if (ground_truth == 0) return 1.0;
    return static_cast<double>(correct) / static_cast<double>(ground_truth);
}

double RelationScore::f1() const {
    const double p = precision();
    const double r = recall();
    if (p + r == 0.0) return 0.0;
    return 2.0 * p * r / (p + r);
}

RelationScore operator+(const RelationScore& a, const RelationScore& b) {
    return {a.correct + b.correct, a.predicted + b.predicted,
            a.ground_truth + b.ground_truth};
}

namespace {

// direction: 0 horizontal, 1 vertical
using Relation = std::tuple<int, int, int>;

std::set<Relation> nonempty_relations(const EdgeSet& h, const EdgeSet& v,
                                      const std::set<int>& nonempty) {
    std::set<Relation> out;
    for (const auto& [a, b] : h)
        if (nonempty.count(a) && nonempty.count(b)) out.insert({a, b, 0});
    for (const auto& [a, b] : v)
        if (nonempty.count(a) && nonempty.count(b)) out.insert({a, b, 1});
    return out;
}

}  // namespace

RelationScore relation_score(const TableGrid& pred, const TableAnnotation& gt,
                             double iou_threshold) {
    if (iou_threshold <= 0.0 || iou_threshold > 1.0)
        throw StructureError("bad-threshold", "IoU threshold must be in (0,1]");
    auto violations = validate_grid(pred);
    if (!violations.empty())
        throw StructureError("invalid-grid", violations.front().detail);
    const auto gt_aligned = derive_aligned_boxes(gt);
    const auto [gt_h, gt_v] = relations_from_annotation(gt);

    std::set<int> gt_nonempty, pred_nonempty;
    for (const auto& c : gt.cells)
        if (!c.is_empty()) gt_nonempty.insert(c.id);
    for (const auto& c : pred.cells)
        if (!c.is_empty) pred_nonempty.insert(c.id);

    // Greedy 1-to-1 matching by descending IoU.
    struct Candidate {
        double iou;
        int pred_id;
        int gt_id;
    };
    std::vector<Candidate> candidates;
    for (const auto& pc : pred.cells) {
        if (pc.is_empty) continue;
        for (int gid : gt_nonempty) {
            const double v = iou(pc.aligned_rect, gt_aligned.at(gid));
            if (v >= iou_threshold) candidates.push_back({v, pc.id, gid});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a,
                                                       const Candidate& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        return std::tie(a.pred_id, a.gt_id) < std::tie(b.pred_id, b.gt_id);
    });
    std::map<int, int> pred_to_gt;
    std::set<int> used_gt;
    for (const auto& c : candidates) {
        if (pred_to_gt.count(c.pred_id) || used_gt.count(c.gt_id)) continue;
        pred_to_gt[c.pred_id] = c.gt_id;
        used_gt.insert(c.gt_id);
    }

    const auto gt_rel = nonempty_relations(gt_h, gt_v, gt_nonempty);
    const auto pred_rel = nonempty_relations(pred.h_edges, pred.v_edges, pred_nonempty);

    RelationScore score;
    score.predicted = static_cast<long long>(pred_rel.size());
    score.ground_truth = static_cast<long long>(gt_rel.size());
    for (const auto& [a, b, dir] : pred_rel) {
        auto ia = pred_to_gt.find(a);
        auto ib = pred_to_gt.find(b);
        if (ia == pred_to_gt.end() || ib == pred_to_gt.end()) continue;
        IdPair mapped = make_edge(ia->second, ib->second);
        if (gt_rel.count({mapped.first, mapped.second, dir})) ++score.correct;
    }
    return score;
}

int StructNode::size() const {
    int n = 1;
    for (const auto& c : children) n += c.size();
    return n;
}

namespace {

template <typename Cell>
StructNode build_tree(const std::vector<Cell>& cells, int rows) {
    StructNode root{"table"};
    root.children.resize(rows, StructNode{"tr"});
    std::vector<const Cell*> sorted;
    for (const auto& c : cells) sorted.push_back(&c);
    std::sort(sorted.begin(), sorted.end(), [](const Cell* a, const Cell* b) {
        return std::tie(a->row_start, a->col_start) <
               std::tie(b->row_start, b->col_start);
    });
    for (const Cell* c : sorted) {
        StructNode td{"td", c->row_end - c->row_start + 1,
                      c->col_end - c->col_start + 1};
        root.children[c->row_start].children.push_back(std::move(td));
    }
    return root;
}

// Zhang-Shasha ordered tree edit distance with unit costs.
struct FlatTree {
    std::vector<const StructNode*> post;  // postorder
    std::vector<int> lml;                 // leftmost leaf, postorder index
    std::vector<int> keyroots;
};

void flatten(const StructNode& n, FlatTree& t, int& my_index) {
    int first_child_leftmost = -1;
    for (const auto& c : n.children) {
        int child_index = -1;
        flatten(c, t, child_index);
        if (first_child_leftmost == -1) first_child_leftmost = t.lml[child_index];
    }
    my_index = static_cast<int>(t.post.size());
    t.post.push_back(&n);
    t.lml.push_back(first_child_leftmost == -1 ? my_index : first_child_leftmost);
}

FlatTree flatten(const StructNode& root) {
    FlatTree t;
    int idx = -1;
    flatten(root, t, idx);
    const int n = static_cast<int>(t.post.size());
    std::vector<bool> is_keyroot(n, true);
    for (int i = 0; i < n; ++i) {
        // i is a keyroot iff no proper ancestor shares its leftmost leaf;
        // equivalently, it is not the leftmost child path of a later node.
        for (int j = i + 1; j < n; ++j) {
            if (t.lml[j] == t.lml[i]) {
                is_keyroot[i] = false;
                break;
            }
        }
    }
    for (int i = 0; i < n; ++i)
        if (is_keyroot[i]) t.keyroots.push_back(i);
    return t;
}

}  // namespace

int tree_edit_distance(const StructNode& a, const StructNode& b) {
    const FlatTree ta = flatten(a);
    const FlatTree tb = flatten(b);
    const int na = static_cast<int>(ta.post.size());
    const int nb = static_cast<int>(tb.post.size());
    std::vector<std::vector<int>> tree_dist(na, std::vector<int>(nb, 0));

    std::vector<std::vector<int>> fd(na + 1, std::vector<int>(nb + 1, 0));
    for (int ki : ta.keyroots) {
        for (int kj : tb.keyroots) {
            const int li = ta.lml[ki];
            const int lj = tb.lml[kj];
            fd[li][lj] = 0;
            for (int i = li; i <= ki; ++i) fd[i + 1][lj] = fd[i][lj] + 1;
            for (int j = lj; j <= kj; ++j) fd[li][j + 1] = fd[li][j] + 1;
            for (int i = li; i <= ki; ++i) {
                for (int j = lj; j <= kj; ++j) {
                    if (ta.lml[i] == li && tb.lml[j] == lj) {
                        const int sub =
                            ta.post[i]->label_equals(*tb.post[j]) ? 0 : 1;
                        fd[i + 1][j + 1] = std::min({fd[i][j + 1] + 1,
                                                     fd[i + 1][j] + 1,
                                                     fd[i][j] + sub});
                        tree_dist[i][j] = fd[i + 1][j + 1];
                    } else {
                        fd[i + 1][j + 1] =
                            std::min({fd[i][j + 1] + 1, fd[i + 1][j] + 1,
                                      fd[ta.lml[i]][tb.lml[j]] + tree_dist[i][j]});
                    }
                }
            }
        }
    }
    return tree_dist[na - 1][nb - 1];
}

StructNode struct_tree(const TableGrid& grid) {
    auto violations = validate_grid(grid);
    if (!violations.empty())
        throw StructureError("invalid-grid", violations.front().detail);
    return build_tree(grid.cells, grid.row_count());
}

StructNode struct_tree(const TableAnnotation& ann) {
    ann.validate();
    return build_tree(ann.cells, ann.row_count());
}

double teds_struct(const StructNode& pred, const StructNode& gt) {
    const int ted = tree_edit_distance(pred, gt);
    const int denom = std::max(pred.size(), gt.size());
    // TED can exceed the larger tree size for dissimilar shapes; the
    // similarity floors at 0.
    return std::max(0.0, 1.0 - static_cast<double>(ted) / static_cast<double>(denom));
}

double teds_struct(const TableGrid& pred, const TableAnnotation& gt) {
    return teds_struct(struct_tree(pred), struct_tree(gt));
}

bool structure_equal(const TableGrid& grid, const TableAnnotation& ann) {
    using Footprint = std::tuple<int, int, int, int, bool>;
    std::multiset<Footprint> a, b;
    for (const auto& c : grid.cells)
        a.insert({c.row_start, c.row_end, c.col_start, c.col_end, c.is_empty});
    for (const auto& c : ann.cells)
        b.insert({c.row_start, c.row_end, c.col_start, c.col_end, c.is_empty()});
    return a == b;
}

}  // namespace tabrec
