#include "tabrec/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <tuple>

namespace tabrec {

namespace {

using Clique = std::vector<int>;  // node positions, sorted

// Bron-Kerbosch with pivoting over an adjacency-matrix graph.
void bron_kerbosch(const std::vector<std::vector<bool>>& adj, Clique& r,
                   std::vector<int> p, std::vector<int> x,
                   std::vector<Clique>& out) {
    if (p.empty() && x.empty()) {
        out.push_back(r);
        return;
    }
    // Pivot: vertex of P ∪ X with the most neighbours in P.
    int pivot = -1;
    size_t best = 0;
    for (const auto& cand : {p, x}) {
        for (int u : cand) {
            size_t cnt = 0;
            for (int v : p)
                if (adj[u][v]) ++cnt;
            if (pivot < 0 || cnt > best) {
                pivot = u;
                best = cnt;
            }
        }
    }
    std::vector<int> candidates;
    for (int v : p)
        if (pivot < 0 || !adj[pivot][v]) candidates.push_back(v);
    for (int v : candidates) {
        std::vector<int> p2, x2;
        for (int u : p)
            if (adj[v][u]) p2.push_back(u);
        for (int u : x)
            if (adj[v][u]) x2.push_back(u);
        r.push_back(v);
        bron_kerbosch(adj, r, std::move(p2), std::move(x2), out);
        r.pop_back();
        p.erase(std::find(p.begin(), p.end(), v));
        x.push_back(v);
    }
}

// Ranks the maximal cliques of one direction's graph and labels each node
// with the ranks of the cliques containing it.
std::map<int, std::set<int>> rank_cliques(const RelationGraph& graph,
                                          const EdgeSet& edges, bool by_y,
                                          int* count_out) {
    const size_t n = graph.nodes.size();
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    std::map<int, size_t> pos;
    for (size_t i = 0; i < n; ++i) pos[graph.nodes[i].first] = i;
    for (const auto& [a, b] : edges) {
        adj[pos.at(a)][pos.at(b)] = true;
        adj[pos.at(b)][pos.at(a)] = true;
    }
    std::vector<Clique> cliques;
    Clique r;
    std::vector<int> p(n), x;
    std::iota(p.begin(), p.end(), 0);
    bron_kerbosch(adj, r, std::move(p), x, cliques);

    struct Key {
        double primary;
        double secondary;
        int min_id;
        size_t clique;
    };
    std::vector<Key> keys;
    for (size_t c = 0; c < cliques.size(); ++c) {
        double my = 0.0, mx = 0.0;
        int min_id = INT32_MAX;
        for (int v : cliques[c]) {
            const Rect& rect = graph.nodes[v].second;
            my += rect.y_mid();
            mx += rect.x_mid();
            min_id = std::min(min_id, graph.nodes[v].first);
        }
        my /= static_cast<double>(cliques[c].size());
        mx /= static_cast<double>(cliques[c].size());
        keys.push_back(by_y ? Key{my, mx, min_id, c} : Key{mx, my, min_id, c});
    }
    std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
        if (a.primary != b.primary) return a.primary < b.primary;
        if (a.secondary != b.secondary) return a.secondary < b.secondary;
        return a.min_id < b.min_id;
    });

    std::map<int, std::set<int>> labels;
    for (const auto& [id, rect] : graph.nodes) labels[id];
    for (size_t rank = 0; rank < keys.size(); ++rank)
        for (int v : cliques[keys[rank].clique])
            labels[graph.nodes[v].first].insert(static_cast<int>(rank));
    for (const auto& [id, set] : labels) {
        if (set.empty())
            throw StructureError("non-contiguous-span",
                                 "node " + std::to_string(id) + " is in no clique");
        if (*set.rbegin() - *set.begin() + 1 != static_cast<int>(set.size()))
            throw StructureError("non-contiguous-span",
                                 "node " + std::to_string(id) +
                                     " spans a non-contiguous index range");
    }
    *count_out = static_cast<int>(cliques.size());
    return labels;
}

struct MergeGroup {
    int row_start, row_end, col_start, col_end;
};

}  // namespace

RelationGraph match_cells(const std::vector<std::pair<int, Rect>>& boxes) {
    if (boxes.empty())
        throw StructureError("empty", "no boxes to match");
    RelationGraph g;
    g.nodes = boxes;
    for (size_t i = 0; i < boxes.size(); ++i) {
        for (size_t j = i + 1; j < boxes.size(); ++j) {
            const Rect& a = boxes[i].second;
            const Rect& b = boxes[j].second;
            const bool horizontal = (b.y1 <= a.y_mid() && a.y_mid() <= b.y2) ||
                                    (a.y1 <= b.y_mid() && b.y_mid() <= a.y2);
            const bool vertical = (b.x1 <= a.x_mid() && a.x_mid() <= b.x2) ||
                                  (a.x1 <= b.x_mid() && b.x_mid() <= a.x2);
            if (horizontal) g.h_edges.insert(make_edge(boxes[i].first, boxes[j].first));
            if (vertical) g.v_edges.insert(make_edge(boxes[i].first, boxes[j].first));
        }
    }
    return g;
}

IndexAssignment assign_indices(const RelationGraph& graph) {
    IndexAssignment out;
    out.row_indices = rank_cliques(graph, graph.h_edges, /*by_y=*/true, &out.row_count);
    out.col_indices = rank_cliques(graph, graph.v_edges, /*by_y=*/false, &out.col_count);
    return out;
}

std::vector<EmptyCell> find_empty_cells(const RelationGraph& graph,
                                        const IndexAssignment& assign) {
    const int rows = assign.row_count;
    const int cols = assign.col_count;
    std::vector<bool> occupied(static_cast<size_t>(rows) * cols, false);
    for (const auto& [id, rset] : assign.row_indices) {
        const auto& cset = assign.col_indices.at(id);
        for (int r : rset)
            for (int c : cset) occupied[static_cast<size_t>(r) * cols + c] = true;
    }

    // Row/column extents from single-span nodes, as in aligned-box
    // derivation.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> row_top(rows, inf), row_bottom(rows, -inf);
    std::vector<double> col_left(cols, inf), col_right(cols, -inf);
    for (const auto& [id, rect] : graph.nodes) {
        const auto& rset = assign.row_indices.at(id);
        const auto& cset = assign.col_indices.at(id);
        if (rset.size() == 1) {
            const int r = *rset.begin();
            row_top[r] = std::min(row_top[r], rect.y1);
            row_bottom[r] = std::max(row_bottom[r], rect.y2);
        }
        if (cset.size() == 1) {
            const int c = *cset.begin();
            col_left[c] = std::min(col_left[c], rect.x1);
            col_right[c] = std::max(col_right[c], rect.x2);
        }
    }

    std::vector<EmptyCell> out;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (occupied[static_cast<size_t>(r) * cols + c]) continue;
            if (row_top[r] > row_bottom[r])
                throw StructureError("underdetermined-extent",
                                     "row " + std::to_string(r) +
                                         " has no single-row node");
            if (col_left[c] > col_right[c])
                throw StructureError("underdetermined-extent",
                                     "column " + std::to_string(c) +
                                         " has no single-column node");
            out.push_back({r, r, c, c,
                           Rect{col_left[c], row_top[r], col_right[c], row_bottom[r]}});
        }
    }
    return out;
}

double strip_foreground_ratio(const Rect& a, const Rect& b, const ScalarMap& seg) {
    // Gap between the rects spanning their shared extent on the other axis.
    Rect strip;
    if (a.x2 <= b.x1 || b.x2 <= a.x1) {  // horizontally separated
        strip = Rect{std::min(a.x2, b.x2), std::max(a.y1, b.y1),
                     std::max(a.x1, b.x1), std::min(a.y2, b.y2)};
    } else {
        strip = Rect{std::max(a.x1, b.x1), std::min(a.y2, b.y2),
                     std::min(a.x2, b.x2), std::max(a.y1, b.y1)};
    }
    const PixelSpan sx = pixel_span(strip.x1, std::min<double>(strip.x2, seg.width()));
    const PixelSpan sy = pixel_span(strip.y1, std::min<double>(strip.y2, seg.height()));
    long long total = 0, fg = 0;
    for (int y = sy.first; y < sy.last; ++y) {
        for (int x = sx.first; x < sx.last; ++x) {
            if (!seg.in_bounds(x, y)) continue;
            ++total;
            if (seg.at(x, y) >= 0.5f) ++fg;
        }
    }
    if (total == 0) return 1.0;  // touching or overlapping rects
    return static_cast<double>(fg) / static_cast<double>(total);
}

std::vector<EmptyCell> merge_empty_cells(const std::vector<EmptyCell>& vacancies,
                                         const ScalarMap& seg,
                                         double ratio_threshold) {
    if (ratio_threshold < 0.0 || ratio_threshold > 1.0)
        throw StructureError("bad-threshold", "merge ratio must be in [0,1]");
    std::map<std::pair<int, int>, size_t> by_pos;
    for (size_t i = 0; i < vacancies.size(); ++i) {
        const auto& v = vacancies[i];
        if (v.row_start != v.row_end || v.col_start != v.col_end)
            throw StructureError("bad-span", "vacancies must be 1x1 before merging");
        by_pos[{v.row_start, v.col_start}] = i;
    }

    // Merge links between grid-adjacent vacancy pairs, decided by pixel
    // voting on the strip between their rects.
    std::set<std::pair<size_t, size_t>> links;
    std::vector<std::pair<size_t, size_t>> ordered_links;  // row-major order
    for (const auto& [pos, i] : by_pos) {
        for (auto [dr, dc] : {std::pair{0, 1}, std::pair{1, 0}}) {
            auto it = by_pos.find({pos.first + dr, pos.second + dc});
            if (it == by_pos.end()) continue;
            const double ratio =
                strip_foreground_ratio(vacancies[i].rect, vacancies[it->second].rect, seg);
            if (ratio > ratio_threshold) {
                links.insert({i, it->second});
                links.insert({it->second, i});
                ordered_links.push_back({i, it->second});
            }
        }
    }

    // Greedy rectangular grouping: accept a link only when the union of
    // the two groups' footprints is a full rectangle of vacancies whose
    // internal adjacencies are all merge-linked.
    std::vector<int> group(vacancies.size());
    std::iota(group.begin(), group.end(), 0);
    std::vector<MergeGroup> bounds(vacancies.size());
    for (size_t i = 0; i < vacancies.size(); ++i)
        bounds[i] = {vacancies[i].row_start, vacancies[i].row_end,
                     vacancies[i].col_start, vacancies[i].col_end};

    auto rect_ok = [&](const MergeGroup& g, int ga, int gb) {
        for (int r = g.row_start; r <= g.row_end; ++r) {
            for (int c = g.col_start; c <= g.col_end; ++c) {
                auto it = by_pos.find({r, c});
                if (it == by_pos.end()) return false;
                const int owner = group[it->second];
                if (owner != ga && owner != gb) return false;
                // All internal adjacent pairs must be linked.
                for (auto [dr, dc] : {std::pair{0, 1}, std::pair{1, 0}}) {
                    if (r + dr > g.row_end || c + dc > g.col_end) continue;
                    auto jt = by_pos.find({r + dr, c + dc});
                    if (jt == by_pos.end()) return false;
                    if (!links.count({it->second, jt->second})) return false;
                }
            }
        }
        return true;
    };

    for (const auto& [i, j] : ordered_links) {
        const int gi = group[i];
        const int gj = group[j];
        if (gi == gj) continue;
        MergeGroup u{std::min(bounds[gi].row_start, bounds[gj].row_start),
                     std::max(bounds[gi].row_end, bounds[gj].row_end),
                     std::min(bounds[gi].col_start, bounds[gj].col_start),
                     std::max(bounds[gi].col_end, bounds[gj].col_end)};
        if (!rect_ok(u, gi, gj)) continue;
        for (size_t k = 0; k < vacancies.size(); ++k)
            if (group[k] == gj) group[k] = gi;
        bounds[gi] = u;
    }

    std::vector<EmptyCell> out;
    std::set<int> emitted;
    for (size_t i = 0; i < vacancies.size(); ++i) {
        const int g = group[i];
        if (!emitted.insert(g).second) continue;
        const MergeGroup& b = bounds[g];
        Rect rect = vacancies[i].rect;
        for (size_t k = 0; k < vacancies.size(); ++k) {
            if (group[k] != g) continue;
            rect.x1 = std::min(rect.x1, vacancies[k].rect.x1);
            rect.y1 = std::min(rect.y1, vacancies[k].rect.y1);
            rect.x2 = std::max(rect.x2, vacancies[k].rect.x2);
            rect.y2 = std::max(rect.y2, vacancies[k].rect.y2);
        }
        out.push_back({b.row_start, b.row_end, b.col_start, b.col_end, rect});
    }
    std::sort(out.begin(), out.end(), [](const EmptyCell& a, const EmptyCell& b) {
        return std::tie(a.row_start, a.col_start) < std::tie(b.row_start, b.col_start);
    });
    return out;
}

TableGrid recover(const std::vector<std::pair<int, Rect>>& boxes,
                  const ScalarMap& seg, const RecoverConfig& config) {
    RelationGraph graph = match_cells(boxes);
    IndexAssignment assign = assign_indices(graph);
    std::vector<EmptyCell> vacancies = find_empty_cells(graph, assign);
    std::vector<EmptyCell> empties = merge_empty_cells(vacancies, seg, config.merge_ratio);

    TableGrid grid;
    int max_id = -1;
    for (const auto& [id, rect] : graph.nodes) max_id = std::max(max_id, id);
    for (const auto& [id, rect] : graph.nodes) {
        const auto& rset = assign.row_indices.at(id);
        const auto& cset = assign.col_indices.at(id);
        grid.cells.push_back({id, rect, *rset.begin(), *rset.rbegin(), *cset.begin(),
                              *cset.rbegin(), false});
    }
    int next_id = max_id + 1;
    for (const auto& e : empties)
        grid.cells.push_back(
            {next_id++, e.rect, e.row_start, e.row_end, e.col_start, e.col_end, true});

    // Relation edges from the recovered grid indices: consecutive column
    // ranges with intersecting rows (and vice versa).
    for (size_t i = 0; i < grid.cells.size(); ++i) {
        for (size_t j = i + 1; j < grid.cells.size(); ++j) {
            const auto& a = grid.cells[i];
            const auto& b = grid.cells[j];
            const bool rows_meet = a.row_start <= b.row_end && b.row_start <= a.row_end;
            const bool cols_meet = a.col_start <= b.col_end && b.col_start <= a.col_end;
            if (rows_meet &&
                (a.col_end + 1 == b.col_start || b.col_end + 1 == a.col_start))
                grid.h_edges.insert(make_edge(a.id, b.id));
            if (cols_meet &&
                (a.row_end + 1 == b.row_start || b.row_end + 1 == a.row_start))
                grid.v_edges.insert(make_edge(a.id, b.id));
        }
    }

    auto violations = validate_grid(grid);
    if (!violations.empty())
        throw StructureError("invalid-grid", violations.front().rule + ": " +
                                                 violations.front().detail);
    return grid;
}

}  // namespace tabrec
