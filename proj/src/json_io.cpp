#include "tabrec/json_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <tuple>

namespace tabrec {

namespace {

using nlohmann::json;

void require_fields(const json& j, std::initializer_list<const char*> allowed,
                    std::initializer_list<const char*> required,
                    const std::string& where) {
    if (!j.is_object()) throw FormatError(where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) known = true;
        if (!known) throw FormatError(where + ": unknown field \"" + key + "\"");
    }
    for (const char* r : required)
        if (!j.contains(r))
            throw FormatError(where + ": missing field \"" + r + "\"");
}

json rect_to_json(const Rect& r) { return json::array({r.x1, r.y1, r.x2, r.y2}); }

Rect rect_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 4)
        throw FormatError(where + ": rect must be [x1,y1,x2,y2]");
    for (const auto& v : j)
        if (!v.is_number()) throw FormatError(where + ": rect entries must be numbers");
    return Rect{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                j[3].get<double>()};
}

std::pair<int, int> span_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() ||
        !j[1].is_number_integer())
        throw FormatError(where + ": span must be [start,end] integers");
    return {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

json annotation_to_json(const TableAnnotation& ann) {
    json cells = json::array();
    for (const auto& c : ann.cells) {
        json jc{{"id", c.id},
                {"row", json::array({c.row_start, c.row_end})},
                {"col", json::array({c.col_start, c.col_end})}};
        jc["text_rect"] = c.text_rect ? rect_to_json(*c.text_rect) : json(nullptr);
        cells.push_back(std::move(jc));
    }
    return json{{"image_width", ann.image_width},
                {"image_height", ann.image_height},
                {"cells", std::move(cells)}};
}

TableAnnotation annotation_from_json(const json& j) {
    require_fields(j, {"image_width", "image_height", "cells"},
                   {"image_width", "image_height", "cells"}, "annotation");
    if (!j["image_width"].is_number_integer() || !j["image_height"].is_number_integer())
        throw FormatError("annotation: image dimensions must be integers");
    TableAnnotation ann;
    ann.image_width = j["image_width"].get<int>();
    ann.image_height = j["image_height"].get<int>();
    if (!j["cells"].is_array()) throw FormatError("annotation: cells must be an array");
    for (const auto& jc : j["cells"]) {
        const std::string where = "annotation cell";
        require_fields(jc, {"id", "text_rect", "row", "col"},
                       {"id", "text_rect", "row", "col"}, where);
        CellAnnotation c;
        if (!jc["id"].is_number_integer())
            throw FormatError(where + ": id must be an integer");
        c.id = jc["id"].get<int>();
        if (!jc["text_rect"].is_null())
            c.text_rect = rect_from_json(jc["text_rect"], where);
        std::tie(c.row_start, c.row_end) = span_from_json(jc["row"], where);
        std::tie(c.col_start, c.col_end) = span_from_json(jc["col"], where);
        ann.cells.push_back(c);
    }
    return ann;
}

json grid_to_json(const TableGrid& grid) {
    json cells = json::array();
    for (const auto& c : grid.cells) {
        cells.push_back(json{{"id", c.id},
                             {"aligned_rect", rect_to_json(c.aligned_rect)},
                             {"row", json::array({c.row_start, c.row_end})},
                             {"col", json::array({c.col_start, c.col_end})},
                             {"is_empty", c.is_empty}});
    }
    json h = json::array(), v = json::array();
    for (const auto& [a, b] : grid.h_edges) h.push_back(json::array({a, b}));
    for (const auto& [a, b] : grid.v_edges) v.push_back(json::array({a, b}));
    return json{{"cells", std::move(cells)},
                {"h_edges", std::move(h)},
                {"v_edges", std::move(v)}};
}

TableGrid grid_from_json(const json& j) {
    require_fields(j, {"cells", "h_edges", "v_edges"},
                   {"cells", "h_edges", "v_edges"}, "grid");
    TableGrid grid;
    for (const auto& jc : j["cells"]) {
        const std::string where = "grid cell";
        require_fields(jc, {"id", "aligned_rect", "row", "col", "is_empty"},
                       {"id", "aligned_rect", "row", "col", "is_empty"}, where);
        GridCell c;
        c.id = jc["id"].get<int>();
        c.aligned_rect = rect_from_json(jc["aligned_rect"], where);
        std::tie(c.row_start, c.row_end) = span_from_json(jc["row"], where);
        std::tie(c.col_start, c.col_end) = span_from_json(jc["col"], where);
        if (!jc["is_empty"].is_boolean())
            throw FormatError(where + ": is_empty must be a boolean");
        c.is_empty = jc["is_empty"].get<bool>();
        grid.cells.push_back(c);
    }
    auto read_edges = [](const json& arr, EdgeSet& out, const char* which) {
        if (!arr.is_array()) throw FormatError(std::string(which) + " must be an array");
        for (const auto& e : arr) {
            if (!e.is_array() || e.size() != 2)
                throw FormatError(std::string(which) + ": edges must be id pairs");
            out.insert(make_edge(e[0].get<int>(), e[1].get<int>()));
        }
    };
    read_edges(j["h_edges"], grid.h_edges, "h_edges");
    read_edges(j["v_edges"], grid.v_edges, "v_edges");
    return grid;
}

std::string grid_to_html(const TableGrid& grid) {
    const int rows = grid.row_count();
    std::ostringstream os;
    os << "<table border=\"1\">\n";
    std::vector<std::vector<const GridCell*>> by_row(rows);
    for (const auto& c : grid.cells) by_row[c.row_start].push_back(&c);
    for (auto& row : by_row)
        std::sort(row.begin(), row.end(), [](const GridCell* a, const GridCell* b) {
            return a->col_start < b->col_start;
        });
    for (int r = 0; r < rows; ++r) {
        os << "  <tr>";
        for (const GridCell* c : by_row[r]) {
            os << "<td";
            if (c->row_end > c->row_start)
                os << " rowspan=\"" << (c->row_end - c->row_start + 1) << "\"";
            if (c->col_end > c->col_start)
                os << " colspan=\"" << (c->col_end - c->col_start + 1) << "\"";
            os << "></td>";
        }
        os << "</tr>\n";
    }
    os << "</table>\n";
    return os.str();
}

void save_bundle(const PredictionBundle& bundle,
                 const std::filesystem::path& json_path) {
    const auto dir = json_path.parent_path();
    json proposals = json::array();
    for (size_t i = 0; i < bundle.proposals.size(); ++i) {
        const auto& [id, pred] = bundle.proposals[i];
        const std::string stem = "proposal_" + std::to_string(id);
        pred.pyr_h_local.save(dir / (stem + "_h.tgmap"));
        pred.pyr_v_local.save(dir / (stem + "_v.tgmap"));
        proposals.push_back(json{{"id", id},
                                 {"box", rect_to_json(pred.box)},
                                 {"text_rect", rect_to_json(pred.text_rect)},
                                 {"pyr_h", stem + "_h.tgmap"},
                                 {"pyr_v", stem + "_v.tgmap"}});
    }
    bundle.global.seg.save(dir / "global_seg.tgmap");
    bundle.global.pyr_h_global.save(dir / "global_h.tgmap");
    bundle.global.pyr_v_global.save(dir / "global_v.tgmap");
    json j{{"proposals", std::move(proposals)},
           {"global", json{{"seg", "global_seg.tgmap"},
                           {"pyr_h", "global_h.tgmap"},
                           {"pyr_v", "global_v.tgmap"}}}};
    save_json_file(j, json_path);
}

PredictionBundle load_bundle(const std::filesystem::path& json_path) {
    const json j = load_json_file(json_path);
    require_fields(j, {"proposals", "global"}, {"proposals", "global"}, "bundle");
    const auto dir = json_path.parent_path();
    PredictionBundle bundle;
    for (const auto& jp : j["proposals"]) {
        require_fields(jp, {"id", "box", "text_rect", "pyr_h", "pyr_v"},
                       {"id", "box", "text_rect", "pyr_h", "pyr_v"}, "proposal");
        ProposalPrediction pred;
        pred.box = rect_from_json(jp["box"], "proposal");
        pred.text_rect = rect_from_json(jp["text_rect"], "proposal");
        pred.pyr_h_local = ScalarMap::load(dir / jp["pyr_h"].get<std::string>());
        pred.pyr_v_local = ScalarMap::load(dir / jp["pyr_v"].get<std::string>());
        bundle.proposals.emplace_back(jp["id"].get<int>(), std::move(pred));
    }
    const json& jg = j["global"];
    require_fields(jg, {"seg", "pyr_h", "pyr_v"}, {"seg", "pyr_h", "pyr_v"}, "global");
    bundle.global.seg = ScalarMap::load(dir / jg["seg"].get<std::string>());
    bundle.global.pyr_h_global = ScalarMap::load(dir / jg["pyr_h"].get<std::string>());
    bundle.global.pyr_v_global = ScalarMap::load(dir / jg["pyr_v"].get<std::string>());
    return bundle;
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open: " + path.string());
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw FormatError("bad JSON in " + path.string() + ": " + e.what());
    }
    return j;
}

void save_text_file(const std::string& text, const std::filesystem::path& path) {
    const auto tmp = path.parent_path() / (path.filename().string() + ".tmp");
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw FormatError("cannot open for writing: " + tmp.string());
        os << text;
        if (!os) throw FormatError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void save_json_file(const json& j, const std::filesystem::path& path) {
    save_text_file(j.dump(2) + "\n", path);
}

}  // namespace tabrec
