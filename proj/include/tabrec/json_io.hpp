#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "tabrec/refine.hpp"
#include "tabrec/table_model.hpp"

namespace tabrec {

// Annotation schema:
// { "image_width": int, "image_height": int,
//   "cells": [ { "id": int, "text_rect": [x1,y1,x2,y2] | null,
//                "row": [start,end], "col": [start,end] } ] }
// Unknown fields are rejected.
nlohmann::json annotation_to_json(const TableAnnotation& ann);
TableAnnotation annotation_from_json(const nlohmann::json& j);

nlohmann::json grid_to_json(const TableGrid& grid);
TableGrid grid_from_json(const nlohmann::json& j);

// Structure-only HTML rendering of a grid (empty <td> content).
std::string grid_to_html(const TableGrid& grid);

// Prediction bundle referencing ScalarMap files by path relative to the
// bundle file's directory:
// { "proposals": [ { "id": int, "box": [...], "text_rect": [...],
//                    "pyr_h": "path", "pyr_v": "path" } ],
//   "global": { "seg": "path", "pyr_h": "path", "pyr_v": "path" } }
struct PredictionBundle {
    std::vector<std::pair<int, ProposalPrediction>> proposals;  // id -> prediction
    GlobalPrediction global;
};

void save_bundle(const PredictionBundle& bundle, const std::filesystem::path& json_path);
PredictionBundle load_bundle(const std::filesystem::path& json_path);

nlohmann::json load_json_file(const std::filesystem::path& path);
// Atomic write: temp file in the same directory, then rename.
void save_json_file(const nlohmann::json& j, const std::filesystem::path& path);
void save_text_file(const std::string& text, const std::filesystem::path& path);

}  // namespace tabrec
