#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tabrec/errors.hpp"
#include "tabrec/json_io.hpp"
#include "tabrec/mask_targets.hpp"
#include "tabrec/metrics.hpp"
#include "tabrec/recovery.hpp"
#include "tabrec/refine.hpp"
#include "tabrec/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tabrec;

namespace {

constexpr int kExitFormat = 1;
constexpr int kExitStructure = 2;

struct CommonOpts {
    std::string input;
    std::string output;
    double seg_threshold = 0.5;
    double merge_ratio = 0.5;
    double iou = 0.5;
    int iterations = 1;
    int jobs = 1;
    std::string format = "json";
};

std::string table_name(int index, int total) {
    int width = 3;
    for (int n = total - 1; n >= 1000; n /= 10) ++width;
    std::string s = std::to_string(index);
    if (static_cast<int>(s.size()) < width)
        s.insert(0, width - s.size(), '0');
    return s;
}

std::vector<std::string> read_manifest(const fs::path& corpus) {
    json m = load_json_file(corpus / "manifest.json");
    if (!m.contains("tables") || !m["tables"].is_array())
        throw FormatError("manifest.json: missing \"tables\" array");
    std::vector<std::string> names;
    for (const auto& t : m["tables"]) {
        if (!t.contains("name"))
            throw FormatError("manifest.json: table entry without \"name\"");
        names.push_back(t["name"].get<std::string>());
    }
    return names;
}

// Run body(i) over [0, n) on `jobs` workers; rethrows the first failure.
void parallel_for(int n, int jobs, const std::function<void(int)>& body) {
    if (jobs <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex mu;
    std::exception_ptr failure;
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (failure) return;
            }
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

// Run reports deliberately omit paths so a pipeline stage and the same
// stage run manually produce byte-identical output trees.
void write_report(const fs::path& dir, const std::string& command, json config,
                  int documents) {
    json report;
    report["command"] = command;
    report["config"] = std::move(config);
    report["documents"] = documents;
    save_json_file(report, dir / "run_report.json");
}

json synth_config_json(const SynthConfig& c) {
    return json{{"rows", {c.rows_min, c.rows_max}},
                {"cols", {c.cols_min, c.cols_max}},
                {"span_prob", c.span_prob},
                {"empty_prob", c.empty_prob},
                {"cell_w", {c.cell_w_min, c.cell_w_max}},
                {"cell_h", {c.cell_h_min, c.cell_h_max}},
                {"inset", {c.inset_min, c.inset_max}},
                {"margin", c.margin},
                {"box_jitter", c.box_jitter},
                {"pyramid_noise", c.pyramid_noise},
                {"seg_flip_rate", c.seg_flip_rate}};
}

// Seed stream for the corruption pass, decorrelated from generation.
uint64_t corrupt_seed(uint64_t table_seed) {
    return table_seed * 0x9e3779b97f4a7c15ull + 0x517cc1b727220a95ull;
}

int cmd_synth(const CommonOpts& opts, const SynthConfig& cfg, int n, uint64_t seed) {
    cfg.validate();
    const fs::path out(opts.output);
    fs::create_directories(out / "tables");

    json manifest;
    manifest["seed"] = seed;
    manifest["count"] = n;
    manifest["config"] = synth_config_json(cfg);
    manifest["tables"] = json::array();
    for (int i = 0; i < n; ++i)
        manifest["tables"].push_back(
            {{"name", table_name(i, n)}, {"seed", seed + static_cast<uint64_t>(i)}});

    parallel_for(n, opts.jobs, [&](int i) {
        const uint64_t table_seed = seed + static_cast<uint64_t>(i);
        const fs::path dir = out / "tables" / table_name(i, n);
        fs::create_directories(dir);
        TableAnnotation ann = generate_table(cfg, table_seed);
        save_json_file(annotation_to_json(ann), dir / "annotation.json");
        auto aligned = derive_aligned_boxes(ann);
        PredictionBundle bundle =
            corrupt_predictions(ann, aligned, cfg, corrupt_seed(table_seed));
        save_bundle(bundle, dir / "bundle.json");
    });

    save_json_file(manifest, out / "manifest.json");
    json rc = synth_config_json(cfg);
    rc["n"] = n;
    rc["seed"] = seed;
    write_report(out, "synth", rc, n);
    return 0;
}

int cmd_targets(const CommonOpts& opts) {
    const fs::path in(opts.input), out(opts.output);
    const std::vector<std::string> names = read_manifest(in);
    parallel_for(static_cast<int>(names.size()), opts.jobs, [&](int i) {
        const fs::path src = in / "tables" / names[i];
        const fs::path dst = out / "tables" / names[i];
        fs::create_directories(dst);
        TableAnnotation ann = annotation_from_json(load_json_file(src / "annotation.json"));
        auto aligned = derive_aligned_boxes(ann);
        GlobalTarget global = gpma_targets(ann, aligned);
        global.seg.save(dst / "global_seg.tgmap");
        global.pyr_h.save(dst / "global_pyr_h.tgmap");
        global.pyr_v.save(dst / "global_pyr_v.tgmap");
        for (const CellAnnotation& cell : ann.cells) {
            if (cell.is_empty()) continue;
            LocalTarget local = lpma_targets(aligned.at(cell.id), *cell.text_rect);
            const std::string stem = "local_" + std::to_string(cell.id);
            local.mask.save(dst / (stem + "_mask.tgmap"));
            local.pyr_h.save(dst / (stem + "_pyr_h.tgmap"));
            local.pyr_v.save(dst / (stem + "_pyr_v.tgmap"));
        }
    });
    write_report(out, "targets", json::object(), static_cast<int>(names.size()));
    return 0;
}

const char* side_name(SideStatus s) {
    switch (s) {
        case SideStatus::kRefined: return "refined";
        case SideStatus::kDegenerate: return "degenerate";
        case SideStatus::kNoPixels: return "no-pixels";
    }
    return "unknown";
}

int cmd_refine(const CommonOpts& opts) {
    const fs::path in(opts.input), out(opts.output);
    const std::vector<std::string> names = read_manifest(in);
    RefineConfig cfg;
    cfg.seg_threshold = opts.seg_threshold;
    cfg.iterations = opts.iterations;

    parallel_for(static_cast<int>(names.size()), opts.jobs, [&](int i) {
        const fs::path src = in / "tables" / names[i];
        const fs::path dst = out / "tables" / names[i];
        fs::create_directories(dst);
        PredictionBundle bundle = load_bundle(src / "bundle.json");
        json boxes = json::array();
        for (const auto& [id, pred] : bundle.proposals) {
            RefineResult r = refine_proposal(pred, bundle.global, cfg);
            json sides = json::array();
            for (SideStatus s : r.sides) sides.push_back(side_name(s));
            boxes.push_back({{"id", id},
                             {"box", {r.box.x1, r.box.y1, r.box.x2, r.box.y2}},
                             {"sides", sides}});
        }
        save_json_file(json{{"boxes", boxes}}, dst / "boxes.json");
    });
    write_report(out, "refine",
                 json{{"seg_threshold", cfg.seg_threshold},
                      {"iterations", cfg.iterations}},
                 static_cast<int>(names.size()));
    return 0;
}

std::vector<std::pair<int, Rect>> load_boxes(const fs::path& path) {
    json j = load_json_file(path);
    if (!j.contains("boxes") || !j["boxes"].is_array())
        throw FormatError(path.string() + ": missing \"boxes\" array");
    std::vector<std::pair<int, Rect>> boxes;
    for (const auto& b : j["boxes"]) {
        if (!b.contains("id") || !b.contains("box") || b["box"].size() != 4)
            throw FormatError(path.string() + ": box entry needs \"id\" and a 4-element \"box\"");
        boxes.emplace_back(b["id"].get<int>(),
                           Rect{b["box"][0].get<double>(), b["box"][1].get<double>(),
                                b["box"][2].get<double>(), b["box"][3].get<double>()});
    }
    return boxes;
}

int cmd_recover(const CommonOpts& opts, const std::string& boxes_dir) {
    const fs::path in(opts.input), out(opts.output);
    const std::vector<std::string> names = read_manifest(in);
    RecoverConfig cfg;
    cfg.merge_ratio = opts.merge_ratio;

    parallel_for(static_cast<int>(names.size()), opts.jobs, [&](int i) {
        const fs::path src = in / "tables" / names[i];
        const fs::path dst = out / "tables" / names[i];
        fs::create_directories(dst);
        PredictionBundle bundle = load_bundle(src / "bundle.json");
        std::vector<std::pair<int, Rect>> boxes;
        if (boxes_dir.empty()) {
            for (const auto& [id, pred] : bundle.proposals)
                boxes.emplace_back(id, pred.box);
        } else {
            boxes = load_boxes(fs::path(boxes_dir) / "tables" / names[i] / "boxes.json");
        }
        TableGrid grid = recover(boxes, bundle.global.seg, cfg);
        save_json_file(grid_to_json(grid), dst / "grid.json");
        if (opts.format == "html")
            save_text_file(grid_to_html(grid), dst / "grid.html");
    });
    write_report(out, "recover",
                 json{{"merge_ratio", cfg.merge_ratio}, {"format", opts.format}},
                 static_cast<int>(names.size()));
    return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& pred_dir) {
    const fs::path in(opts.input), pred(pred_dir), out(opts.output);
    const std::vector<std::string> names = read_manifest(in);
    fs::create_directories(out);

    struct DocResult {
        json entry;
        RelationScore score;
        double teds = 0.0;
        bool failed = false;
    };
    std::vector<DocResult> docs(names.size());

    parallel_for(static_cast<int>(names.size()), opts.jobs, [&](int i) {
        DocResult& doc = docs[i];
        doc.entry["name"] = names[i];
        try {
            TableAnnotation gt = annotation_from_json(
                load_json_file(in / "tables" / names[i] / "annotation.json"));
            TableGrid grid = grid_from_json(
                load_json_file(pred / "tables" / names[i] / "grid.json"));
            doc.score = relation_score(grid, gt, opts.iou);
            doc.teds = teds_struct(grid, gt);
            doc.entry["precision"] = doc.score.precision();
            doc.entry["recall"] = doc.score.recall();
            doc.entry["f1"] = doc.score.f1();
            doc.entry["teds_struct"] = doc.teds;
            doc.entry["relations"] = {{"correct", doc.score.correct},
                                      {"predicted", doc.score.predicted},
                                      {"ground_truth", doc.score.ground_truth}};
        } catch (const StructureError& e) {
            doc.failed = true;
            doc.entry["error"] = e.what();
        }
    });

    RelationScore total;
    double teds_sum = 0.0;
    int scored = 0, failed = 0;
    json doc_list = json::array();
    for (const DocResult& doc : docs) {
        doc_list.push_back(doc.entry);
        if (doc.failed) {
            ++failed;
            continue;
        }
        total = total + doc.score;
        teds_sum += doc.teds;
        ++scored;
    }

    json report;
    report["documents"] = doc_list;
    report["corpus"] = {{"documents", scored},
                        {"failed", failed},
                        {"precision", total.precision()},
                        {"recall", total.recall()},
                        {"f1", total.f1()},
                        {"teds_struct_mean", scored ? teds_sum / scored : 0.0},
                        {"relations",
                         {{"correct", total.correct},
                          {"predicted", total.predicted},
                          {"ground_truth", total.ground_truth}}}};
    report["config"] = {{"iou", opts.iou}};
    save_json_file(report, out / "report.json");
    write_report(out, "eval", json{{"iou", opts.iou}},
                 static_cast<int>(names.size()));
    return failed ? kExitStructure : 0;
}

int cmd_pipeline(const CommonOpts& opts) {
    const fs::path out(opts.output);
    CommonOpts stage = opts;

    stage.output = (out / "refine").string();
    int rc = cmd_refine(stage);
    if (rc) return rc;

    stage.input = opts.input;
    stage.output = (out / "recover").string();
    rc = cmd_recover(stage, (out / "refine").string());
    if (rc) return rc;

    stage.output = (out / "eval").string();
    return cmd_eval(stage, (out / "recover").string());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Table structure recognition from cell proposals: pyramid-mask "
                 "boundary refinement, grid recovery, and structure metrics"};
    app.require_subcommand(1);

    CommonOpts opts;
    SynthConfig synth_cfg;
    int synth_n = 10;
    uint64_t seed = 1;
    std::string boxes_dir;
    std::string pred_dir;

    auto add_common = [&](CLI::App* cmd, bool wants_input) {
        if (wants_input)
            cmd->add_option("--input", opts.input, "Input corpus directory")
                ->required();
        cmd->add_option("--output", opts.output, "Output directory")->required();
        cmd->add_option("--jobs", opts.jobs, "Worker threads")
            ->check(CLI::PositiveNumber);
    };

    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
    add_common(synth, false);
    synth->add_option("--n", synth_n, "Number of tables")->check(CLI::PositiveNumber);
    synth->add_option("--seed", seed, "Base RNG seed");
    synth->add_option("--rows-min", synth_cfg.rows_min);
    synth->add_option("--rows-max", synth_cfg.rows_max);
    synth->add_option("--cols-min", synth_cfg.cols_min);
    synth->add_option("--cols-max", synth_cfg.cols_max);
    synth->add_option("--span-prob", synth_cfg.span_prob, "Cell-merge probability");
    synth->add_option("--empty-prob", synth_cfg.empty_prob, "Empty-cell probability");
    synth->add_option("--jitter", synth_cfg.box_jitter,
                      "Proposal box jitter, fraction of cell extent");
    synth->add_option("--pyr-noise", synth_cfg.pyramid_noise,
                      "Additive pyramid-map noise amplitude");
    synth->add_option("--seg-flip", synth_cfg.seg_flip_rate,
                      "Per-pixel segmentation flip probability");

    CLI::App* targets = app.add_subcommand(
        "targets", "Emit pyramid-mask and segmentation training targets");
    add_common(targets, true);

    CLI::App* refine = app.add_subcommand(
        "refine", "Refine proposal boxes against the global pyramid maps");
    add_common(refine, true);
    refine->add_option("--seg-threshold", opts.seg_threshold,
                       "Segmentation binarization threshold");
    refine->add_option("--iterations", opts.iterations, "Refinement passes")
        ->check(CLI::PositiveNumber);

    CLI::App* recover_cmd =
        app.add_subcommand("recover", "Recover the logical grid from boxes");
    add_common(recover_cmd, true);
    recover_cmd->add_option("--boxes", boxes_dir,
                            "Refined-box directory (defaults to bundle proposals)");
    recover_cmd->add_option("--merge-ratio", opts.merge_ratio,
                            "Foreground ratio above which empty cells merge");
    recover_cmd->add_option("--format", opts.format, "json, or html for both")
        ->check(CLI::IsMember({"json", "html"}));

    CLI::App* eval_cmd =
        app.add_subcommand("eval", "Score recovered grids against annotations");
    add_common(eval_cmd, true);
    eval_cmd->add_option("--pred", pred_dir, "Recovered-grid directory")->required();
    eval_cmd->add_option("--iou", opts.iou, "Box-matching IoU threshold");

    CLI::App* pipeline =
        app.add_subcommand("pipeline", "refine + recover + eval in one run");
    add_common(pipeline, true);
    pipeline->add_option("--seg-threshold", opts.seg_threshold);
    pipeline->add_option("--iterations", opts.iterations)->check(CLI::PositiveNumber);
    pipeline->add_option("--merge-ratio", opts.merge_ratio);
    pipeline->add_option("--iou", opts.iou);
    pipeline->add_option("--format", opts.format)
        ->check(CLI::IsMember({"json", "html"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(opts, synth_cfg, synth_n, seed);
        if (targets->parsed()) return cmd_targets(opts);
        if (refine->parsed()) return cmd_refine(opts);
        if (recover_cmd->parsed()) return cmd_recover(opts, boxes_dir);
        if (eval_cmd->parsed()) return cmd_eval(opts, pred_dir);
        if (pipeline->parsed()) return cmd_pipeline(opts);
    } catch (const StructureError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitStructure;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFormat;
    } catch (const json::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFormat;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFormat;
    }
    return 0;
}
