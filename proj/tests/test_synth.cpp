#include <doctest.h>

#include "tabrec/errors.hpp"
#include "tabrec/metrics.hpp"
#include "tabrec/recovery.hpp"
#include "tabrec/refine.hpp"
#include "tabrec/synth.hpp"

using namespace tabrec;

TEST_CASE("generation is deterministic per seed") {
    SynthConfig cfg;
    for (uint64_t seed : {1ull, 17ull, 123456789ull}) {
        TableAnnotation a = generate_table(cfg, seed);
        TableAnnotation b = generate_table(cfg, seed);
        CHECK(annotation_to_json(a) == annotation_to_json(b));
    }
    CHECK(annotation_to_json(generate_table(cfg, 1)) !=
          annotation_to_json(generate_table(cfg, 2)));
}

TEST_CASE("zero probabilities give a plain full grid") {
    SynthConfig cfg;
    cfg.span_prob = 0.0;
    cfg.empty_prob = 0.0;
    for (uint64_t seed = 0; seed < 20; ++seed) {
        TableAnnotation ann = generate_table(cfg, seed);
        ann.validate();
        CHECK(static_cast<int>(ann.cells.size()) ==
              ann.row_count() * ann.col_count());
        for (const CellAnnotation& c : ann.cells) {
            CHECK(c.single_row());
            CHECK(c.single_col());
            CHECK_FALSE(c.is_empty());
        }
    }
}

TEST_CASE("every generated table validates and stays recoverable") {
    SynthConfig cfg;
    for (uint64_t seed = 0; seed < 300; ++seed) {
        TableAnnotation ann = generate_table(cfg, seed);
        ann.validate();
        // every row/column must be anchored by a single-span non-empty cell
        std::set<int> rows, cols;
        for (const CellAnnotation& c : ann.cells) {
            if (c.is_empty()) continue;
            if (c.single_row()) rows.insert(c.row_start);
            if (c.single_col()) cols.insert(c.col_start);
        }
        CHECK(static_cast<int>(rows.size()) == ann.row_count());
        CHECK(static_cast<int>(cols.size()) == ann.col_count());
        // text rects stay inside the image with the configured margin
        for (const CellAnnotation& c : ann.cells) {
            if (c.is_empty()) continue;
            CHECK(c.text_rect->x1 >= cfg.margin);
            CHECK(c.text_rect->y1 >= cfg.margin);
            CHECK(c.text_rect->x2 <= ann.image_width - cfg.margin);
            CHECK(c.text_rect->y2 <= ann.image_height - cfg.margin);
        }
    }
}

TEST_CASE("recovery round-trips ground-truth boxes") {
    SynthConfig cfg;
    for (uint64_t seed = 0; seed < 300; ++seed) {
        TableAnnotation ann = generate_table(cfg, seed);
        auto aligned = derive_aligned_boxes(ann);
        std::vector<std::pair<int, Rect>> boxes;
        for (const CellAnnotation& c : ann.cells)
            if (!c.is_empty()) boxes.emplace_back(c.id, aligned.at(c.id));
        PredictionBundle bundle = corrupt_predictions(ann, aligned, cfg, seed);
        TableGrid grid = recover(boxes, bundle.global.seg);
        REQUIRE(structure_equal(grid, ann));
        RelationScore s = relation_score(grid, ann);
        REQUIRE(s.f1() == 1.0);
        REQUIRE(teds_struct(grid, ann) == 1.0);
    }
}

TEST_CASE("noiseless predictions refine back to the true boxes") {
    SynthConfig cfg;
    for (uint64_t seed = 0; seed < 30; ++seed) {
        TableAnnotation ann = generate_table(cfg, seed);
        auto aligned = derive_aligned_boxes(ann);
        PredictionBundle bundle = corrupt_predictions(ann, aligned, cfg, seed);
        for (const auto& [id, pred] : bundle.proposals) {
            RefineResult r = refine_proposal(pred, bundle.global, {});
            const Rect& truth = aligned.at(id);
            CHECK(std::abs(r.box.x1 - truth.x1) <= 0.5);
            CHECK(std::abs(r.box.y1 - truth.y1) <= 0.5);
            CHECK(std::abs(r.box.x2 - truth.x2) <= 0.5);
            CHECK(std::abs(r.box.y2 - truth.y2) <= 0.5);
        }
    }
}

TEST_CASE("jittered proposals still refine within a pixel") {
    SynthConfig cfg;
    cfg.box_jitter = 0.2;
    int total = 0, good = 0;
    for (uint64_t seed = 0; seed < 50; ++seed) {
        TableAnnotation ann = generate_table(cfg, seed);
        auto aligned = derive_aligned_boxes(ann);
        PredictionBundle bundle = corrupt_predictions(ann, aligned, cfg, seed);
        for (const auto& [id, pred] : bundle.proposals) {
            RefineResult r = refine_proposal(pred, bundle.global, {});
            const Rect& truth = aligned.at(id);
            const double err[4] = {r.box.x1 - truth.x1, r.box.y1 - truth.y1,
                                   r.box.x2 - truth.x2, r.box.y2 - truth.y2};
            for (double e : err) {
                ++total;
                if (std::abs(e) <= 1.0) ++good;
            }
        }
    }
    CHECK(good >= total * 99 / 100);
}

TEST_CASE("invalid configs are rejected") {
    SynthConfig cfg;
    cfg.rows_min = 0;
    CHECK_THROWS_AS(cfg.validate(), StructureError);
    cfg = {};
    cfg.span_prob = 1.5;
    CHECK_THROWS_AS(cfg.validate(), StructureError);
    cfg = {};
    cfg.inset_min = 30;
    cfg.inset_max = 40;  // insets would swallow the smallest cells
    CHECK_THROWS_AS(cfg.validate(), StructureError);
}
