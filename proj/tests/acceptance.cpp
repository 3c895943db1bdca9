#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabrec/metrics.hpp"
#include "tabrec/recovery.hpp"
#include "tabrec/refine.hpp"
#include "tabrec/rng.hpp"
#include "tabrec/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tabrec;

namespace {

const char* cli = TABREC_CLI_PATH;

int run(const std::string& args) {
    const std::string cmd = std::string(cli) + " " + args + " >/dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("tabrec_accept_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

bool trees_identical(const fs::path& a, const fs::path& b) {
    std::vector<fs::path> rel_a, rel_b;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a));
    for (const auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b));
    std::sort(rel_a.begin(), rel_a.end());
    std::sort(rel_b.begin(), rel_b.end());
    if (rel_a != rel_b) return false;
    for (const fs::path& r : rel_a)
        if (slurp(a / r) != slurp(b / r)) return false;
    return true;
}

void verdict(int criterion, bool ok, const std::string& detail) {
    std::printf("criterion %d: %s - %s\n", criterion, ok ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    CHECK(ok);
}

// ---- independent oracles -------------------------------------------------

PlaneFit brute_force_plane(const std::vector<std::array<double, 3>>& pts) {
    long double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    long double r[3] = {0, 0, 0};
    for (const auto& p : pts) {
        const long double row[3] = {p[0], p[1], 1.0L};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) m[i][j] += row[i] * row[j];
            r[i] += row[i] * p[2];
        }
    }
    auto det3 = [](const long double a[3][3]) {
        return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
               a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
               a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    };
    const long double d = det3(m);
    double out[3];
    for (int c = 0; c < 3; ++c) {
        long double mc[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) mc[i][j] = j == c ? r[i] : m[i][j];
        out[c] = static_cast<double>(det3(mc) / d);
    }
    return {out[0], out[1], out[2]};
}

// Row/column assignment by interval sweep over the aligned boxes: sorted
// distinct edge starts define the bands, each box takes every band whose
// start lies inside its extent.
IndexAssignment sweep_oracle(const std::vector<std::pair<int, Rect>>& boxes) {
    constexpr double kEps = 1e-6;
    auto bands = [&](auto lo_of) {
        std::vector<double> starts;
        for (const auto& [id, r] : boxes) starts.push_back(lo_of(r).first);
        std::sort(starts.begin(), starts.end());
        starts.erase(std::unique(starts.begin(), starts.end(),
                                 [](double a, double b) { return std::abs(a - b) < kEps; }),
                     starts.end());
        return starts;
    };
    auto assign = [&](const std::vector<double>& starts, auto lo_of,
                      std::map<int, std::set<int>>& out) {
        for (const auto& [id, r] : boxes) {
            const auto [lo, hi] = lo_of(r);
            for (size_t b = 0; b < starts.size(); ++b)
                if (starts[b] >= lo - kEps && starts[b] < hi - kEps)
                    out[id].insert(static_cast<int>(b));
        }
    };
    auto y_of = [](const Rect& r) { return std::pair<double, double>{r.y1, r.y2}; };
    auto x_of = [](const Rect& r) { return std::pair<double, double>{r.x1, r.x2}; };
    IndexAssignment ix;
    const std::vector<double> rows = bands(y_of);
    const std::vector<double> cols = bands(x_of);
    assign(rows, y_of, ix.row_indices);
    assign(cols, x_of, ix.col_indices);
    ix.row_count = static_cast<int>(rows.size());
    ix.col_count = static_cast<int>(cols.size());
    return ix;
}

int forest_size(const std::vector<StructNode>& f) {
    int n = 0;
    for (const StructNode& t : f) n += t.size();
    return n;
}

int oracle_forest(std::vector<StructNode> f, std::vector<StructNode> g) {
    if (f.empty()) return forest_size(g);
    if (g.empty()) return forest_size(f);
    StructNode u = f.back();
    f.pop_back();
    StructNode v = g.back();
    g.pop_back();
    std::vector<StructNode> f_del = f;
    f_del.insert(f_del.end(), u.children.begin(), u.children.end());
    std::vector<StructNode> g_ins = g;
    g_ins.insert(g_ins.end(), v.children.begin(), v.children.end());
    std::vector<StructNode> f_full = f;
    f_full.push_back(u);
    std::vector<StructNode> g_full = g;
    g_full.push_back(v);
    int best = oracle_forest(f_del, g_full) + 1;
    best = std::min(best, oracle_forest(f_full, g_ins) + 1);
    best = std::min(best, oracle_forest(f, g) + oracle_forest(u.children, v.children) +
                              (u.label_equals(v) ? 0 : 1));
    return best;
}

StructNode random_tree(Rng& rng, int max_nodes) {
    static const char* tags[] = {"table", "tr", "td"};
    StructNode n;
    n.tag = tags[rng.uniform_int(0, 2)];
    n.rowspan = rng.uniform_int(1, 3);
    n.colspan = rng.uniform_int(1, 3);
    int budget = max_nodes - 1;
    while (budget > 0 && rng.bernoulli(0.6)) {
        const int take = rng.uniform_int(1, budget);
        n.children.push_back(random_tree(rng, take));
        budget -= n.children.back().size();
    }
    return n;
}

bool clique_matches_oracle(const SynthConfig& cfg, uint64_t seed, std::string& why) {
    TableAnnotation ann = generate_table(cfg, seed);
    auto aligned = derive_aligned_boxes(ann);
    std::vector<std::pair<int, Rect>> boxes;
    for (const auto& c : ann.cells)
        if (!c.is_empty()) boxes.emplace_back(c.id, aligned.at(c.id));
    IndexAssignment got = assign_indices(match_cells(boxes));
    IndexAssignment want = sweep_oracle(boxes);
    if (got.row_count != want.row_count || got.col_count != want.col_count ||
        got.row_indices != want.row_indices || got.col_indices != want.col_indices) {
        why = "seed " + std::to_string(seed) + " disagrees with the sweep oracle";
        return false;
    }
    return true;
}

}  // namespace

TEST_CASE("criterion 1: ground-truth round-trip at corpus scale") {
    fs::path dir = fresh_dir("roundtrip");
    const std::string corpus = (dir / "C").string();
    REQUIRE(run("synth --output " + corpus + " --n 200 --seed 1000 --jobs 4") == 0);
    const auto start = std::chrono::steady_clock::now();
    const int rc =
        run("pipeline --input " + corpus + " --output " + (dir / "P").string() +
            " --jobs 4");
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json report;
    std::ifstream(dir / "P/eval/report.json") >> report;
    const bool ok = rc == 0 && report["corpus"]["f1"] == 1.0 &&
                    report["corpus"]["teds_struct_mean"] == 1.0 &&
                    report["corpus"]["failed"] == 0 && secs < 60.0;
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "200 tables, F1=%.4f, TEDS-Struc=%.4f, pipeline %.1fs",
                  report["corpus"]["f1"].get<double>(),
                  report["corpus"]["teds_struct_mean"].get<double>(), secs);
    verdict(1, ok, detail);
}

TEST_CASE("criterion 2: refinement under 20% box jitter") {
    SynthConfig cfg;
    cfg.box_jitter = 0.2;
    long long total = 0, refined_good = 0, raw_good = 0;
    for (uint64_t seed = 0; total < 4000; ++seed) {  // 4 sides per cell
        TableAnnotation ann = generate_table(cfg, seed);
        auto aligned = derive_aligned_boxes(ann);
        PredictionBundle bundle = corrupt_predictions(ann, aligned, cfg, seed);
        for (const auto& [id, pred] : bundle.proposals) {
            RefineResult r = refine_proposal(pred, bundle.global, {});
            const Rect& t = aligned.at(id);
            const double refined[4] = {r.box.x1 - t.x1, r.box.y1 - t.y1,
                                       r.box.x2 - t.x2, r.box.y2 - t.y2};
            const double raw[4] = {pred.box.x1 - t.x1, pred.box.y1 - t.y1,
                                   pred.box.x2 - t.x2, pred.box.y2 - t.y2};
            for (int s = 0; s < 4; ++s) {
                ++total;
                if (std::abs(refined[s]) <= 1.0) ++refined_good;
                if (std::abs(raw[s]) <= 1.0) ++raw_good;
            }
        }
    }
    const double refined_pct = 100.0 * refined_good / total;
    const double raw_pct = 100.0 * raw_good / total;
    const bool ok = refined_pct >= 99.0 && refined_pct > raw_pct;
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "%lld sides: refined %.2f%% within 1 px, unrefined baseline %.2f%%",
                  total, refined_pct, raw_pct);
    verdict(2, ok, detail);
}

TEST_CASE("criterion 3: plane fit against the exact solver") {
    bool ok = true;
    std::vector<std::array<double, 3>> grid;
    for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 3; ++y)
            grid.push_back({double(x), double(y), 0.5 * x + 0.25 * y + 0.1});
    PlaneFit g = fit_plane(grid);
    ok &= std::abs(g.a - 0.5) <= 1e-9 && std::abs(g.b - 0.25) <= 1e-9 &&
          std::abs(g.c - 0.1) <= 1e-9;

    Rng rng(31337);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::array<double, 3>> pts;
        const int n = rng.uniform_int(8, 60);
        for (int i = 0; i < n; ++i)
            pts.push_back({rng.uniform(0, 40), rng.uniform(0, 40), rng.uniform(0, 1)});
        PlaneFit fit = fit_plane(pts);
        PlaneFit oracle = brute_force_plane(pts);
        worst = std::max({worst, std::abs(fit.a - oracle.a),
                          std::abs(fit.b - oracle.b), std::abs(fit.c - oracle.c)});
    }
    ok &= worst <= 1e-9;
    char detail[120];
    std::snprintf(detail, sizeof(detail),
                  "3x3 fixture exact, 100 random fits worst |delta| = %.2e", worst);
    verdict(3, ok, detail);
}

TEST_CASE("criterion 4: clique ranks against the interval-sweep oracle") {
    std::string why;
    bool ok = true;
    int checked = 0;
    // exhaustive sweep of small shapes via seeded generation
    for (int rows = 1; rows <= 4 && ok; ++rows)
        for (int cols = 1; cols <= 4 && ok; ++cols) {
            SynthConfig cfg;
            cfg.rows_min = cfg.rows_max = rows;
            cfg.cols_min = cfg.cols_max = cols;
            cfg.span_prob = 0.3;
            cfg.empty_prob = 0.15;
            for (uint64_t seed = 0; seed < 40 && ok; ++seed) {
                ok = clique_matches_oracle(cfg, seed, why);
                ++checked;
            }
        }
    // 500 random larger tables
    SynthConfig big;
    big.rows_min = 4;
    big.rows_max = 8;
    big.cols_min = 4;
    big.cols_max = 8;
    big.span_prob = 0.25;
    for (uint64_t seed = 10000; seed < 10500 && ok; ++seed) {
        ok = clique_matches_oracle(big, seed, why);
        ++checked;
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail), "%d tables checked%s%s", checked,
                  ok ? "" : ": ", why.c_str());
    verdict(4, ok, detail);
}

TEST_CASE("criterion 5: tree edit distance self-consistency") {
    bool ok = true;
    // fixtures
    auto td = [](int cs) {
        StructNode n;
        n.tag = "td";
        n.colspan = cs;
        return n;
    };
    StructNode one_by_two, one_by_one;
    one_by_two.tag = one_by_one.tag = "table";
    StructNode tr2, tr1;
    tr2.tag = tr1.tag = "tr";
    tr2.children = {td(1), td(1)};
    tr1.children = {td(1)};
    one_by_two.children = {tr2};
    one_by_one.children = {tr1};
    ok &= teds_struct(one_by_two, one_by_one) == 0.75;
    ok &= teds_struct(one_by_two, one_by_two) == 1.0;

    Rng rng(777);
    int pairs = 0;
    for (int trial = 0; trial < 500 && ok; ++trial) {
        StructNode a = random_tree(rng, rng.uniform_int(1, 8));
        StructNode b = random_tree(rng, rng.uniform_int(1, 8));
        ok &= tree_edit_distance(a, b) == oracle_forest({a}, {b});
        ++pairs;
    }
    char detail[120];
    std::snprintf(detail, sizeof(detail),
                  "fixtures 0.75/1.0 exact, %d random pairs vs brute force", pairs);
    verdict(5, ok, detail);
}

TEST_CASE("criterion 6: re-scoring identity when local equals global") {
    Rng rng(2024);
    bool ok = true;
    for (int trial = 0; trial < 50 && ok; ++trial) {
        const int w = rng.uniform_int(6, 40);
        const int h = rng.uniform_int(6, 40);
        ProposalPrediction pred;
        pred.box = {0, 0, double(w), double(h)};
        pred.text_rect = {w * 0.2, h * 0.2, w * 0.8, h * 0.8};
        pred.pyr_h_local = ScalarMap(w, h);
        pred.pyr_v_local = ScalarMap(w, h);
        GlobalPrediction global;
        global.seg = ScalarMap(w, h, 1.0f);
        global.pyr_h_global = ScalarMap(w, h);
        global.pyr_v_global = ScalarMap(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const float a = static_cast<float>(rng.uniform());
                const float b = static_cast<float>(rng.uniform());
                pred.pyr_h_local.at(x, y) = a;
                global.pyr_h_global.at(x, y) = a;
                pred.pyr_v_local.at(x, y) = b;
                global.pyr_v_global.at(x, y) = b;
            }
        PixelSet overlap;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) overlap.push_back({x, y});
        RescoredMask m = rescore(pred, global, overlap);
        for (size_t i = 0; i < overlap.size(); ++i) {
            ok &= m.pyr_h[i] == pred.pyr_h_local.at(overlap[i].x, overlap[i].y);
            ok &= m.pyr_v[i] == pred.pyr_v_local.at(overlap[i].x, overlap[i].y);
        }
    }
    verdict(6, ok, "50 random fixtures, outputs bit-identical to inputs");
}

TEST_CASE("criterion 7: merge count monotone in the merge ratio") {
    SynthConfig cfg;
    cfg.seg_flip_rate = 0.2;
    struct Doc {
        std::vector<std::pair<int, Rect>> boxes;
        ScalarMap seg;
    };
    std::vector<Doc> docs;
    for (uint64_t seed = 500; seed < 540; ++seed) {
        TableAnnotation ann = generate_table(cfg, seed);
        auto aligned = derive_aligned_boxes(ann);
        Doc d;
        for (const auto& c : ann.cells)
            if (!c.is_empty()) d.boxes.emplace_back(c.id, aligned.at(c.id));
        d.seg = corrupt_predictions(ann, aligned, cfg, seed).global.seg;
        docs.push_back(std::move(d));
    }
    bool ok = true;
    long long prev_cells = -1;
    std::string counts;
    for (int step = 0; step < 10; ++step) {
        RecoverConfig rc;
        rc.merge_ratio = 0.05 + 0.1 * step;
        long long empties = 0;
        for (const Doc& d : docs) {
            TableGrid grid = recover(d.boxes, d.seg, rc);
            for (const GridCell& c : grid.cells)
                if (c.is_empty) ++empties;
        }
        // fewer merges = more surviving empty cells
        if (prev_cells >= 0 && empties < prev_cells) ok = false;
        prev_cells = empties;
        counts += (step ? "," : "") + std::to_string(empties);
    }
    verdict(7, ok, "empty-cell counts over 10 rising thresholds: " + counts);
}

TEST_CASE("criterion 8: CLI commands are byte-deterministic") {
    fs::path dir = fresh_dir("determinism");
    bool ok = true;
    auto same_twice = [&](const std::string& name, const std::string& args) {
        const std::string a = (dir / (name + "_a")).string();
        const std::string b = (dir / (name + "_b")).string();
        if (run(args + " --output " + a) != 0) return false;
        if (run(args + " --output " + b) != 0) return false;
        return trees_identical(a, b);
    };
    const std::string corpus = (dir / "C").string();
    ok &= run("synth --output " + corpus +
              " --n 6 --seed 77 --jitter 0.1 --seg-flip 0.05") == 0;
    ok &= same_twice("synth", "synth --n 6 --seed 77 --jitter 0.1 --seg-flip 0.05");
    ok &= same_twice("targets", "targets --input " + corpus);
    ok &= same_twice("refine", "refine --input " + corpus + " --jobs 3");
    ok &= same_twice("recover", "recover --input " + corpus + " --format html");
    const std::string grids = (dir / "recover_a").string();
    ok &= same_twice("eval", "eval --input " + corpus + " --pred " + grids);
    ok &= same_twice("pipeline", "pipeline --input " + corpus + " --jobs 3");
    verdict(8, ok, "synth/targets/refine/recover/eval/pipeline re-runs identical");
}
