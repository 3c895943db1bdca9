#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "tabrec/json_io.hpp"
#include "tabrec/rng.hpp"
#include "tabrec/table_model.hpp"

namespace tabrec {

struct SynthConfig {
    int rows_min = 2, rows_max = 6;
    int cols_min = 2, cols_max = 6;
    double span_prob = 0.15;       // per-slot chance of attempting a merge
    double empty_prob = 0.10;
    double cell_w_min = 40, cell_w_max = 90;   // px
    double cell_h_min = 22, cell_h_max = 50;
    double inset_min = 3, inset_max = 8;       // text-rect inset per side, px
    double margin = 10;                        // image border, px

    // Detector-noise model.
    double box_jitter = 0.0;       // fraction of cell extent, per side
    double pyramid_noise = 0.0;    // additive amplitude on pyramid maps
    double seg_flip_rate = 0.0;    // independent per-pixel flip probability

    void validate() const;
};

// Deterministic per (config, seed). Every generated table is recoverable:
// each row and column is anchored by a single-span non-empty cell in that
// axis.
TableAnnotation generate_table(const SynthConfig& config, uint64_t seed);

// Simulated detector output: jittered proposal boxes with ideal-ramp
// pyramid maps plus bounded noise, and a global prediction whose seg is
// the shrunk-cell rasterization with independent pixel flips.
PredictionBundle corrupt_predictions(const TableAnnotation& ann,
                                     const std::map<int, Rect>& aligned,
                                     const SynthConfig& config, uint64_t seed);

}  // namespace tabrec
