#pragma once

#include <array>
#include <optional>
#include <vector>

#include "tabrec/geometry.hpp"
#include "tabrec/scalar_map.hpp"

namespace tabrec {

// One detected aligned box plus its local pyramid masks. The masks cover
// the rasterized box; text_rect is the bounding box of the predicted text
// mask, clamped into the box.
struct ProposalPrediction {
    Rect box;
    Rect text_rect;
    ScalarMap pyr_h_local;
    ScalarMap pyr_v_local;
};

struct GlobalPrediction {
    ScalarMap seg;         // probabilities in [0,1]
    ScalarMap pyr_h_global;
    ScalarMap pyr_v_global;
};

struct PlaneFit {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

struct Pixel {
    int x = 0;
    int y = 0;
};

using PixelSet = std::vector<Pixel>;

// Re-scored pyramid values over the overlap region P_o, stored sparsely
// in the same order as the pixel set they were computed on.
struct RescoredMask {
    std::vector<float> pyr_h;
    std::vector<float> pyr_v;
};

// Binarizes seg at threshold, labels 4-connected components, and returns
// the component with the largest pixel overlap with the box (ties: lowest
// label in scan order). Throws "no-global-match" if nothing intersects.
PixelSet match_global_region(const Rect& box, const ScalarMap& seg, double threshold);

inline PixelSet overlap_region(const PixelSet& region, const Rect& box) {
    PixelSet out;
    for (const Pixel& p : region)
        if (box.contains_pixel(p.x, p.y)) out.push_back(p);
    return out;
}

// Convex blend of local and global pyramid predictions over P_o, weighted
// by distance from the text midline; results clamped to [0,1].
RescoredMask rescore(const ProposalPrediction& pred, const GlobalPrediction& global,
                     const PixelSet& overlap);

// Least-squares plane z = ax + by + c via the 3x3 normal equations.
// Throws "degenerate-fit" for <3 points or an ill-conditioned system.
PlaneFit fit_plane(const std::vector<std::array<double, 3>>& points);

enum class SideStatus { kRefined, kDegenerate, kNoPixels };

struct RefineResult {
    Rect box;
    // left, top, right, bottom
    std::array<SideStatus, 4> sides{SideStatus::kRefined, SideStatus::kRefined,
                                    SideStatus::kRefined, SideStatus::kRefined};
};

// Boundary refinement: per side, fit a plane to the re-scored values on
// the half of P_o past the text midline and place the boundary at the
// plane's zero line averaged over rows (columns for top/bottom). Sides
// whose fit degenerates keep the input coordinate.
RefineResult refine_box(const ProposalPrediction& pred, const RescoredMask& rescored,
                        const PixelSet& overlap, int image_width, int image_height);

struct RefineConfig {
    double seg_threshold = 0.5;
    int iterations = 1;
};

// Full per-proposal path: match region, re-score, refine, optionally
// iterate with the midline re-derived from the refined box. Falls back to
// local-only refinement when no global component matches.
RefineResult refine_proposal(const ProposalPrediction& pred,
                             const GlobalPrediction& global,
                             const RefineConfig& config);

}  // namespace tabrec
