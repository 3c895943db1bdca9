#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tabrec/errors.hpp"

namespace tabrec {

// Single-channel float map over an integer pixel grid, row-major.
class ScalarMap {
public:
    ScalarMap() = default;
    ScalarMap(int width, int height, float fill = 0.0f)
        : width_(width), height_(height),
          values_(static_cast<size_t>(width) * height, fill) {
        if (width <= 0 || height <= 0)
            throw StructureError("empty-map", "ScalarMap dimensions must be positive");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    size_t size() const { return values_.size(); }

    float at(int x, int y) const { return values_[idx(x, y)]; }
    float& at(int x, int y) { return values_[idx(x, y)]; }
    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width_ && y >= 0 && y < height_;
    }

    const std::vector<float>& values() const { return values_; }
    std::vector<float>& values() { return values_; }

    bool operator==(const ScalarMap&) const = default;

    // Binary format: magic "TGMAP\0", u32le width, u32le height, then
    // width*height f32le values, row-major.
    void save(const std::filesystem::path& path) const;
    static ScalarMap load(const std::filesystem::path& path);

    // Greyscale PGM (P5) with values scaled to 0..255, for eyeballing.
    void save_pgm(const std::filesystem::path& path) const;

private:
    size_t idx(int x, int y) const {
        return static_cast<size_t>(y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<float> values_;
};

}  // namespace tabrec
