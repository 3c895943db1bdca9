#include "tabrec/scalar_map.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace tabrec {

namespace {

constexpr char kMagic[6] = {'T', 'G', 'M', 'A', 'P', '\0'};

void put_u32le(std::ostream& os, uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff),
                 static_cast<char>((v >> 24) & 0xff)};
    os.write(b, 4);
}

uint32_t get_u32le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void ScalarMap::save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open for writing: " + path.string());
    os.write(kMagic, sizeof(kMagic));
    put_u32le(os, static_cast<uint32_t>(width_));
    put_u32le(os, static_cast<uint32_t>(height_));
    for (float v : values_) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32le(os, bits);
    }
    if (!os) throw FormatError("write failed: " + path.string());
}

ScalarMap ScalarMap::load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open: " + path.string());
    char magic[6];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw FormatError("bad magic in " + path.string());
    const uint32_t w = get_u32le(is);
    const uint32_t h = get_u32le(is);
    if (!is || w == 0 || h == 0 || w > (1u << 20) || h > (1u << 20))
        throw FormatError("bad dimensions in " + path.string());
    ScalarMap map(static_cast<int>(w), static_cast<int>(h));
    for (float& v : map.values_) {
        uint32_t bits = get_u32le(is);
        std::memcpy(&v, &bits, 4);
    }
    if (!is) throw FormatError("truncated map file: " + path.string());
    return map;
}

void ScalarMap::save_pgm(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open for writing: " + path.string());
    os << "P5\n" << width_ << " " << height_ << "\n255\n";
    for (float v : values_) {
        const float c = std::clamp(v, 0.0f, 1.0f);
        os.put(static_cast<char>(std::lround(c * 255.0f)));
    }
    if (!os) throw FormatError("write failed: " + path.string());
}

}  // namespace tabrec
