#include "viewadapt/image.hpp"

#include <cstring>
#include <fstream>

namespace viewadapt::warpcore {

namespace {

void write_u32le(std::ostream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                       static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
    out.write(b, 4);
}

std::uint32_t read_u32le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

int parse_dim(const std::string& tok, const char* what) {
    if (tok.empty()) throw std::runtime_error(std::string("image io: missing ") + what);
    const int v = std::stoi(tok);
    if (v < 1) throw std::runtime_error(std::string("image io: bad ") + what);
    return v;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("image io: cannot open for writing: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("image io: cannot open: " + path);
    return in;
}

}  // namespace

void save_ppm(const Image& img, const std::string& path) {
    auto out = open_out(path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw std::runtime_error("image io: write failed: " + path);
}

Image load_ppm(const std::string& path) {
    auto in = open_in(path);
    if (next_token(in) != "P6") throw std::runtime_error("image io: not a P6 ppm: " + path);
    const int w = parse_dim(next_token(in), "width");
    const int h = parse_dim(next_token(in), "height");
    if (next_token(in) != "255") throw std::runtime_error("image io: unsupported maxval: " + path);
    Image img(w, h);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw std::runtime_error("image io: truncated ppm: " + path);
    return img;
}

void save_depth(const DepthMap& depth, const std::string& path) {
    auto out = open_out(path);
    out.write("DPTH", 4);
    write_u32le(out, static_cast<std::uint32_t>(depth.width));
    write_u32le(out, static_cast<std::uint32_t>(depth.height));
    write_u32le(out, 0);
    static_assert(sizeof(float) == 4);
    out.write(reinterpret_cast<const char*>(depth.depths.data()),
              static_cast<std::streamsize>(depth.depths.size() * 4));
    if (!out) throw std::runtime_error("image io: write failed: " + path);
}

DepthMap load_depth(const std::string& path) {
    auto in = open_in(path);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, "DPTH", 4) != 0)
        throw std::runtime_error("image io: not a depth file: " + path);
    const int w = static_cast<int>(read_u32le(in));
    const int h = static_cast<int>(read_u32le(in));
    read_u32le(in);  // reserved
    if (w < 1 || h < 1) throw std::runtime_error("image io: bad depth dimensions: " + path);
    DepthMap depth(w, h);
    in.read(reinterpret_cast<char*>(depth.depths.data()),
            static_cast<std::streamsize>(depth.depths.size() * 4));
    if (in.gcount() != static_cast<std::streamsize>(depth.depths.size() * 4))
        throw std::runtime_error("image io: truncated depth file: " + path);
    return depth;
}

void save_mask(const ValidityMask& mask, const std::string& path) {
    auto out = open_out(path);
    out << "P4\n" << mask.width << " " << mask.height << "\n";
    const int row_bytes = (mask.width + 7) / 8;
    std::vector<std::uint8_t> row(row_bytes);
    for (int y = 0; y < mask.height; ++y) {
        std::fill(row.begin(), row.end(), 0);
        for (int x = 0; x < mask.width; ++x) {
            // PBM: 1 = black; holes are stored black.
            if (!mask.at(x, y)) row[x >> 3] |= static_cast<std::uint8_t>(0x80 >> (x & 7));
        }
        out.write(reinterpret_cast<const char*>(row.data()), row_bytes);
    }
    if (!out) throw std::runtime_error("image io: write failed: " + path);
}

ValidityMask load_mask(const std::string& path) {
    auto in = open_in(path);
    if (next_token(in) != "P4") throw std::runtime_error("image io: not a P4 pbm: " + path);
    const int w = parse_dim(next_token(in), "width");
    const int h = parse_dim(next_token(in), "height");
    ValidityMask mask(w, h);
    const int row_bytes = (w + 7) / 8;
    std::vector<std::uint8_t> row(row_bytes);
    for (int y = 0; y < h; ++y) {
        in.read(reinterpret_cast<char*>(row.data()), row_bytes);
        if (in.gcount() != row_bytes) throw std::runtime_error("image io: truncated pbm: " + path);
        for (int x = 0; x < w; ++x)
            mask.set(x, y, (row[x >> 3] & (0x80 >> (x & 7))) == 0);
    }
    return mask;
}

}  // namespace viewadapt::warpcore
