#include "stssl/dataio/container.hpp"

#include <cstring>
#include <fstream>

namespace stssl::dataio {

namespace {
void put_u32le(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32le(std::ifstream& f, const std::filesystem::path& path) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (!f) throw std::runtime_error("truncated container header: " + path.string());
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
}  // namespace

void write_clip_container(const std::filesystem::path& path, const VideoU8& video) {
    const std::size_t expect = static_cast<std::size_t>(video.T) * video.H * video.W * video.C;
    if (video.pix.size() != expect)
        throw std::invalid_argument("container: pixel payload size mismatch");
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write container: " + path.string());
    f.write("STV1", 4);
    put_u32le(f, static_cast<std::uint32_t>(video.T));
    put_u32le(f, static_cast<std::uint32_t>(video.H));
    put_u32le(f, static_cast<std::uint32_t>(video.W));
    put_u32le(f, static_cast<std::uint32_t>(video.C));
    f.write(reinterpret_cast<const char*>(video.pix.data()),
            static_cast<std::streamsize>(video.pix.size()));
    if (!f) throw std::runtime_error("short write: " + path.string());
}

VideoU8 read_clip_container(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("missing container: " + path.string());
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "STV1", 4) != 0)
        throw std::runtime_error("malformed header (bad magic): " + path.string());
    VideoU8 v;
    v.T = static_cast<int>(get_u32le(f, path));
    v.H = static_cast<int>(get_u32le(f, path));
    v.W = static_cast<int>(get_u32le(f, path));
    v.C = static_cast<int>(get_u32le(f, path));
    if (v.T <= 0 || v.H <= 0 || v.W <= 0 || v.C <= 0 || v.C > 4)
        throw std::runtime_error("malformed header (bad dims): " + path.string());
    const std::size_t n = static_cast<std::size_t>(v.T) * v.H * v.W * v.C;
    v.pix.resize(n);
    f.read(reinterpret_cast<char*>(v.pix.data()), static_cast<std::streamsize>(n));
    if (!f) throw std::runtime_error("truncated pixel payload: " + path.string());
    return v;
}

}  // namespace stssl::dataio
