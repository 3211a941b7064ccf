#pragma once

#include <filesystem>

#include "stssl/dataio/types.hpp"

namespace stssl::dataio {

// Clip container format: magic "STV1", four little-endian u32 (T,H,W,C),
// then T*H*W*C uint8 pixels, frame-major row-major.

void write_clip_container(const std::filesystem::path& path, const VideoU8& video);
VideoU8 read_clip_container(const std::filesystem::path& path);

}  // namespace stssl::dataio
