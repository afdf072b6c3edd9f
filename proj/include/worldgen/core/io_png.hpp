#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "worldgen/core/image.hpp"

namespace worldgen {

// 8-bit PNG, gray (1 channel) or RGB (3 channels). Encodes with fixed
// settings so equal pixels give equal bytes.
std::vector<uint8_t> encode_png(const ImageU8& img);
ImageU8 decode_png(const uint8_t* data, size_t size);

void write_png(const std::string& path, const ImageU8& img);
ImageU8 read_png(const std::string& path);

void write_file(const std::string& path, const void* data, size_t size);
std::vector<uint8_t> read_file(const std::string& path);

}  // namespace worldgen
