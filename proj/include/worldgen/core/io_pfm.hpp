#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "worldgen/core/image.hpp"

namespace worldgen {

// PFM, "Pf" for single channel and "PF" for 3-channel color; little-endian
// (negative scale), rows stored bottom-to-top as the format prescribes.
std::vector<uint8_t> encode_pfm(const ImageF32& img);
ImageF32 decode_pfm(const uint8_t* data, size_t size);

void write_pfm(const std::string& path, const ImageF32& img);
ImageF32 read_pfm(const std::string& path);

}  // namespace worldgen
