#include "worldgen/core/io_pfm.hpp"

#include <cctype>
#include <cstdio>
#include <cstring>

#include "worldgen/core/io_png.hpp"

namespace worldgen {

std::vector<uint8_t> encode_pfm(const ImageF32& img) {
  require(img.channels() == 1 || img.channels() == 3, ErrorKind::Io, "pfm: 1 or 3 channels");
  size_t row_bytes = static_cast<size_t>(img.width()) * img.channels() * 4;
  char header[64];
  int hn = std::snprintf(header, sizeof(header), "%s\n%d %d\n-1.0\n",
                         img.channels() == 1 ? "Pf" : "PF", img.width(), img.height());
  std::vector<uint8_t> buf(static_cast<size_t>(hn) + img.count() * 4);
  std::memcpy(buf.data(), header, static_cast<size_t>(hn));
  uint8_t* p = buf.data() + hn;
  for (int y = img.height() - 1; y >= 0; --y) {
    std::memcpy(p, img.row(y), row_bytes);
    p += row_bytes;
  }
  return buf;
}

ImageF32 decode_pfm(const uint8_t* data, size_t size) {
  auto fail = [] { raise(ErrorKind::Io, "pfm: malformed header"); };
  size_t pos = 0;
  auto token = [&]() -> std::string {
    while (pos < size && std::isspace(data[pos])) ++pos;
    size_t start = pos;
    while (pos < size && !std::isspace(data[pos])) ++pos;
    if (start == pos) fail();
    return std::string(reinterpret_cast<const char*>(data + start), pos - start);
  };
  std::string magic = token();
  int channels = magic == "Pf" ? 1 : magic == "PF" ? 3 : 0;
  if (channels == 0) fail();
  int w = std::stoi(token());
  int h = std::stoi(token());
  double scale = std::stod(token());
  require(w > 0 && h > 0, ErrorKind::Io, "pfm: bad dimensions");
  require(scale < 0, ErrorKind::Io, "pfm: big-endian files not supported");
  ++pos;  // single whitespace after the scale line
  size_t row_bytes = static_cast<size_t>(w) * channels * 4;
  size_t need = row_bytes * h;
  require(size - pos >= need, ErrorKind::Io, "pfm: truncated payload");
  ImageF32 img(w, h, channels);
  const uint8_t* p = data + pos;
  for (int y = h - 1; y >= 0; --y) {
    std::memcpy(img.row(y), p, row_bytes);
    p += row_bytes;
  }
  return img;
}

void write_pfm(const std::string& path, const ImageF32& img) {
  auto buf = encode_pfm(img);
  write_file(path, buf.data(), buf.size());
}

ImageF32 read_pfm(const std::string& path) {
  auto buf = read_file(path);
  return decode_pfm(buf.data(), buf.size());
}

}  // namespace worldgen
