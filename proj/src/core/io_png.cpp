#include "worldgen/core/io_png.hpp"

#include <png.h>

#include <cstdio>
#include <fstream>

namespace worldgen {

std::vector<uint8_t> encode_png(const ImageU8& img) {
  require(img.channels() == 1 || img.channels() == 3, ErrorKind::Io, "png: 1 or 3 channels only");
  png_image pi{};
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(img.width());
  pi.height = static_cast<png_uint_32>(img.height());
  pi.format = img.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&pi, nullptr, &size, 0, img.data(), 0, nullptr))
    raise(ErrorKind::Io, std::string("png encode (size): ") + pi.message);
  std::vector<uint8_t> buf(size);
  if (!png_image_write_to_memory(&pi, buf.data(), &size, 0, img.data(), 0, nullptr))
    raise(ErrorKind::Io, std::string("png encode: ") + pi.message);
  buf.resize(size);
  return buf;
}

ImageU8 decode_png(const uint8_t* data, size_t size) {
  png_image pi{};
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&pi, data, size))
    raise(ErrorKind::Io, std::string("png decode: ") + pi.message);
  int channels = (pi.format & PNG_FORMAT_FLAG_COLOR) ? 3 : 1;
  pi.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  ImageU8 img(static_cast<int>(pi.width), static_cast<int>(pi.height), channels);
  if (!png_image_finish_read(&pi, nullptr, img.data(), 0, nullptr))
    raise(ErrorKind::Io, std::string("png decode: ") + pi.message);
  return img;
}

void write_file(const std::string& path, const void* data, size_t size) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), ErrorKind::Io, "cannot open for write: " + path);
  f.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  require(f.good(), ErrorKind::Io, "write failed: " + path);
}

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  require(f.good(), ErrorKind::Io, "cannot open: " + path);
  auto size = f.tellg();
  f.seekg(0);
  std::vector<uint8_t> buf(static_cast<size_t>(size));
  f.read(reinterpret_cast<char*>(buf.data()), size);
  require(f.good(), ErrorKind::Io, "read failed: " + path);
  return buf;
}

void write_png(const std::string& path, const ImageU8& img) {
  auto buf = encode_png(img);
  write_file(path, buf.data(), buf.size());
}

ImageU8 read_png(const std::string& path) {
  auto buf = read_file(path);
  return decode_png(buf.data(), buf.size());
}

}  // namespace worldgen
