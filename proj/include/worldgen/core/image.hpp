#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <vector>

#include "worldgen/core/error.hpp"

namespace worldgen {

// Row-major interleaved image. Float images hold values in the 0..255 domain
// unless stated otherwise (depth/weight buffers use their natural units).
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, T fill = T{})
      : w_(width), h_(height), c_(channels),
        data_(static_cast<size_t>(width) * height * channels, fill) {
    require(width > 0 && height > 0 && channels > 0, ErrorKind::Domain, "bad image shape");
  }

  int width() const { return w_; }
  int height() const { return h_; }
  int channels() const { return c_; }
  bool empty() const { return data_.empty(); }
  size_t count() const { return data_.size(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  T* row(int y) { return data_.data() + static_cast<size_t>(y) * w_ * c_; }
  const T* row(int y) const { return data_.data() + static_cast<size_t>(y) * w_ * c_; }

  T& at(int x, int y, int ch = 0) { return data_[(static_cast<size_t>(y) * w_ + x) * c_ + ch]; }
  const T& at(int x, int y, int ch = 0) const {
    return data_[(static_cast<size_t>(y) * w_ + x) * c_ + ch];
  }

  bool same_shape(const Image& o) const { return w_ == o.w_ && h_ == o.h_ && c_ == o.c_; }

  bool operator==(const Image& o) const {
    return same_shape(o) &&
           std::memcmp(data_.data(), o.data_.data(), data_.size() * sizeof(T)) == 0;
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

 private:
  int w_ = 0, h_ = 0, c_ = 0;
  std::vector<T> data_;
};

using ImageF32 = Image<float>;
using ImageF64 = Image<double>;
using ImageU8 = Image<uint8_t>;

// Single-channel u8 mask; 0 = off, 255 = on (matches the PNG wire encoding).
using Mask = Image<uint8_t>;
constexpr uint8_t kMaskOn = 255;

inline uint8_t quantize_u8(float v) {
  float r = v + 0.5f;
  if (r < 0.f) r = 0.f;
  if (r > 255.f) r = 255.f;
  return static_cast<uint8_t>(r);
}

inline ImageU8 to_u8(const ImageF32& img) {
  ImageU8 out(img.width(), img.height(), img.channels());
  const float* s = img.data();
  uint8_t* d = out.data();
  for (size_t i = 0; i < img.count(); ++i) d[i] = quantize_u8(s[i]);
  return out;
}

inline ImageF32 to_f32(const ImageU8& img) {
  ImageF32 out(img.width(), img.height(), img.channels());
  const uint8_t* s = img.data();
  float* d = out.data();
  for (size_t i = 0; i < img.count(); ++i) d[i] = static_cast<float>(s[i]);
  return out;
}

}  // namespace worldgen
