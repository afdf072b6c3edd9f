#include <cstring>

#include "worldgen/core/error.hpp"
#include "worldgen/core/io_png.hpp"
#include "worldgen/distortion/field.hpp"

namespace worldgen {

// Checkpoint layout (little-endian):
//   "WGDF" | u32 version=1 | u32 grid_res | u32 n_freq | u32 code_dim |
//   u32 hidden | f64 offset_scale | u32 tensor_count | tensors...
// Each tensor: u32 name_len | name | u32 rows | u32 cols | rows*cols f32
// (row-major). Weight tensors are (out x in); codes are (1 x code_dim).

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.insert(out.end(), reinterpret_cast<uint8_t*>(&v), reinterpret_cast<uint8_t*>(&v) + 4);
}

void put_f64(std::vector<uint8_t>& out, double v) {
  out.insert(out.end(), reinterpret_cast<uint8_t*>(&v), reinterpret_cast<uint8_t*>(&v) + 8);
}

void put_tensor(std::vector<uint8_t>& out, const std::string& name, uint32_t rows, uint32_t cols,
                const std::vector<float>& vals) {
  put_u32(out, uint32_t(name.size()));
  out.insert(out.end(), name.begin(), name.end());
  put_u32(out, rows);
  put_u32(out, cols);
  const uint8_t* p = reinterpret_cast<const uint8_t*>(vals.data());
  out.insert(out.end(), p, p + vals.size() * 4);
}

struct Reader {
  const std::vector<uint8_t>& buf;
  size_t pos = 0;

  void need(size_t n) {
    require(pos + n <= buf.size(), ErrorKind::Io, "distortion checkpoint truncated");
  }
  uint32_t u32() {
    need(4);
    uint32_t v;
    std::memcpy(&v, buf.data() + pos, 4);
    pos += 4;
    return v;
  }
  double f64() {
    need(8);
    double v;
    std::memcpy(&v, buf.data() + pos, 8);
    pos += 8;
    return v;
  }
  std::string str(size_t n) {
    need(n);
    std::string s(buf.begin() + pos, buf.begin() + pos + n);
    pos += n;
    return s;
  }
  std::vector<float> f32s(size_t n) {
    need(n * 4);
    std::vector<float> v(n);
    std::memcpy(v.data(), buf.data() + pos, n * 4);
    pos += n * 4;
    return v;
  }
};

// column-major (in-major) doubles -> row-major float32 (out x in)
std::vector<float> pack_weight(const double* w, int in, int out) {
  std::vector<float> v(static_cast<size_t>(in) * out);
  for (int r = 0; r < out; ++r)
    for (int c = 0; c < in; ++c) v[static_cast<size_t>(r) * in + c] = float(w[size_t(c) * out + r]);
  return v;
}

void unpack_weight(const std::vector<float>& v, int in, int out, double* w) {
  for (int r = 0; r < out; ++r)
    for (int c = 0; c < in; ++c) w[size_t(c) * out + r] = double(v[static_cast<size_t>(r) * in + c]);
}

std::vector<float> pack_vec(const double* b, int n) {
  std::vector<float> v(n);
  for (int i = 0; i < n; ++i) v[i] = float(b[i]);
  return v;
}

}  // namespace

void save_distortion(const DistortionField& field, const std::string& path) {
  const DistortionConfig& cfg = field.config();
  const double* p = field.params().data();
  const int in1 = field.input_dim(), h = cfg.hidden;

  std::vector<uint8_t> out;
  out.insert(out.end(), {'W', 'G', 'D', 'F'});
  put_u32(out, 1);
  put_u32(out, uint32_t(cfg.grid_res));
  put_u32(out, uint32_t(cfg.n_freq));
  put_u32(out, uint32_t(cfg.code_dim));
  put_u32(out, uint32_t(cfg.hidden));
  put_f64(out, cfg.offset_scale);

  auto ids = field.image_ids();
  put_u32(out, uint32_t(6 + ids.size()));
  put_tensor(out, "layer1.weight", uint32_t(h), uint32_t(in1),
             pack_weight(p + field.w1_offset(), in1, h));
  put_tensor(out, "layer1.bias", 1, uint32_t(h), pack_vec(p + field.b1_offset(), h));
  put_tensor(out, "layer2.weight", uint32_t(h), uint32_t(h),
             pack_weight(p + field.w2_offset(), h, h));
  put_tensor(out, "layer2.bias", 1, uint32_t(h), pack_vec(p + field.b2_offset(), h));
  put_tensor(out, "layer3.weight", 2, uint32_t(h), pack_weight(p + field.w3_offset(), h, 2));
  put_tensor(out, "layer3.bias", 1, 2, pack_vec(p + field.b3_offset(), 2));
  for (const auto& id : ids)
    put_tensor(out, "code." + id, 1, uint32_t(cfg.code_dim),
               pack_vec(field.code(id).data(), cfg.code_dim));

  write_file(path, out.data(), out.size());
}

DistortionField load_distortion(const std::string& path) {
  auto buf = read_file(path);
  Reader r{buf};
  require(r.str(4) == "WGDF", ErrorKind::Io, "not a distortion checkpoint: " + path);
  require(r.u32() == 1, ErrorKind::Io, "unsupported distortion checkpoint version");

  DistortionConfig cfg;
  cfg.grid_res = int(r.u32());
  cfg.n_freq = int(r.u32());
  cfg.code_dim = int(r.u32());
  cfg.hidden = int(r.u32());
  cfg.offset_scale = r.f64();
  DistortionField field(cfg, 0);

  const int in1 = field.input_dim(), h = cfg.hidden;
  double* p = field.params().data();
  uint32_t count = r.u32();
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = r.str(r.u32());
    uint32_t rows = r.u32(), cols = r.u32();
    auto vals = r.f32s(static_cast<size_t>(rows) * cols);
    auto expect = [&](uint32_t er, uint32_t ec) {
      require(rows == er && cols == ec, ErrorKind::Io,
              "distortion checkpoint: bad shape for " + name);
    };
    if (name == "layer1.weight") {
      expect(uint32_t(h), uint32_t(in1));
      unpack_weight(vals, in1, h, p + field.w1_offset());
    } else if (name == "layer1.bias") {
      expect(1, uint32_t(h));
      for (int j = 0; j < h; ++j) p[field.b1_offset() + j] = vals[j];
    } else if (name == "layer2.weight") {
      expect(uint32_t(h), uint32_t(h));
      unpack_weight(vals, h, h, p + field.w2_offset());
    } else if (name == "layer2.bias") {
      expect(1, uint32_t(h));
      for (int j = 0; j < h; ++j) p[field.b2_offset() + j] = vals[j];
    } else if (name == "layer3.weight") {
      expect(2, uint32_t(h));
      unpack_weight(vals, h, 2, p + field.w3_offset());
    } else if (name == "layer3.bias") {
      expect(1, 2);
      p[field.b3_offset()] = vals[0];
      p[field.b3_offset() + 1] = vals[1];
    } else if (name.rfind("code.", 0) == 0) {
      expect(1, uint32_t(cfg.code_dim));
      std::string id = name.substr(5);
      field.register_image(id);
      auto& c = field.code(id);
      for (int j = 0; j < cfg.code_dim; ++j) c[j] = vals[j];
    } else {
      raise(ErrorKind::Io, "distortion checkpoint: unknown tensor " + name);
    }
  }
  return field;
}

}  // namespace worldgen
