#include "worldgen/lift/io_ply.hpp"

#include <cstring>
#include <sstream>

#include "worldgen/core/io_png.hpp"

namespace worldgen {

namespace {

const char* kHeaderProps =
    "property float x\n"
    "property float y\n"
    "property float z\n"
    "property uchar red\n"
    "property uchar green\n"
    "property uchar blue\n"
    "property float confidence\n"
    "property ushort source_view\n";

constexpr size_t kVertexBytes = 3 * 4 + 3 + 4 + 2;

template <typename T>
void put(std::string& buf, T v) {
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.append(raw, sizeof(T));  // host is little-endian; asserted below
}

template <typename T>
T take(const uint8_t*& p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  p += sizeof(T);
  return v;
}

}  // namespace

void write_ply(const std::string& path, const PointCloud& pc) {
  static_assert(__BYTE_ORDER__ == __ORDER_LITTLE_ENDIAN__, "PLY writer assumes LE host");
  pc.validate();
  std::string out;
  out += "ply\nformat binary_little_endian 1.0\nelement vertex " + std::to_string(pc.size()) +
         "\n" + kHeaderProps + "end_header\n";
  out.reserve(out.size() + pc.size() * kVertexBytes);
  for (size_t i = 0; i < pc.size(); ++i) {
    const Vec3& p = pc.positions[i];
    put(out, float(p.x()));
    put(out, float(p.y()));
    put(out, float(p.z()));
    for (int c = 0; c < 3; ++c) put(out, quantize_u8(pc.colors[i][c]));
    put(out, pc.confidence[i]);
    require(pc.source_view[i] <= 0xffff, ErrorKind::Contract, "ply: source_view exceeds uint16");
    put(out, uint16_t(pc.source_view[i]));
  }
  write_file(path, out.data(), out.size());
}

PointCloud read_ply(const std::string& path) {
  std::vector<uint8_t> raw = read_file(path);
  std::string text(raw.begin(), raw.end());
  size_t header_end = text.find("end_header\n");
  require(header_end != std::string::npos, ErrorKind::Io, "ply: missing end_header: " + path);
  std::string header = text.substr(0, header_end);

  std::istringstream hs(header);
  std::string line;
  size_t count = 0;
  std::vector<std::string> props;
  bool saw_format = false;
  while (std::getline(hs, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      require(fmt == "binary_little_endian", ErrorKind::Io, "ply: unsupported format " + fmt);
      saw_format = true;
    } else if (word == "element") {
      std::string name;
      ls >> name >> count;
      require(name == "vertex", ErrorKind::Io, "ply: unsupported element " + name);
    } else if (word == "property") {
      std::string type, name;
      ls >> type >> name;
      props.push_back(type + " " + name);
    }
  }
  require(saw_format, ErrorKind::Io, "ply: header lacks a format line: " + path);
  const std::vector<std::string> expect = {"float x",          "float y",       "float z",
                                           "uchar red",        "uchar green",   "uchar blue",
                                           "float confidence", "ushort source_view"};
  require(props == expect, ErrorKind::Io, "ply: unexpected vertex layout: " + path);

  size_t body = header_end + std::strlen("end_header\n");
  require(raw.size() - body == count * kVertexBytes, ErrorKind::Io,
          "ply: body size disagrees with vertex count: " + path);

  PointCloud pc;
  pc.reserve(count);
  const uint8_t* p = raw.data() + body;
  for (size_t i = 0; i < count; ++i) {
    float x = take<float>(p), y = take<float>(p), z = take<float>(p);
    std::array<float, 3> col;
    for (int c = 0; c < 3; ++c) col[size_t(c)] = float(take<uint8_t>(p));
    float conf = take<float>(p);
    uint16_t view = take<uint16_t>(p);
    pc.push(Vec3(x, y, z), col, conf, view);
  }
  return pc;
}

}  // namespace worldgen
