#include "worldgen/oracle/multipart.hpp"

#include <cstring>

#include "worldgen/core/error.hpp"

namespace worldgen {

const std::string& default_boundary() {
  static const std::string b = "----worldgen-7f3a9c2e51d04b88";
  return b;
}

std::vector<uint8_t> multipart_encode(const std::vector<WirePart>& parts,
                                      const std::string& boundary) {
  std::vector<uint8_t> out;
  auto append = [&out](const std::string& s) { out.insert(out.end(), s.begin(), s.end()); };
  for (const auto& p : parts) {
    append("--" + boundary + "\r\n");
    append("Content-Disposition: form-data; name=\"" + p.name + "\"\r\n");
    append("Content-Type: " + p.content_type + "\r\n\r\n");
    out.insert(out.end(), p.data.begin(), p.data.end());
    append("\r\n");
  }
  append("--" + boundary + "--\r\n");
  return out;
}

namespace {

// first occurrence of needle at or after `from`, or npos
size_t find_bytes(const uint8_t* data, size_t size, size_t from, const std::string& needle) {
  if (needle.empty() || size < needle.size()) return std::string::npos;
  for (size_t i = from; i + needle.size() <= size; ++i)
    if (std::memcmp(data + i, needle.data(), needle.size()) == 0) return i;
  return std::string::npos;
}

std::string header_value(const std::string& headers, const std::string& key) {
  size_t at = headers.find(key);
  if (at == std::string::npos) return {};
  at += key.size();
  size_t end = headers.find("\r\n", at);
  return headers.substr(at, end == std::string::npos ? std::string::npos : end - at);
}

}  // namespace

std::vector<WirePart> multipart_parse(const uint8_t* data, size_t size,
                                      const std::string& boundary) {
  std::vector<WirePart> parts;
  const std::string open = "--" + boundary;
  size_t pos = find_bytes(data, size, 0, open);
  require(pos != std::string::npos, ErrorKind::Io, "multipart: opening boundary not found");
  while (true) {
    pos += open.size();
    if (pos + 2 <= size && data[pos] == '-' && data[pos + 1] == '-') break;  // terminator
    require(pos + 2 <= size && data[pos] == '\r' && data[pos + 1] == '\n', ErrorKind::Io,
            "multipart: malformed boundary line");
    pos += 2;
    size_t hdr_end = find_bytes(data, size, pos, "\r\n\r\n");
    require(hdr_end != std::string::npos, ErrorKind::Io, "multipart: unterminated part headers");
    std::string headers(reinterpret_cast<const char*>(data + pos), hdr_end - pos);
    size_t body = hdr_end + 4;
    size_t next = find_bytes(data, size, body, "\r\n" + open);
    require(next != std::string::npos, ErrorKind::Io, "multipart: unterminated part body");

    WirePart part;
    std::string disp = header_value(headers, "Content-Disposition:");
    size_t nq = disp.find("name=\"");
    require(nq != std::string::npos, ErrorKind::Io, "multipart: part without a name");
    size_t ne = disp.find('"', nq + 6);
    part.name = disp.substr(nq + 6, ne - nq - 6);
    std::string ct = header_value(headers, "Content-Type:");
    size_t b = ct.find_first_not_of(' ');
    part.content_type = b == std::string::npos ? "" : ct.substr(b);
    part.data.assign(data + body, data + next);
    parts.push_back(std::move(part));
    pos = next + 2;
  }
  return parts;
}

}  // namespace worldgen
