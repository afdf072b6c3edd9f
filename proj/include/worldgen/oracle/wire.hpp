#pragma once

#include <vector>

#include "worldgen/oracle/oracle.hpp"

namespace worldgen {

// One named blob of an exchange. The manifest part is JSON and references the
// other parts by name; file and multipart encodings share this layout.
struct WirePart {
  std::string name;
  std::string content_type;  // application/json, image/png, application/x-pfm
  std::vector<uint8_t> data;
};

std::vector<WirePart> encode_request(const WireRequest& req);
WireRequest decode_request(const std::vector<WirePart>& parts);

std::vector<WirePart> encode_response(const WireResponse& resp);
WireResponse decode_response(const std::vector<WirePart>& parts);

// name + content type -> on-disk filename ("manifest" handled by the caller)
std::string part_filename(const WirePart& part);

}  // namespace worldgen
