#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "worldgen/oracle/wire.hpp"

namespace worldgen {

// Minimal multipart codec shared by the HTTP request and response paths.
// Encoded form, per part:
//   --<boundary>\r\n
//   Content-Disposition: form-data; name="<name>"\r\n
//   Content-Type: <type>\r\n\r\n
//   <bytes>\r\n
// terminated by --<boundary>--\r\n
std::vector<uint8_t> multipart_encode(const std::vector<WirePart>& parts,
                                      const std::string& boundary);
std::vector<WirePart> multipart_parse(const uint8_t* data, size_t size,
                                      const std::string& boundary);

const std::string& default_boundary();

}  // namespace worldgen
