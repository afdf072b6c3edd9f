#include "worldgen/pipeline/oracles.hpp"

#include <array>
#include <cstdlib>
#include <utility>
#include <vector>

#include "worldgen/core/error.hpp"
#include "worldgen/oracle/mocks.hpp"
#include "worldgen/oracle/transport.hpp"

namespace worldgen {
namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::array<uint8_t, 3> parse_color(const std::string& s, const std::string& spec) {
  auto parts = split(s, ',');
  require(parts.size() == 3, ErrorKind::Config,
          "oracle spec '" + spec + "': constant color needs r,g,b");
  std::array<uint8_t, 3> color{};
  for (int i = 0; i < 3; ++i) {
    char* end = nullptr;
    long v = std::strtol(parts[i].c_str(), &end, 10);
    require(end != nullptr && *end == '\0' && !parts[i].empty() && v >= 0 && v <= 255,
            ErrorKind::Config,
            "oracle spec '" + spec + "': color component out of range: " + parts[i]);
    color[static_cast<size_t>(i)] = static_cast<uint8_t>(v);
  }
  return color;
}

std::shared_ptr<SyntheticScene> parse_scene(const std::string& name, const std::string& spec) {
  if (name == "box") return std::make_shared<BoxRoomScene>();
  if (name == "sphere") return std::make_shared<SphereScene>();
  raise(ErrorKind::Config, "oracle spec '" + spec + "': unknown synthetic scene '" + name + "'");
}

std::shared_ptr<OracleBackend> make_builtin(OracleKind slot, const std::string& spec) {
  auto parts = split(spec, ':');
  const std::string& family = parts[0];
  const std::string head = parts.size() > 1 ? parts[1] : "";

  if (family == "mock") {
    if (head == "mirror") {
      require(slot == OracleKind::Inpaint, ErrorKind::Config,
              "oracle spec 'mock:mirror' only fits the inpaint slot");
      require(parts.size() == 2, ErrorKind::Config, "oracle spec '" + spec + "': trailing junk");
      return std::make_shared<MirrorFillBackend>();
    }
    if (head == "constant") {
      require(slot == OracleKind::Inpaint, ErrorKind::Config,
              "oracle spec 'mock:constant' only fits the inpaint slot");
      require(parts.size() <= 3, ErrorKind::Config, "oracle spec '" + spec + "': trailing junk");
      if (parts.size() == 3) return std::make_shared<ConstantFillBackend>(parse_color(parts[2], spec));
      return std::make_shared<ConstantFillBackend>();
    }
    if (head == "refine" || head == "passthrough") {
      require(slot == OracleKind::Refine, ErrorKind::Config,
              "oracle spec 'mock:" + head + "' only fits the refine slot");
      require(parts.size() == 2, ErrorKind::Config, "oracle spec '" + spec + "': trailing junk");
      return std::make_shared<RefineBackend>(head == "refine");
    }
    raise(ErrorKind::Config, "oracle spec '" + spec + "': unknown mock '" + head + "'");
  }

  if (family == "synthetic") {
    require(slot == OracleKind::DepthRel || slot == OracleKind::DepthMetric, ErrorKind::Config,
            "oracle spec '" + spec + "' only fits a depth slot");
    require(parts.size() == 2, ErrorKind::Config, "oracle spec '" + spec + "': trailing junk");
    return std::make_shared<SyntheticDepthBackend>(parse_scene(head, spec),
                                                   slot == OracleKind::DepthMetric);
  }

  raise(ErrorKind::Config, "oracle spec '" + spec + "': unknown backend family '" + family + "'");
}

}  // namespace

KindRoutingTransport::KindRoutingTransport(std::shared_ptr<OracleTransport> inpaint,
                                           std::shared_ptr<OracleTransport> refine,
                                           std::shared_ptr<OracleTransport> depth_rel,
                                           std::shared_ptr<OracleTransport> depth_metric)
    : inpaint_(std::move(inpaint)), refine_(std::move(refine)), depth_rel_(std::move(depth_rel)),
      depth_metric_(std::move(depth_metric)) {}

WireResponse KindRoutingTransport::roundtrip(const WireRequest& req) {
  switch (req.kind) {
    case OracleKind::Inpaint: return inpaint_->roundtrip(req);
    case OracleKind::Refine: return refine_->roundtrip(req);
    case OracleKind::DepthRel: return depth_rel_->roundtrip(req);
    case OracleKind::DepthMetric: return depth_metric_->roundtrip(req);
  }
  raise(ErrorKind::Contract, "unreachable oracle kind");
}

std::shared_ptr<OracleTransport> make_transport(OracleKind slot, const std::string& spec) {
  require(!spec.empty(), ErrorKind::Config,
          "oracle spec for " + kind_to_string(slot) + " is empty");

  if (spec.rfind("dir:", 0) == 0) {
    std::string root = spec.substr(4);
    require(!root.empty(), ErrorKind::Config, "oracle spec '" + spec + "': missing directory");
    return std::make_shared<DirectoryTransport>(root);
  }
  if (spec.rfind("http://", 0) == 0) {
    std::string rest = spec.substr(7);
    size_t colon = rest.rfind(':');
    require(colon != std::string::npos && colon > 0, ErrorKind::Config,
            "oracle spec '" + spec + "': expected http://host:port");
    std::string host = rest.substr(0, colon);
    std::string port_s = rest.substr(colon + 1);
    char* end = nullptr;
    long port = std::strtol(port_s.c_str(), &end, 10);
    require(end != nullptr && *end == '\0' && !port_s.empty() && port > 0 && port <= 65535,
            ErrorKind::Config, "oracle spec '" + spec + "': bad port '" + port_s + "'");
    return std::make_shared<HttpTransport>(host, static_cast<int>(port));
  }
  return std::make_shared<BuiltinTransport>(make_builtin(slot, spec));
}

std::shared_ptr<OracleClient> make_oracle_client(const OracleSpecs& specs, int max_in_flight) {
  auto transport = std::make_shared<KindRoutingTransport>(
      make_transport(OracleKind::Inpaint, specs.inpaint),
      make_transport(OracleKind::Refine, specs.refine),
      make_transport(OracleKind::DepthRel, specs.depth_rel),
      make_transport(OracleKind::DepthMetric, specs.depth_metric));
  return std::make_shared<OracleClient>(transport, max_in_flight);
}

}  // namespace worldgen
