#pragma once

#include <memory>
#include <string>

#include "worldgen/oracle/oracle.hpp"

namespace worldgen {

// One spec string per model slot. Accepted forms:
//   inpaint:       "mock:mirror" | "mock:constant[:r,g,b]"
//   refine:        "mock:refine" | "mock:passthrough"
//   depth_rel:     "synthetic:box" | "synthetic:sphere"
//   depth_metric:  "synthetic:box" | "synthetic:sphere"
//   any slot:      "dir:<root>" | "http://host:port"
// Builtin mocks run in process (through the full wire encoding); dir/http
// talk to external responders.
struct OracleSpecs {
  std::string inpaint = "mock:mirror";
  std::string refine = "mock:passthrough";
  std::string depth_rel = "synthetic:box";
  std::string depth_metric = "synthetic:box";

  bool operator==(const OracleSpecs&) const = default;
};

// Dispatches each request to the transport for its kind, so every model slot
// can live behind a different mechanism.
class KindRoutingTransport : public OracleTransport {
 public:
  KindRoutingTransport(std::shared_ptr<OracleTransport> inpaint,
                       std::shared_ptr<OracleTransport> refine,
                       std::shared_ptr<OracleTransport> depth_rel,
                       std::shared_ptr<OracleTransport> depth_metric);
  WireResponse roundtrip(const WireRequest& req) override;

 private:
  std::shared_ptr<OracleTransport> inpaint_, refine_, depth_rel_, depth_metric_;
};

// Builds the transport for one slot; raises Config on a malformed spec or a
// builtin that does not belong in that slot.
std::shared_ptr<OracleTransport> make_transport(OracleKind slot, const std::string& spec);

// Full client over a KindRoutingTransport assembled from the four specs.
std::shared_ptr<OracleClient> make_oracle_client(const OracleSpecs& specs,
                                                 int max_in_flight = 2);

}  // namespace worldgen
