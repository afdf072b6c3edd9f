#pragma once

#include <json.hpp>
#include <memory>
#include <optional>
#include <string>

#include "worldgen/core/image.hpp"

namespace worldgen {

struct CameraPose;

enum class OracleKind { Inpaint, Refine, DepthRel, DepthMetric };

std::string kind_to_string(OracleKind k);
OracleKind kind_from_string(const std::string& s);

// What actually crosses the wire: 8-bit images, PFM depth. The builtin
// transport round-trips through the same encoding, so swapping transports can
// never change a single byte of any result.
struct WireRequest {
  OracleKind kind = OracleKind::Inpaint;
  ImageU8 rgb;                  // 3-channel
  std::optional<ImageU8> mask;  // 1-channel, 255 = generate here
  std::string prompt;
  double strength = 0.3;  // refine only
  uint64_t seed = 0;
  nlohmann::json meta;  // auxiliary context (pose/fov for synthetic backends)
};

struct WireResponse {
  bool ok = false;
  std::string message;               // error text when !ok
  std::optional<ImageU8> rgb;        // inpaint / refine
  std::optional<ImageF32> depth;     // depth kinds, 1-channel
  std::optional<ImageU8> confidence; // depth kinds, 1-channel
  bool metric = false;
};

// A responder (mock model or test server core).
struct OracleBackend {
  virtual ~OracleBackend() = default;
  virtual WireResponse handle(const WireRequest& req) = 0;
};

struct OracleTransport {
  virtual ~OracleTransport() = default;
  virtual WireResponse roundtrip(const WireRequest& req) = 0;
};

// Client-side view in the working float domain.
struct OracleRequest {
  OracleKind kind = OracleKind::Inpaint;
  const ImageF32* rgb = nullptr;
  const Mask* mask = nullptr;  // required for inpaint/refine
  std::string prompt;
  double strength = 0.3;
  uint64_t seed = 0;
  nlohmann::json meta;
};

struct OracleDepth {
  ImageF32 values;      // 1-channel, range along the ray
  ImageF32 confidence;  // 1-channel in [0, 1]
  bool metric = false;
};

struct OracleResult {
  ImageF32 rgb;  // empty unless inpaint/refine
  std::optional<OracleDepth> depth;
};

// Meta block carrying the camera ({"pose":{"rotation":[9 row-major],
// "position":[3]},"fov_x","fov_y"}), consumed by pose-aware backends.
nlohmann::json camera_meta(const CameraPose& pose, double fov_x, double fov_y);

// Thread-safe front door; bounds the number of requests in flight and turns
// error responses into exceptions of kind Oracle.
class OracleClient {
 public:
  explicit OracleClient(std::shared_ptr<OracleTransport> transport, int max_in_flight = 2);
  OracleResult call(const OracleRequest& req);
  int calls_made() const;

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

}  // namespace worldgen
