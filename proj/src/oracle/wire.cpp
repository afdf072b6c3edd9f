#include "worldgen/oracle/wire.hpp"

#include "worldgen/core/io_pfm.hpp"
#include "worldgen/core/io_png.hpp"
#include "worldgen/geometry/camera.hpp"

namespace worldgen {

using nlohmann::json;

std::string kind_to_string(OracleKind k) {
  switch (k) {
    case OracleKind::Inpaint: return "inpaint";
    case OracleKind::Refine: return "refine";
    case OracleKind::DepthRel: return "depth_rel";
    case OracleKind::DepthMetric: return "depth_metric";
  }
  raise(ErrorKind::Contract, "bad OracleKind");
}

OracleKind kind_from_string(const std::string& s) {
  if (s == "inpaint") return OracleKind::Inpaint;
  if (s == "refine") return OracleKind::Refine;
  if (s == "depth_rel") return OracleKind::DepthRel;
  if (s == "depth_metric") return OracleKind::DepthMetric;
  raise(ErrorKind::Io, "unknown oracle kind: " + s);
}

static WirePart json_part(const std::string& name, const json& j) {
  std::string s = j.dump(2);
  return {name, "application/json", std::vector<uint8_t>(s.begin(), s.end())};
}

static json parse_manifest(const std::vector<WirePart>& parts) {
  for (const auto& p : parts)
    if (p.name == "manifest") return json::parse(p.data.begin(), p.data.end());
  raise(ErrorKind::Io, "exchange is missing the manifest part");
}

static const WirePart* find_part(const std::vector<WirePart>& parts, const std::string& name) {
  for (const auto& p : parts)
    if (p.name == name) return &p;
  return nullptr;
}

static const WirePart& need_part(const std::vector<WirePart>& parts, const std::string& name) {
  const WirePart* p = find_part(parts, name);
  require(p != nullptr, ErrorKind::Io, "exchange is missing part '" + name + "'");
  return *p;
}

std::vector<WirePart> encode_request(const WireRequest& req) {
  json m;
  m["kind"] = kind_to_string(req.kind);
  m["prompt"] = req.prompt;
  m["strength"] = req.strength;
  m["seed"] = req.seed;
  m["meta"] = req.meta.is_null() ? json::object() : req.meta;
  m["image"] = "image";
  if (req.mask) m["mask"] = "mask";

  std::vector<WirePart> parts;
  parts.push_back(json_part("manifest", m));
  parts.push_back({"image", "image/png", encode_png(req.rgb)});
  if (req.mask) parts.push_back({"mask", "image/png", encode_png(*req.mask)});
  return parts;
}

WireRequest decode_request(const std::vector<WirePart>& parts) {
  json m = parse_manifest(parts);
  WireRequest req;
  req.kind = kind_from_string(m.at("kind").get<std::string>());
  req.prompt = m.value("prompt", std::string());
  req.strength = m.value("strength", 0.3);
  req.seed = m.value("seed", uint64_t{0});
  req.meta = m.value("meta", json::object());
  const auto& img = need_part(parts, m.at("image").get<std::string>());
  req.rgb = decode_png(img.data.data(), img.data.size());
  require(req.rgb.channels() == 3, ErrorKind::Io, "request image must be rgb");
  if (m.contains("mask")) {
    const auto& mp = need_part(parts, m.at("mask").get<std::string>());
    ImageU8 mask = decode_png(mp.data.data(), mp.data.size());
    require(mask.channels() == 1, ErrorKind::Io, "request mask must be single channel");
    require(mask.width() == req.rgb.width() && mask.height() == req.rgb.height(), ErrorKind::Io,
            "request mask size mismatch");
    req.mask = std::move(mask);
  }
  return req;
}

std::vector<WirePart> encode_response(const WireResponse& resp) {
  json m;
  m["status"] = resp.ok ? "ok" : "error";
  if (!resp.ok) {
    m["message"] = resp.message;
    return {json_part("manifest", m)};
  }
  std::vector<WirePart> parts;
  if (resp.rgb) {
    m["rgb"] = "rgb";
    parts.push_back({"rgb", "image/png", encode_png(*resp.rgb)});
  }
  if (resp.depth) {
    m["depth"] = "depth";
    m["metric"] = resp.metric;
    parts.push_back({"depth", "application/x-pfm", encode_pfm(*resp.depth)});
    require(resp.confidence.has_value(), ErrorKind::Contract, "depth response needs confidence");
    m["confidence"] = "confidence";
    parts.push_back({"confidence", "image/png", encode_png(*resp.confidence)});
  }
  parts.insert(parts.begin(), json_part("manifest", m));
  return parts;
}

WireResponse decode_response(const std::vector<WirePart>& parts) {
  json m = parse_manifest(parts);
  WireResponse resp;
  resp.ok = m.at("status").get<std::string>() == "ok";
  if (!resp.ok) {
    resp.message = m.value("message", std::string("unspecified oracle error"));
    return resp;
  }
  if (m.contains("rgb")) {
    const auto& p = need_part(parts, m.at("rgb").get<std::string>());
    resp.rgb = decode_png(p.data.data(), p.data.size());
  }
  if (m.contains("depth")) {
    const auto& p = need_part(parts, m.at("depth").get<std::string>());
    resp.depth = decode_pfm(p.data.data(), p.data.size());
    resp.metric = m.value("metric", false);
    const auto& c = need_part(parts, m.at("confidence").get<std::string>());
    resp.confidence = decode_png(c.data.data(), c.data.size());
    require(resp.confidence->channels() == 1, ErrorKind::Io, "confidence must be single channel");
  }
  return resp;
}

std::string part_filename(const WirePart& part) {
  if (part.content_type == "application/json") return part.name + ".json";
  if (part.content_type == "image/png") return part.name + ".png";
  if (part.content_type == "application/x-pfm") return part.name + ".pfm";
  return part.name + ".bin";
}

nlohmann::json camera_meta(const CameraPose& pose, double fov_x, double fov_y) {
  std::vector<double> r(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[size_t(i) * 3 + j] = pose.rotation(i, j);
  nlohmann::json meta;
  meta["pose"]["rotation"] = r;
  meta["pose"]["position"] = {pose.position.x(), pose.position.y(), pose.position.z()};
  meta["fov_x"] = fov_x;
  meta["fov_y"] = fov_y;
  return meta;
}

}  // namespace worldgen
