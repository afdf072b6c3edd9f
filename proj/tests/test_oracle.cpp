#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "worldgen/core/rng.hpp"
#include "worldgen/geometry/camera.hpp"
#include "worldgen/oracle/mocks.hpp"
#include "worldgen/oracle/multipart.hpp"
#include "worldgen/oracle/transport.hpp"
#include "worldgen/oracle/wire.hpp"

using namespace worldgen;
namespace fs = std::filesystem;

namespace {

ImageU8 gradient_rgb(int w, int h) {
  ImageU8 img(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = static_cast<uint8_t>((x * 255) / std::max(1, w - 1));
      img.at(x, y, 1) = static_cast<uint8_t>((y * 255) / std::max(1, h - 1));
      img.at(x, y, 2) = static_cast<uint8_t>(((x + y) * 127) % 256);
    }
  return img;
}

WireRequest inpaint_request(int w, int h) {
  WireRequest req;
  req.kind = OracleKind::Inpaint;
  req.rgb = gradient_rgb(w, h);
  Mask m(w, h, 1, 0);
  for (int y = 0; y < h; ++y)
    for (int x = w / 2; x < w; ++x) m.at(x, y) = kMaskOn;
  req.mask = m;
  req.prompt = "a quiet street";
  req.seed = 42;
  return req;
}

}  // namespace

TEST_CASE("request wire codec round trips") {
  WireRequest req = inpaint_request(24, 16);
  req.meta = {{"hint", 3}};
  req.strength = 0.45;
  WireRequest back = decode_request(encode_request(req));
  CHECK(back.kind == req.kind);
  CHECK(back.rgb == req.rgb);
  CHECK(back.mask.has_value());
  CHECK(*back.mask == *req.mask);
  CHECK(back.prompt == req.prompt);
  CHECK(back.strength == req.strength);
  CHECK(back.seed == req.seed);
  CHECK(back.meta.at("hint") == 3);
}

TEST_CASE("response wire codec round trips, ok and error") {
  WireResponse ok;
  ok.ok = true;
  ok.rgb = gradient_rgb(9, 7);
  WireResponse back = decode_response(encode_response(ok));
  CHECK(back.ok);
  CHECK(*back.rgb == *ok.rgb);

  WireResponse depth;
  depth.ok = true;
  depth.metric = true;
  depth.depth = ImageF32(5, 4, 1, 2.5f);
  depth.confidence = ImageU8(5, 4, 1, 200);
  back = decode_response(encode_response(depth));
  CHECK(back.ok);
  CHECK(back.metric);
  CHECK(*back.depth == *depth.depth);
  CHECK(*back.confidence == *depth.confidence);

  WireResponse err;
  err.ok = false;
  err.message = "model exploded";
  back = decode_response(encode_response(err));
  CHECK(!back.ok);
  CHECK(back.message == "model exploded");
}

TEST_CASE("multipart round trips binary parts") {
  std::vector<WirePart> parts = {
      {"manifest", "application/json", {'{', '}'}},
      {"image", "image/png", {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n', '-', '-'}},
  };
  auto body = multipart_encode(parts, default_boundary());
  auto back = multipart_parse(body.data(), body.size(), default_boundary());
  REQUIRE(back.size() == 2);
  CHECK(back[0].name == "manifest");
  CHECK(back[1].name == "image");
  CHECK(back[1].content_type == "image/png");
  CHECK(back[1].data == parts[1].data);
}

TEST_CASE("constant fill paints only the hole") {
  ConstantFillBackend backend({1, 2, 3});
  WireRequest req = inpaint_request(20, 10);
  WireResponse resp = backend.handle(req);
  REQUIRE(resp.ok);
  for (int y = 0; y < 10; ++y) {
    CHECK(resp.rgb->at(3, y, 0) == req.rgb.at(3, y, 0));
    CHECK(resp.rgb->at(15, y, 0) == 1);
    CHECK(resp.rgb->at(15, y, 2) == 3);
  }
}

TEST_CASE("mirror fill reflects known content and is deterministic") {
  MirrorFillBackend backend;
  WireRequest req = inpaint_request(32, 12);
  WireResponse a = backend.handle(req);
  WireResponse b = backend.handle(req);
  REQUIRE(a.ok);
  CHECK(*a.rgb == *b.rgb);
  // left half untouched
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 16; ++x)
      for (int c = 0; c < 3; ++c) CHECK(a.rgb->at(x, y, c) == req.rgb.at(x, y, c));
  // first hole column reflects the last known column's neighborhood
  CHECK(a.rgb->at(16, 6, 1) == req.rgb.at(14, 6, 1));
  // full-hole request falls back to mid-gray
  WireRequest allhole = req;
  allhole.mask = Mask(32, 12, 1, kMaskOn);
  WireResponse g = backend.handle(allhole);
  REQUIRE(g.ok);
  CHECK(g.rgb->at(5, 5, 0) == 127);
}

TEST_CASE("refine with the filter disabled is an exact pass-through") {
  RefineBackend plain(false);
  WireRequest req = inpaint_request(16, 16);
  req.kind = OracleKind::Refine;
  WireResponse resp = plain.handle(req);
  REQUIRE(resp.ok);
  CHECK(*resp.rgb == req.rgb);

  RefineBackend sharp(true);
  resp = sharp.handle(req);
  REQUIRE(resp.ok);
  CHECK(*resp.rgb != req.rgb);
  // untouched outside the mask
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 8; ++x) CHECK(resp.rgb->at(x, y, 0) == req.rgb.at(x, y, 0));
}

TEST_CASE("synthetic depth ray-casts the scene carried in meta") {
  auto scene = std::make_shared<BoxRoomScene>(Vec3(4.0, 5.0, 2.0));
  SyntheticDepthBackend metric(scene, true);
  SyntheticDepthBackend rel(scene, false);

  WireRequest req;
  req.kind = OracleKind::DepthMetric;
  req.rgb = gradient_rgb(33, 33);  // odd size: center pixel looks straight ahead
  req.seed = 777;
  req.meta = camera_meta(CameraPose{}, deg2rad(60.0), deg2rad(60.0));
  WireResponse m = metric.handle(req);
  REQUIRE(m.ok);
  CHECK(m.metric);
  CHECK(m.depth->at(16, 16) == doctest::Approx(5.0).epsilon(1e-5));  // straight to the +y wall

  req.kind = OracleKind::DepthRel;
  WireResponse r = rel.handle(req);
  REQUIRE(r.ok);
  CHECK(!r.metric);
  double a = SyntheticDepthBackend::hidden_scale(777);
  CHECK(a >= 0.5);
  CHECK(a <= 2.0);
  CHECK(r.depth->at(16, 16) == doctest::Approx(5.0 * a).epsilon(1e-5));
  CHECK(SyntheticDepthBackend::hidden_scale(778) != a);

  req.meta = nlohmann::json::object();
  WireResponse bad = rel.handle(req);
  CHECK(!bad.ok);
}

TEST_CASE("all three transports return byte-identical results") {
  auto backend = std::make_shared<MirrorFillBackend>();
  WireRequest req = inpaint_request(40, 20);

  BuiltinTransport builtin(backend);
  WireResponse r1 = builtin.roundtrip(req);

  auto dir = fs::temp_directory_path() / "wg_oracle_dir";
  fs::remove_all(dir);
  DirectoryOracleServer dserver(dir.string(), backend);
  dserver.start(2);
  DirectoryTransport dtransport(dir.string(), {2, 5000});
  WireResponse r2 = dtransport.roundtrip(req);
  dserver.stop();

  HttpOracleServer hserver(backend);
  int port = hserver.start();
  HttpTransport htransport("127.0.0.1", port);
  WireResponse r3 = htransport.roundtrip(req);
  hserver.stop();

  REQUIRE(r1.ok);
  REQUIRE(r2.ok);
  REQUIRE(r3.ok);
  CHECK(*r1.rgb == *r2.rgb);
  CHECK(*r1.rgb == *r3.rgb);
  fs::remove_all(dir);
}

TEST_CASE("http transport retries 5xx with backoff, then gives up") {
  auto backend = std::make_shared<ConstantFillBackend>();
  HttpOracleServer server(backend);
  int port = server.start();

  server.fail_next(2);
  HttpTransport patient("127.0.0.1", port, {3, 5, 30});
  WireResponse ok = patient.roundtrip(inpaint_request(8, 8));
  CHECK(ok.ok);

  server.fail_next(10);
  HttpTransport hasty("127.0.0.1", port, {1, 5, 30});
  CHECK_THROWS_AS(hasty.roundtrip(inpaint_request(8, 8)), worldgen::Error);
  server.stop();
}

TEST_CASE("directory transport times out without a responder") {
  auto dir = fs::temp_directory_path() / "wg_oracle_timeout";
  fs::remove_all(dir);
  DirectoryTransport t(dir.string(), {5, 60});
  CHECK_THROWS_AS(t.roundtrip(inpaint_request(4, 4)), worldgen::Error);
  fs::remove_all(dir);
}

TEST_CASE("client converts domains and raises oracle errors") {
  auto backend = std::make_shared<ConstantFillBackend>(std::array<uint8_t, 3>{10, 20, 30});
  OracleClient client(std::make_shared<BuiltinTransport>(backend), 2);

  ImageF32 rgb(12, 6, 3, 100.25f);
  Mask mask(12, 6, 1, 0);
  mask.at(5, 3) = kMaskOn;
  OracleRequest req;
  req.kind = OracleKind::Inpaint;
  req.rgb = &rgb;
  req.mask = &mask;
  OracleResult res = client.call(req);
  CHECK(res.rgb.at(5, 3, 0) == 10.0f);
  CHECK(res.rgb.at(0, 0, 0) == 100.0f);  // quantized once on the wire
  CHECK(client.calls_made() == 1);

  req.kind = OracleKind::Refine;  // constant backend rejects refine
  CHECK_THROWS_WITH_AS(client.call(req), doctest::Contains("constant-fill"), worldgen::Error);

  req.kind = OracleKind::Inpaint;
  req.mask = nullptr;
  CHECK_THROWS_AS(client.call(req), worldgen::Error);
}
