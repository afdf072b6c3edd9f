#include "worldgen/oracle/transport.hpp"

#include <httplib.h>

#include <chrono>
#include <filesystem>
#include <semaphore>

#include "worldgen/core/io_png.hpp"
#include "worldgen/oracle/multipart.hpp"
#include "worldgen/oracle/wire.hpp"

namespace fs = std::filesystem;

namespace worldgen {

WireResponse CompositeBackend::handle(const WireRequest& req) {
  std::shared_ptr<OracleBackend> target;
  switch (req.kind) {
    case OracleKind::Inpaint: target = inpaint_; break;
    case OracleKind::Refine: target = refine_; break;
    case OracleKind::DepthRel: target = depth_rel_; break;
    case OracleKind::DepthMetric: target = depth_metric_; break;
  }
  if (!target) {
    WireResponse r;
    r.ok = false;
    r.message = "no backend configured for kind " + kind_to_string(req.kind);
    return r;
  }
  return target->handle(req);
}

WireResponse BuiltinTransport::roundtrip(const WireRequest& req) {
  WireRequest wire_req = decode_request(encode_request(req));
  WireResponse resp = backend_->handle(wire_req);
  return decode_response(encode_response(resp));
}

// ---------------------------------------------------------------- directory

static void write_parts(const fs::path& dir, const std::vector<WirePart>& parts,
                        const std::string& manifest_name) {
  for (const auto& p : parts) {
    std::string fname = p.name == "manifest" ? manifest_name : part_filename(p);
    write_file((dir / fname).string(), p.data.data(), p.data.size());
  }
}

static std::vector<WirePart> read_parts(const fs::path& dir, const std::string& manifest_name) {
  std::vector<WirePart> parts;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string fname = e.path().filename().string();
    if (fname.ends_with(".ready")) continue;
    WirePart p;
    std::string stem = e.path().stem().string();
    std::string ext = e.path().extension().string();
    if (fname == manifest_name) {
      p.name = "manifest";
      p.content_type = "application/json";
    } else if (stem == "request" || stem == "response") {
      continue;  // the other side's manifest
    } else {
      p.name = stem;
      p.content_type = ext == ".png"   ? "image/png"
                       : ext == ".pfm" ? "application/x-pfm"
                                       : "application/octet-stream";
    }
    p.data = read_file(e.path().string());
    parts.push_back(std::move(p));
  }
  return parts;
}

DirectoryTransport::DirectoryTransport(std::string root, DirectoryTransportOptions opt)
    : root_(std::move(root)), opt_(opt) {
  fs::create_directories(root_);
}

WireResponse DirectoryTransport::roundtrip(const WireRequest& req) {
  uint64_t n = counter_.fetch_add(1);
  char name[64];
  std::snprintf(name, sizeof(name), "job_%06llu_%016llx", static_cast<unsigned long long>(n),
                static_cast<unsigned long long>(req.seed));
  fs::path dir = fs::path(root_) / name;
  fs::create_directories(dir);
  write_parts(dir, encode_request(req), "request.json");
  write_file((dir / "request.ready").string(), "", 0);

  auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(opt_.timeout_ms);
  while (!fs::exists(dir / "response.ready")) {
    require(std::chrono::steady_clock::now() < deadline, ErrorKind::Oracle,
            "timed out waiting for oracle response in " + dir.string());
    std::this_thread::sleep_for(std::chrono::milliseconds(opt_.poll_ms));
  }
  return decode_response(read_parts(dir, "response.json"));
}

DirectoryOracleServer::DirectoryOracleServer(std::string root,
                                             std::shared_ptr<OracleBackend> backend)
    : root_(std::move(root)), backend_(std::move(backend)) {
  fs::create_directories(root_);
}

DirectoryOracleServer::~DirectoryOracleServer() { stop(); }

int DirectoryOracleServer::process_pending() {
  int handled = 0;
  std::vector<fs::path> jobs;
  for (const auto& e : fs::directory_iterator(root_))
    if (e.is_directory() && fs::exists(e.path() / "request.ready") &&
        !fs::exists(e.path() / "response.ready"))
      jobs.push_back(e.path());
  std::sort(jobs.begin(), jobs.end());
  for (const auto& dir : jobs) {
    WireResponse resp;
    try {
      resp = backend_->handle(decode_request(read_parts(dir, "request.json")));
    } catch (const std::exception& e) {
      resp.ok = false;
      resp.message = e.what();
    }
    write_parts(dir, encode_response(resp), "response.json");
    write_file((dir / "response.ready").string(), "", 0);
    ++handled;
  }
  return handled;
}

void DirectoryOracleServer::start(int poll_ms) {
  require(!running_, ErrorKind::Contract, "directory server already running");
  running_ = true;
  worker_ = std::thread([this, poll_ms] {
    while (running_) {
      process_pending();
      std::this_thread::sleep_for(std::chrono::milliseconds(poll_ms));
    }
  });
}

void DirectoryOracleServer::stop() {
  if (!running_) return;
  running_ = false;
  if (worker_.joinable()) worker_.join();
}

// --------------------------------------------------------------------- http

HttpTransport::HttpTransport(std::string host, int port, HttpTransportOptions opt)
    : host_(std::move(host)), port_(port), opt_(opt) {}

WireResponse HttpTransport::roundtrip(const WireRequest& req) {
  auto parts = encode_request(req);
  httplib::MultipartFormDataItems items;
  for (const auto& p : parts)
    items.push_back({p.name, std::string(p.data.begin(), p.data.end()), part_filename(p),
                     p.content_type});

  std::string last_err;
  for (int attempt = 0; attempt <= opt_.retries; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(
          std::chrono::milliseconds(opt_.backoff_base_ms * (1 << (attempt - 1))));
    httplib::Client cli(host_, port_);
    cli.set_read_timeout(opt_.timeout_s, 0);
    cli.set_connection_timeout(5, 0);
    auto res = cli.Post("/oracle", items);
    if (!res) {
      last_err = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_err = "server error " + std::to_string(res->status);
      continue;
    }
    require(res->status == 200, ErrorKind::Oracle,
            "oracle rejected the request with status " + std::to_string(res->status));
    auto body = reinterpret_cast<const uint8_t*>(res->body.data());
    std::string ct = res->get_header_value("Content-Type");
    std::string boundary = default_boundary();
    size_t bpos = ct.find("boundary=");
    if (bpos != std::string::npos) boundary = ct.substr(bpos + 9);
    return decode_response(multipart_parse(body, res->body.size(), boundary));
  }
  raise(ErrorKind::Oracle, "oracle unreachable after " + std::to_string(opt_.retries + 1) +
                               " attempts: " + last_err);
}

struct HttpOracleServer::Impl {
  httplib::Server server;
};

HttpOracleServer::HttpOracleServer(std::shared_ptr<OracleBackend> backend)
    : backend_(std::move(backend)), impl_(new Impl) {
  impl_->server.Post("/oracle", [this](const httplib::Request& hreq, httplib::Response& hres) {
    if (fail_next_ > 0) {
      --fail_next_;
      hres.status = 503;
      return;
    }
    std::vector<WirePart> parts;
    for (const auto& f : hreq.files)
      parts.push_back({f.second.name, f.second.content_type,
                       std::vector<uint8_t>(f.second.content.begin(), f.second.content.end())});
    WireResponse resp;
    try {
      resp = backend_->handle(decode_request(parts));
    } catch (const std::exception& e) {
      resp.ok = false;
      resp.message = e.what();
    }
    auto body = multipart_encode(encode_response(resp), default_boundary());
    hres.status = 200;
    hres.set_content(std::string(body.begin(), body.end()),
                     ("multipart/mixed; boundary=" + default_boundary()).c_str());
  });
}

HttpOracleServer::~HttpOracleServer() { stop(); }

int HttpOracleServer::start(const std::string& host) {
  int port = impl_->server.bind_to_any_port(host.c_str());
  require(port > 0, ErrorKind::Oracle, "http oracle server could not bind");
  worker_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void HttpOracleServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
  if (worker_.joinable()) worker_.join();
}

// ------------------------------------------------------------------- client

struct OracleClient::Impl {
  std::shared_ptr<OracleTransport> transport;
  std::counting_semaphore<64> slots;
  std::atomic<int> calls{0};
  Impl(std::shared_ptr<OracleTransport> t, int max_in_flight)
      : transport(std::move(t)), slots(max_in_flight) {}
};

OracleClient::OracleClient(std::shared_ptr<OracleTransport> transport, int max_in_flight)
    : impl_(std::make_shared<Impl>(std::move(transport), max_in_flight)) {
  require(max_in_flight >= 1 && max_in_flight <= 64, ErrorKind::Config,
          "max_in_flight must be in [1, 64]");
}

int OracleClient::calls_made() const { return impl_->calls.load(); }

OracleResult OracleClient::call(const OracleRequest& req) {
  require(req.rgb != nullptr, ErrorKind::Domain, "oracle call without an image");
  bool wants_mask = req.kind == OracleKind::Inpaint;
  require(!wants_mask || req.mask != nullptr, ErrorKind::Domain, "inpaint call without a mask");
  if (req.mask)
    require(req.mask->width() == req.rgb->width() && req.mask->height() == req.rgb->height(),
            ErrorKind::Domain, "oracle mask size mismatch");

  WireRequest wire;
  wire.kind = req.kind;
  wire.rgb = to_u8(*req.rgb);
  if (req.mask) wire.mask = *req.mask;
  wire.prompt = req.prompt;
  wire.strength = req.strength;
  wire.seed = req.seed;
  wire.meta = req.meta;

  impl_->slots.acquire();
  WireResponse resp;
  try {
    resp = impl_->transport->roundtrip(wire);
  } catch (...) {
    impl_->slots.release();
    throw;
  }
  impl_->slots.release();
  impl_->calls.fetch_add(1);

  require(resp.ok, ErrorKind::Oracle, "oracle error: " + resp.message);
  OracleResult out;
  if (req.kind == OracleKind::Inpaint || req.kind == OracleKind::Refine) {
    require(resp.rgb.has_value(), ErrorKind::Oracle, "oracle response lacks rgb");
    require(resp.rgb->width() == req.rgb->width() && resp.rgb->height() == req.rgb->height(),
            ErrorKind::Oracle, "oracle returned a mismatched image size");
    out.rgb = to_f32(*resp.rgb);
  } else {
    require(resp.depth.has_value() && resp.confidence.has_value(), ErrorKind::Oracle,
            "oracle response lacks depth");
    OracleDepth d;
    d.values = *resp.depth;
    d.metric = resp.metric;
    d.confidence = ImageF32(resp.confidence->width(), resp.confidence->height(), 1);
    for (size_t i = 0; i < d.confidence.count(); ++i)
      d.confidence.data()[i] = static_cast<float>(resp.confidence->data()[i]) / 255.0f;
    require(d.values.width() == req.rgb->width() && d.values.height() == req.rgb->height(),
            ErrorKind::Oracle, "oracle returned a mismatched depth size");
    out.depth = std::move(d);
  }
  return out;
}

}  // namespace worldgen
