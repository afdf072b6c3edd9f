#pragma once

#include <atomic>
#include <memory>
#include <thread>

#include "worldgen/oracle/oracle.hpp"

namespace worldgen {

// Routes requests by kind to per-model backends; unset slots report errors.
class CompositeBackend : public OracleBackend {
 public:
  CompositeBackend(std::shared_ptr<OracleBackend> inpaint, std::shared_ptr<OracleBackend> refine,
                   std::shared_ptr<OracleBackend> depth_rel,
                   std::shared_ptr<OracleBackend> depth_metric)
      : inpaint_(std::move(inpaint)), refine_(std::move(refine)), depth_rel_(std::move(depth_rel)),
        depth_metric_(std::move(depth_metric)) {}
  WireResponse handle(const WireRequest& req) override;

 private:
  std::shared_ptr<OracleBackend> inpaint_, refine_, depth_rel_, depth_metric_;
};

// In-process transport. Deliberately round-trips the full wire encoding so
// results are byte-identical with the file and HTTP paths.
class BuiltinTransport : public OracleTransport {
 public:
  explicit BuiltinTransport(std::shared_ptr<OracleBackend> backend)
      : backend_(std::move(backend)) {}
  WireResponse roundtrip(const WireRequest& req) override;

 private:
  std::shared_ptr<OracleBackend> backend_;
};

// File exchange: one job directory per request under `root`.
//   job_*/request.json + image.png [+ mask.png], then marker `request.ready`;
//   responder writes response.json + blobs, then marker `response.ready`.
struct DirectoryTransportOptions {
  int poll_ms = 10;
  int timeout_ms = 60000;
};

class DirectoryTransport : public OracleTransport {
 public:
  explicit DirectoryTransport(std::string root, DirectoryTransportOptions opt = {});
  WireResponse roundtrip(const WireRequest& req) override;

 private:
  std::string root_;
  DirectoryTransportOptions opt_;
  std::atomic<uint64_t> counter_{0};
};

// POST /oracle with multipart body; response is multipart with the same part
// layout. Connection failures and 5xx retry with exponential backoff.
struct HttpTransportOptions {
  int retries = 3;
  int backoff_base_ms = 100;
  int timeout_s = 120;
};

class HttpTransport : public OracleTransport {
 public:
  HttpTransport(std::string host, int port, HttpTransportOptions opt = {});
  WireResponse roundtrip(const WireRequest& req) override;

 private:
  std::string host_;
  int port_;
  HttpTransportOptions opt_;
};

// Test/replay servers wrapping a backend.
class DirectoryOracleServer {
 public:
  DirectoryOracleServer(std::string root, std::shared_ptr<OracleBackend> backend);
  ~DirectoryOracleServer();
  int process_pending();  // handle all ready jobs once; returns jobs handled
  void start(int poll_ms = 5);
  void stop();

 private:
  std::string root_;
  std::shared_ptr<OracleBackend> backend_;
  std::thread worker_;
  std::atomic<bool> running_{false};
};

class HttpOracleServer {
 public:
  explicit HttpOracleServer(std::shared_ptr<OracleBackend> backend);
  ~HttpOracleServer();
  int start(const std::string& host = "127.0.0.1");  // returns bound port
  void stop();
  void fail_next(int n) { fail_next_ = n; }  // force 500s (retry tests)

 private:
  struct Impl;
  std::shared_ptr<OracleBackend> backend_;
  std::unique_ptr<Impl> impl_;
  std::thread worker_;
  std::atomic<int> fail_next_{0};
};

}  // namespace worldgen
