#pragma once

#include "latroute/registry.hpp"
#include "latroute/router.hpp"
#include "latroute/serialize.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <list>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace latroute {

// Request (one JSON object per line):
//   {"id": ..., "queries": [{"id": ..., "text": ..., "embedding": [...]?,
//                            "alpha": [...]?, "b": [...]?}],
//    "weights": {"p": ..., "c": ..., "t": ...} | "policy": "balanced",
//    "constraints": {"max_total_cost": ..., "max_total_latency": ...,
//                    "min_mean_accuracy": ...}?, "normalize": bool?}
// A query carrying both alpha and b bypasses the predictor.
//
// Response: {"id", "choices": [{"query_id", "model_id", "p", "cost", "latency"}],
//   "estimates": [...], "solver", "feasible", "objective", "gap_bound"?,
//   "registry_version", "timestamp"}
// or {"id", "error": {"code", "message"}} on failure.
struct ServiceOptions {
  bool parallel = false;
  // Replaced in tests to make whole responses comparable.
  std::function<std::string()> clock;
};

// Failure with a status code for the error object.
class RequestError : public Error {
 public:
  RequestError(int code, const std::string& message) : Error(message), code_(code) {}
  int code() const noexcept { return code_; }

 private:
  int code_;
};

struct RoutedBatch {
  EstimateMatrix estimates;
  Assignment assignment;
  PolicyWeights weights;
  RouteOptions options;
};

// Parses a request object and runs the routing pipeline on it.
RoutedBatch route_request(const Registry& registry, const Json& request, bool parallel = false);

std::string handle_route_request(const Registry& registry, std::string_view line, const ServiceOptions& options = {});

std::string utc_timestamp();

// Newline-delimited JSON over TCP on the loopback interface, one thread per
// connection, each request answered against the snapshot current at arrival.
class RouteServer {
 public:
  // Port 0 picks a free port; see port().
  RouteServer(RegistryStore& store, std::uint16_t port = 0, ServiceOptions options = {});
  ~RouteServer();
  RouteServer(const RouteServer&) = delete;
  RouteServer& operator=(const RouteServer&) = delete;

  std::uint16_t port() const { return port_; }
  void stop();

 private:
  void accept_loop();
  void serve(int fd);

  RegistryStore& store_;
  ServiceOptions options_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex conn_mutex_;
  std::list<std::thread> workers_;
  std::vector<int> open_fds_;
};

// Minimal blocking client: one connection, one response line per request line.
class RouteClient {
 public:
  RouteClient(const std::string& host, std::uint16_t port);
  ~RouteClient();
  RouteClient(const RouteClient&) = delete;
  RouteClient& operator=(const RouteClient&) = delete;

  std::string request(std::string_view line);

 private:
  int fd_ = -1;
  std::string buffer_;
};

}  // namespace latroute
