#include "latroute/service.hpp"

#include "latroute/serialize.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>

namespace latroute {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  return fmt::format("{:%Y-%m-%dT%H:%M:%S}.{:03}Z", tm, ms);
}

namespace {

Json error_response(const Json& id, int code, const std::string& message) {
  return {{"id", id}, {"error", {{"code", code}, {"message", message}}}};
}

std::optional<double> optional_number(const Json& obj, const char* key) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  if (!obj.at(key).is_number()) throw RequestError{400, fmt::format("'{}' must be a number", key)};
  return obj.at(key).get<double>();
}

Vec number_array(const Json& j, const std::string& what) {
  if (!j.is_array()) throw RequestError{400, fmt::format("'{}' must be an array of numbers", what)};
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw RequestError{400, fmt::format("'{}' must be an array of numbers", what)};
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

PolicyWeights parse_weights(const Json& req) {
  if (req.contains("weights")) {
    const auto& w = req.at("weights");
    if (!w.is_object()) throw RequestError{400, "'weights' must be an object with p, c, t"};
    PolicyWeights out{w.value("p", 0.0), w.value("c", 0.0), w.value("t", 0.0)};
    try {
      out.validate();
    } catch (const Error& e) {
      throw RequestError{400, e.what()};
    }
    return out;
  }
  if (req.contains("policy")) {
    if (!req.at("policy").is_string()) throw RequestError{400, "'policy' must be a string"};
    try {
      return policy_by_name(req.at("policy").get<std::string>());
    } catch (const Error& e) {
      throw RequestError{400, e.what()};
    }
  }
  return presets::kBalanced;
}

GlobalConstraints parse_constraints(const Json& req) {
  GlobalConstraints c;
  if (!req.contains("constraints") || req.at("constraints").is_null()) return c;
  const auto& j = req.at("constraints");
  if (!j.is_object()) throw RequestError{400, "'constraints' must be an object"};
  c.max_total_cost = optional_number(j, "max_total_cost");
  c.max_total_latency = optional_number(j, "max_total_latency");
  c.min_mean_accuracy = optional_number(j, "min_mean_accuracy");
  try {
    c.validate();
  } catch (const Error& e) {
    throw RequestError{400, e.what()};
  }
  return c;
}

std::vector<QueryInput> parse_queries(const Registry& registry, const Json& req) {
  if (!req.contains("queries") || !req.at("queries").is_array())
    throw RequestError{400, "'queries' must be an array"};
  const auto& list = req.at("queries");
  if (list.empty()) throw RequestError{400, "'queries' is empty"};

  const HashingEmbedder hashing(registry.predictor ? static_cast<std::size_t>(registry.predictor->shape.d_sem) : 64);
  const auto dim = static_cast<std::size_t>(registry.dim());
  std::vector<QueryInput> out;
  for (const auto& q : list) {
    if (!q.is_object()) throw RequestError{400, "each query must be an object"};
    QueryInput in;
    if (!q.contains("id") || !q.at("id").is_string()) throw RequestError{400, "query 'id' must be a string"};
    in.query_id = q.at("id").get<std::string>();
    if (q.contains("text") && !q.at("text").is_string()) throw RequestError{400, "query 'text' must be a string"};
    in.text = q.value("text", std::string());
    in.params.item_id = in.query_id;
    if (q.contains("alpha") && q.contains("b")) {
      in.params.alpha = number_array(q.at("alpha"), "alpha");
      in.params.b = number_array(q.at("b"), "b");
      require_same_dim("query alpha", dim, static_cast<std::size_t>(in.params.alpha.size()));
      require_same_dim("query b", dim, static_cast<std::size_t>(in.params.b.size()));
      if ((in.params.alpha.array() < 0.0).any()) throw RequestError{400, "query alpha must be >= 0"};
    } else {
      if (!registry.predictor) throw RequestError{503, "registry has no predictor"};
      const auto& model = *registry.predictor;
      FeatureVector f;
      if (model.embedder == EmbedderKind::kFile) {
        if (!q.contains("embedding"))
          throw RequestError{400, fmt::format("query '{}' needs an 'embedding' for this predictor", in.query_id)};
        f.semantic = number_array(q.at("embedding"), "embedding");
        require_same_dim("query embedding", static_cast<std::size_t>(model.shape.d_sem),
                         static_cast<std::size_t>(f.semantic.size()));
        f.structural = extract_structural_features(in.text);
      } else {
        f = make_features(in.text, hashing);
      }
      const auto pred = forward(model, f);
      in.params.alpha = pred.alpha;
      in.params.b = pred.b;
    }
    out.push_back(std::move(in));
  }
  return out;
}

}  // namespace

RoutedBatch route_request(const Registry& registry, const Json& req, bool parallel) {
  if (registry.profiles.empty()) throw RequestError{503, "registry has no model profiles"};
  const auto weights = parse_weights(req);
  const auto constraints = parse_constraints(req);
  RouteOptions route_opts;
  if (req.contains("normalize")) {
    if (!req.at("normalize").is_boolean()) throw RequestError{400, "'normalize' must be a boolean"};
    route_opts.normalize = req.at("normalize").get<bool>();
  }
  const auto queries = parse_queries(registry, req);
  const TokenizerRegistry tokenizers;
  RoutedBatch out;
  out.estimates = score_matrix(queries, registry.profile_list(), tokenizers, parallel);
  out.assignment = constraints.empty() ? route_unconstrained(out.estimates, weights, route_opts)
                                       : route_constrained(out.estimates, weights, constraints, route_opts);
  out.weights = weights;
  out.options = route_opts;
  return out;
}

namespace {

Json route_json(const Registry& registry, const Json& req, const ServiceOptions& options) {
  const auto batch = route_request(registry, req, options.parallel);
  const auto& est = batch.estimates;
  const auto& a = batch.assignment;

  Json choices = Json::array();
  for (std::size_t q = 0; q < a.choices.size(); ++q) {
    const auto& c = est.at(q, a.choices[q].model_index);
    choices.push_back(
        {{"query_id", c.query_id}, {"model_id", c.model_id}, {"p", c.p}, {"cost", c.cost}, {"latency", c.latency}});
  }
  Json estimates = Json::array();
  for (const auto& c : est.cells)
    estimates.push_back(
        {{"query_id", c.query_id}, {"model_id", c.model_id}, {"p", c.p}, {"cost", c.cost}, {"latency", c.latency}});

  Json resp;
  resp["id"] = req.contains("id") ? req.at("id") : Json();
  resp["choices"] = std::move(choices);
  resp["estimates"] = std::move(estimates);
  resp["solver"] = std::string(to_string(a.solver));
  resp["feasible"] = a.feasible;
  resp["objective"] = a.objective;
  if (a.gap_bound) resp["gap_bound"] = *a.gap_bound;
  resp["registry_version"] = registry.version;
  resp["timestamp"] = options.clock ? options.clock() : utc_timestamp();
  return resp;
}

}  // namespace

std::string handle_route_request(const Registry& registry, std::string_view line, const ServiceOptions& options) {
  Json req;
  try {
    req = Json::parse(line);
  } catch (const Json::exception& e) {
    return error_response(nullptr, 400, fmt::format("malformed JSON: {}", e.what())).dump();
  }
  const Json id = req.is_object() && req.contains("id") ? req.at("id") : Json();
  if (!req.is_object()) return error_response(id, 400, "request must be a JSON object").dump();
  try {
    return route_json(registry, req, options).dump();
  } catch (const RequestError& e) {
    return error_response(id, e.code(), e.what()).dump();
  } catch (const Json::exception& e) {
    return error_response(id, 400, e.what()).dump();
  } catch (const DimensionError& e) {
    return error_response(id, 400, e.what()).dump();
  } catch (const Error& e) {
    return error_response(id, 422, e.what()).dump();
  }
}

// ---------------------------------------------------------------------------
// TCP

namespace {

bool write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const auto n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

// Reads up to and excluding the next '\n'; false on EOF before a full line.
bool read_line(int fd, std::string& buffer, std::string& line) {
  for (;;) {
    const auto nl = buffer.find('\n');
    if (nl != std::string::npos) {
      line.assign(buffer, 0, nl);
      buffer.erase(0, nl + 1);
      return true;
    }
    char chunk[4096];
    const auto n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

}  // namespace

RouteServer::RouteServer(RegistryStore& store, std::uint16_t port, ServiceOptions options)
    : store_(store), options_(std::move(options)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(fmt::format("socket: {}", std::strerror(errno)));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 128) < 0) {
    const auto msg = std::strerror(errno);
    ::close(listen_fd_);
    throw Error(fmt::format("cannot listen on port {}: {}", port, msg));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

RouteServer::~RouteServer() { stop(); }

void RouteServer::stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (acceptor_.joinable()) acceptor_.join();
  {
    std::lock_guard lock(conn_mutex_);
    for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  for (auto& t : workers_) t.join();
  workers_.clear();
}

void RouteServer::accept_loop() {
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;
    }
    std::lock_guard lock(conn_mutex_);
    if (stopping_) {
      ::close(fd);
      return;
    }
    open_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { serve(fd); });
  }
}

void RouteServer::serve(int fd) {
  std::string buffer, line;
  while (read_line(fd, buffer, line)) {
    if (line.empty()) continue;
    const auto snapshot = store_.snapshot();
    const auto response = handle_route_request(*snapshot, line, options_) + '\n';
    if (!write_all(fd, response)) break;
  }
  std::lock_guard lock(conn_mutex_);
  open_fds_.erase(std::remove(open_fds_.begin(), open_fds_.end(), fd), open_fds_.end());
  ::close(fd);
}

RouteClient::RouteClient(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res); rc != 0)
    throw Error(fmt::format("resolve {}: {}", host, gai_strerror(rc)));
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  const bool ok = fd_ >= 0 && ::connect(fd_, res->ai_addr, res->ai_addrlen) == 0;
  ::freeaddrinfo(res);
  if (!ok) {
    const auto msg = std::strerror(errno);
    if (fd_ >= 0) ::close(fd_);
    throw Error(fmt::format("connect {}:{}: {}", host, port, msg));
  }
}

RouteClient::~RouteClient() {
  if (fd_ >= 0) ::close(fd_);
}

std::string RouteClient::request(std::string_view line) {
  std::string out(line);
  out.push_back('\n');
  if (!write_all(fd_, out)) throw Error("connection closed while sending");
  std::string response;
  if (!read_line(fd_, buffer_, response)) throw Error("connection closed before a response arrived");
  return response;
}

}  // namespace latroute
