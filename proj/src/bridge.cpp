// Copyright 2026 The rtfm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rtfm/bridge.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <cstring>

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include "rtfm/dataset.hpp"

namespace rtfm::bridge {

using nlohmann::json;

double timeout_from_env() {
  if (const char* env = std::getenv("RTFM_BRIDGE_TIMEOUT_SECS")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && v > 0.0) return v;
  }
  return kDefaultTimeoutSecs;
}

LineStream::~LineStream() { close(); }

void LineStream::close() {
  if (!owns_) return;
  if (in_ >= 0) ::close(in_);
  if (out_ >= 0 && out_ != in_) ::close(out_);
  in_ = out_ = -1;
}

std::optional<std::string> LineStream::read_line(double timeout_secs) {
  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + std::chrono::duration<double>(timeout_secs);
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    int wait_ms = -1;
    if (timeout_secs > 0.0) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now());
      if (left.count() <= 0) throw Error("bridge-timeout", "no response within the bridge timeout");
      wait_ms = static_cast<int>(std::min<long long>(left.count() + 1, 1 << 30));
    }
    pollfd pfd{in_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, wait_ms);
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw Error("bridge-io", std::string("poll: ") + std::strerror(errno));
    }
    if (rc == 0) continue;
    char chunk[65536];
    const ssize_t n = ::read(in_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      if (errno == ECONNRESET) return std::nullopt;
      throw Error("bridge-io", std::string("read: ") + std::strerror(errno));
    }
    if (n == 0) {
      if (buffer_.empty()) return std::nullopt;
      std::string line = std::move(buffer_);
      buffer_.clear();
      return line;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void LineStream::write_line(const std::string& line) {
  std::string data = line;
  data.push_back('\n');
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(out_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EPIPE || errno == ECONNRESET)
        throw Error("bridge-timeout", "bridge peer closed the connection");
      throw Error("bridge-io", std::string("write: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

json error_response(const std::string& code, const std::string& message) {
  return {{"kind", "ERROR"}, {"code", code}, {"message", message}};
}

PredictorHandler::PredictorHandler(std::shared_ptr<Predictor> model)
    : model_(std::move(model)), trainable_(dynamic_cast<TrainablePredictor*>(model_.get())) {
  if (!model_) throw InvalidArgument("bridge handler needs a model");
}

namespace {

json probs_json(const ClassProbMatrix& p) {
  json rows = json::array();
  for (int r = 0; r < p.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < p.classes(); ++c) row.push_back(p(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<TabularDataset> payload_list(const json& datasets) {
  if (!datasets.is_array() || datasets.empty())
    throw InvalidArgument("TRAIN_STEP needs a non-empty datasets array");
  std::vector<TabularDataset> out;
  for (const auto& d : datasets) out.push_back(from_payload(d));
  return out;
}

}  // namespace

json PredictorHandler::handle(const json& req) {
  const std::string kind = req.at("kind").get<std::string>();
  try {
    if (kind == "PING") return {{"kind", "OK"}};
    if (kind == "PREDICT") {
      const TabularDataset ds = from_payload(req.at("dataset"));
      return {{"kind", "PROBS"}, {"probs", probs_json(model_->predict(ds))}};
    }
    if (kind == "TRAIN_STEP") {
      const std::vector<TabularDataset> batch = payload_list(req.at("datasets"));
      const double lr = req.at("lr").get<double>();
      double loss = 0.0;
      if (trainable_) {
        loss = trainable_->train_step(batch, lr);
      } else {
        for (const auto& ds : batch) loss += cross_entropy(model_->predict(ds), ds.test_labels());
        loss /= static_cast<double>(batch.size());
      }
      return {{"kind", "LOSS"}, {"loss", loss}};
    }
    if (kind == "SNAPSHOT") {
      const std::string id = "snap-" + std::to_string(next_snapshot_++);
      snapshots_[id] = trainable_ ? trainable_->save() : json(nullptr);
      return {{"kind", "SNAPSHOT_ID"}, {"snapshot_id", id}};
    }
    if (kind == "RESTORE") {
      const std::string id = req.at("snapshot_id").get<std::string>();
      const auto it = snapshots_.find(id);
      if (it == snapshots_.end()) return error_response("not_found", "unknown snapshot_id " + id);
      if (trainable_) trainable_->restore(it->second);
      return {{"kind", "OK"}};
    }
  } catch (const json::exception& e) {
    return error_response("invalid_request", e.what());
  } catch (const InvalidArgument& e) {
    return error_response("invalid_request", e.what());
  } catch (const std::exception& e) {
    return error_response("model_error", e.what());
  }
  return error_response("unsupported", "unknown request kind " + kind);
}

std::string handle_line(Handler& handler, const std::string& line) {
  json req;
  try {
    req = json::parse(line);
  } catch (const json::exception& e) {
    json resp = error_response("parse", e.what());
    resp["id"] = nullptr;
    return canonical_dump(resp);
  }
  json id = req.is_object() && req.contains("id") ? req["id"] : json(nullptr);
  json resp;
  if (!req.is_object() || !id.is_number_integer() || !req.contains("kind") ||
      !req["kind"].is_string()) {
    resp = error_response("parse", "request must be an object with an integer id and a string kind");
  } else {
    resp = handler.handle(req);
  }
  resp["id"] = id;
  return canonical_dump(resp);
}

void serve(Handler& handler, LineStream& stream) {
  while (auto line = stream.read_line()) {
    if (line->empty()) continue;
    stream.write_line(handle_line(handler, *line));
  }
}

void serve_stdio(Handler& handler) {
  std::signal(SIGPIPE, SIG_IGN);
  LineStream stream(STDIN_FILENO, STDOUT_FILENO);
  serve(handler, stream);
}

namespace {

addrinfo* resolve(const std::string& host, int port, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  const int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &res);
  if (rc != 0) throw Error("bridge-io", "cannot resolve " + host + ": " + ::gai_strerror(rc));
  return res;
}

}  // namespace

void serve_tcp(Handler& handler, const std::string& host, int port,
               const std::function<void(int)>& on_listen, int max_connections) {
  std::signal(SIGPIPE, SIG_IGN);
  addrinfo* res = resolve(host, port, true);
  int fd = -1;
  for (addrinfo* a = res; a; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, a->ai_addr, a->ai_addrlen) == 0 && ::listen(fd, 4) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw Error("bridge-io", "cannot listen on " + host + ":" + std::to_string(port));

  sockaddr_storage bound{};
  socklen_t len = sizeof bound;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
  const int actual = bound.ss_family == AF_INET6
                         ? ntohs(reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port)
                         : ntohs(reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
  if (on_listen) on_listen(actual);

  for (int served = 0; max_connections <= 0 || served < max_connections; ++served) {
    const int client = ::accept(fd, nullptr, nullptr);
    if (client < 0) {
      if (errno == EINTR) {
        --served;
        continue;
      }
      break;
    }
    LineStream stream(client, client, true);
    try {
      serve(handler, stream);
    } catch (const Error&) {
      // Peer went away mid-write; wait for the next connection.
    }
  }
  ::close(fd);
}

Connection::Connection(int in_fd, int out_fd, double timeout_secs, int child_pid)
    : stream_(in_fd, out_fd, true), timeout_(timeout_secs), child_pid_(child_pid) {}

Connection::~Connection() {
  stream_.close();
  if (child_pid_ <= 0) return;
  int status = 0;
  for (int i = 0; i < 100; ++i) {
    if (::waitpid(child_pid_, &status, WNOHANG) != 0) return;
    ::usleep(10000);
  }
  ::kill(child_pid_, SIGTERM);
  ::waitpid(child_pid_, &status, 0);
}

std::shared_ptr<Connection> Connection::open(const std::string& address, double timeout_secs) {
  std::signal(SIGPIPE, SIG_IGN);
  const auto colon = address.find(':');
  if (colon == std::string::npos) throw InvalidArgument("bridge address needs a scheme: " + address);
  const std::string scheme = address.substr(0, colon);
  const std::string rest = address.substr(colon + 1);

  if (scheme == "exec") {
    if (rest.empty()) throw InvalidArgument("exec: needs a command");
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0)
      throw Error("bridge-io", std::string("pipe: ") + std::strerror(errno));
    const pid_t pid = ::fork();
    if (pid < 0) throw Error("bridge-io", std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", rest.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    ::fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
    ::fcntl(from_child[0], F_SETFD, FD_CLOEXEC);
    return std::make_shared<Connection>(from_child[0], to_child[1], timeout_secs, pid);
  }
  if (scheme == "bridge" || scheme == "tcp") {
    const auto c2 = rest.rfind(':');
    if (c2 == std::string::npos) throw InvalidArgument("bridge address must be host:port: " + address);
    const std::string host = rest.substr(0, c2);
    int port = 0;
    try {
      port = std::stoi(rest.substr(c2 + 1));
    } catch (const std::exception&) {
      throw InvalidArgument("bad port in " + address);
    }
    addrinfo* res = resolve(host, port, false);
    int fd = -1;
    for (addrinfo* a = res; a; a = a->ai_next) {
      fd = ::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
      ::close(fd);
      fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw Error("bridge-io", "cannot connect to " + rest);
    return std::make_shared<Connection>(fd, fd, timeout_secs);
  }
  throw InvalidArgument("unknown bridge scheme '" + scheme + "'");
}

json Connection::request(const std::string& kind, json fields) {
  std::lock_guard lock(mutex_);
  return request_locked(kind, std::move(fields));
}

json Connection::request_locked(const std::string& kind, json fields) {
  const std::int64_t id = next_id_++;
  fields["id"] = id;
  fields["kind"] = kind;
  stream_.write_line(canonical_dump(fields));
  const auto line = stream_.read_line(timeout_);
  if (!line) throw Error("bridge-timeout", "bridge server closed the connection");
  json resp;
  try {
    resp = json::parse(*line);
  } catch (const json::exception& e) {
    throw Error("bridge-protocol", std::string("unparseable response: ") + e.what());
  }
  if (!resp.is_object() || !resp.contains("id") || resp["id"] != json(id))
    throw Error("bridge-protocol", "response id does not match request " + std::to_string(id));
  const std::string rkind = resp.value("kind", std::string());
  if (rkind == "ERROR")
    throw Error(resp.value("code", std::string("error")), resp.value("message", std::string()));
  return resp;
}

ClassProbMatrix parse_probs(const json& resp, const TabularDataset& data) {
  if (resp.value("kind", std::string()) != "PROBS" || !resp.contains("probs"))
    throw Error("bridge-protocol", "expected PROBS");
  const json& rows = resp["probs"];
  const auto n_test = static_cast<Eigen::Index>(data.test_indices.size());
  if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != n_test)
    throw Error("bridge-protocol", "PROBS has the wrong number of rows");
  Eigen::MatrixXd raw(n_test, data.n_classes);
  for (Eigen::Index r = 0; r < n_test; ++r) {
    const json& row = rows[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<int>(row.size()) != data.n_classes)
      throw Error("bridge-protocol", "PROBS row has the wrong number of classes");
    for (int c = 0; c < data.n_classes; ++c) {
      if (!row[static_cast<std::size_t>(c)].is_number())
        throw Error("bridge-protocol", "PROBS entries must be numbers");
      raw(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  try {
    return ClassProbMatrix::from_clipped(std::move(raw));
  } catch (const InvalidArgument& e) {
    throw Error("bridge-protocol", e.what());
  }
}

ClassProbMatrix remote_predict(Connection& conn, const TabularDataset& data) {
  return parse_probs(conn.request("PREDICT", {{"dataset", to_payload(data)}}), data);
}

namespace {

json payloads(std::span<const TabularDataset> batch) {
  json arr = json::array();
  for (const auto& ds : batch) arr.push_back(to_payload(ds));
  return arr;
}

}  // namespace

ClassProbMatrix BridgePredictor::predict(const TabularDataset& data) const {
  return remote_predict(*conn_, data);
}

std::string BridgePredictor::fingerprint() const {
  return address_ + "#" + std::to_string(generation_.load());
}

double BridgePredictor::train_step(std::span<const TabularDataset> batch, double lr) {
  ++generation_;
  const json resp = conn_->request("TRAIN_STEP", {{"datasets", payloads(batch)}, {"lr", lr}});
  if (resp.value("kind", std::string()) != "LOSS" || !resp.contains("loss") || !resp["loss"].is_number())
    throw Error("bridge-protocol", "expected LOSS");
  return resp["loss"].get<double>();
}

json BridgePredictor::save() const {
  const json resp = conn_->request("SNAPSHOT");
  return {{"bridge", address_}, {"snapshot_id", resp.at("snapshot_id")}};
}

void BridgePredictor::restore(const json& state) {
  ++generation_;
  conn_->request("RESTORE", {{"snapshot_id", state.at("snapshot_id")}});
}

class SnapshotPredictor final : public Predictor {
 public:
  SnapshotPredictor(std::shared_ptr<Connection> conn, std::string snapshot, std::string address)
      : conn_(std::move(conn)), snapshot_(std::move(snapshot)), address_(std::move(address)) {}

  ClassProbMatrix predict(const TabularDataset& data) const override {
    std::lock_guard lock(conn_->mutex());
    const json live = conn_->request_locked("SNAPSHOT", json::object()).at("snapshot_id");
    conn_->request_locked("RESTORE", {{"snapshot_id", snapshot_}});
    json resp;
    try {
      resp = conn_->request_locked("PREDICT", {{"dataset", to_payload(data)}});
    } catch (...) {
      conn_->request_locked("RESTORE", {{"snapshot_id", live}});
      throw;
    }
    conn_->request_locked("RESTORE", {{"snapshot_id", live}});
    return parse_probs(resp, data);
  }
  std::string describe() const override { return address_ + "@" + snapshot_; }
  std::string fingerprint() const override { return address_ + "@" + snapshot_; }

 private:
  std::shared_ptr<Connection> conn_;
  std::string snapshot_;
  std::string address_;
};

std::shared_ptr<const Predictor> BridgePredictor::freeze() const {
  const json resp = conn_->request("SNAPSHOT");
  return std::make_shared<SnapshotPredictor>(conn_, resp.at("snapshot_id").get<std::string>(), address_);
}

}  // namespace rtfm::bridge
