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

#pragma once

// Newline-delimited JSON protocol that lets an external process act as the
// in-context model. See docs/bridge-protocol.md.

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "rtfm/common.hpp"
#include "rtfm/predictor.hpp"

namespace rtfm::bridge {

inline constexpr double kDefaultTimeoutSecs = 60.0;

// RTFM_BRIDGE_TIMEOUT_SECS if set and positive, else kDefaultTimeoutSecs.
double timeout_from_env();

// A bidirectional line stream over a pair of file descriptors.
class LineStream {
 public:
  LineStream(int in_fd, int out_fd, bool owns = false) : in_(in_fd), out_(out_fd), owns_(owns) {}
  ~LineStream();
  LineStream(const LineStream&) = delete;
  LineStream& operator=(const LineStream&) = delete;

  // Next line without the trailing newline. nullopt on EOF; throws
  // Error("bridge-timeout") when nothing complete arrives in time
  // (timeout_secs <= 0 waits forever).
  std::optional<std::string> read_line(double timeout_secs = 0.0);
  void write_line(const std::string& line);
  void close();

 private:
  int in_;
  int out_;
  bool owns_;
  std::string buffer_;
};

// Request handling on the serving side.
class Handler {
 public:
  virtual ~Handler() = default;
  // Response object (with "kind"; the id is added by handle_line).
  virtual nlohmann::json handle(const nlohmann::json& request) = 0;
};

// Serves a Predictor. TRAIN_STEP updates a TrainablePredictor; a frozen one
// reports the batch loss unchanged. Snapshots live in memory.
class PredictorHandler final : public Handler {
 public:
  explicit PredictorHandler(std::shared_ptr<Predictor> model);
  nlohmann::json handle(const nlohmann::json& request) override;

 private:
  std::shared_ptr<Predictor> model_;
  TrainablePredictor* trainable_;
  std::map<std::string, nlohmann::json> snapshots_;
  int next_snapshot_ = 0;
};

nlohmann::json error_response(const std::string& code, const std::string& message);

// One request line in, one canonical response line out. Malformed JSON gives
// ERROR{parse} with a null id; unknown kinds give ERROR{unsupported}.
std::string handle_line(Handler& handler, const std::string& line);

// Answers requests in order until EOF.
void serve(Handler& handler, LineStream& stream);
void serve_stdio(Handler& handler);

// Listens on host:port (port 0 picks a free one, reported through
// on_listen) and serves connections one at a time. Stops after
// max_connections connections when that is positive.
void serve_tcp(Handler& handler, const std::string& host, int port,
               const std::function<void(int)>& on_listen = {}, int max_connections = 0);

// Client half: one in-flight request at a time.
class Connection {
 public:
  // "bridge:host:port", "tcp:host:port" or "exec:<shell command>".
  static std::shared_ptr<Connection> open(const std::string& address,
                                          double timeout_secs = timeout_from_env());
  Connection(int in_fd, int out_fd, double timeout_secs, int child_pid = -1);
  ~Connection();

  // Sends {"id":n,"kind":kind,...fields}; returns the response. ERROR
  // responses are thrown as Error(code).
  nlohmann::json request(const std::string& kind, nlohmann::json fields = nlohmann::json::object());

  std::mutex& mutex() noexcept { return mutex_; }
  std::int64_t last_id() const noexcept { return next_id_ - 1; }

 private:
  nlohmann::json request_locked(const std::string& kind, nlohmann::json fields);
  friend class BridgePredictor;
  friend class SnapshotPredictor;

  LineStream stream_;
  double timeout_;
  int child_pid_;
  std::int64_t next_id_ = 1;
  std::mutex mutex_;
};

// PROBS -> ClassProbMatrix for `data`: checks the shape, renormalizes rows
// and applies the probability clip.
ClassProbMatrix parse_probs(const nlohmann::json& response, const TabularDataset& data);

ClassProbMatrix remote_predict(Connection& conn, const TabularDataset& data);

// The remote model as a TrainablePredictor. Thread-safe: calls serialize on
// the connection.
class BridgePredictor final : public TrainablePredictor {
 public:
  explicit BridgePredictor(std::shared_ptr<Connection> conn, std::string address = "bridge")
      : conn_(std::move(conn)), address_(std::move(address)) {}

  ClassProbMatrix predict(const TabularDataset& data) const override;
  std::string describe() const override { return address_; }
  // Address plus a counter bumped by every train_step and restore.
  std::string fingerprint() const override;
  double train_step(std::span<const TabularDataset> batch, double lr) override;
  // Takes a remote snapshot; the returned predictor restores it around each
  // prediction and puts the live state back afterwards.
  std::shared_ptr<const Predictor> freeze() const override;
  nlohmann::json save() const override;
  void restore(const nlohmann::json& state) override;

 private:
  std::shared_ptr<Connection> conn_;
  std::string address_;
  std::atomic<long> generation_{0};
};

}  // namespace rtfm::bridge
