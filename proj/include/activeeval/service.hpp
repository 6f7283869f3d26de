#pragma once

// Live annotation sessions: event-sourced logs, blind left/right tasks and the
// HTTP API consumed by the annotator UI.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "activeeval/core.hpp"
#include "activeeval/errors.hpp"
#include "activeeval/learners.hpp"
#include "activeeval/metric_oracle.hpp"
#include "activeeval/model_based.hpp"
#include "activeeval/rng.hpp"
#include "json.hpp"

namespace activeeval {

// Duplicate or unknown task, or a submission to an inactive session.
class ConflictError : public Error {
 public:
  using Error::Error;
};

class AuthError : public Error {
 public:
  using Error::Error;
};

enum class SessionStatus { kActive, kConverged, kExhausted };
std::string_view session_status_name(SessionStatus s);

struct SessionRequest {
  std::string id;                     // generated when empty
  std::vector<TextRecord> outputs;    // system, example, text
  std::map<std::string, std::string> contexts;  // example -> source text
  AlgorithmSpec algorithm = AlgorithmSpec::named("rmed");
  std::uint64_t seed = 0;
  long long budget = 0;   // human annotations; 0 means unlimited
  long long window = 200;  // stable-recommendation window
  // Optional up-front elimination from metric scores.
  std::optional<UcbEliminationConfig> elimination;
  std::vector<ScoreRecord> scores;
  std::optional<PairwiseModel> model;

  // Body of POST /sessions. Outputs come either as "outputs" (array of
  // {system_id, example_id, text}) or "outputs_jsonl" (one record per line,
  // errors carry line numbers).
  static SessionRequest from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct Task {
  std::string id;
  Pair pair;        // canonical order chosen by the learner
  std::string example;
  bool swapped = false;  // true when pair.second is shown on the left
  std::string annotator;
};

enum class Choice { kLeft, kRight, kTie };
Choice parse_choice(std::string_view s);
// Outcome for the canonical pair order.
double choice_value(Choice c, bool swapped);

class Session {
 public:
  // Validates the request and, when `log_path` is non-empty, starts the log.
  Session(SessionRequest request, std::filesystem::path log_path);

  // Rebuilds a session from its log, checking that every recorded selection
  // is reproduced. Throws ValidationError (with the line) on any mismatch.
  static std::unique_ptr<Session> replay(const std::filesystem::path& log_path);
  static std::unique_ptr<Session> replay(std::istream& log, std::filesystem::path log_path = {});

  const std::string& id() const { return request_.id; }
  SessionStatus status() const;

  // Task payload, or the terminal payload with the recommendation.
  nlohmann::json next_task(const std::string& annotator);
  // Applies a judgment; ConflictError for unknown or already used task ids.
  nlohmann::json submit(const std::string& task_id, const std::string& choice,
                        const std::string& annotator = "");
  nlohmann::json leaderboard() const;
  nlohmann::json summary() const;
  // The log as JSON lines.
  std::string log_text() const;

  // State fingerprint used to compare a live session with its replay.
  nlohmann::json state() const;

  const Roster& roster() const { return roster_; }
  const WinCountMatrix& counts() const { return counts_; }
  long long human_annotations() const { return humans_; }
  std::size_t outstanding() const { return tasks_.size(); }

 private:
  struct Replaying {};
  Session(SessionRequest request, std::filesystem::path log_path, Replaying);
  void init();
  Task make_task(const std::string& annotator);
  void apply(const Task& task, double value);
  void append(nlohmann::json record);
  void refresh_status();
  nlohmann::json terminal_payload() const;
  nlohmann::json leaderboard_unlocked() const;
  nlohmann::json task_payload(const Task& task) const;

  mutable std::mutex mu_;
  SessionRequest request_;
  std::filesystem::path log_path_;
  Roster roster_;
  std::vector<std::string> examples_;
  std::map<std::pair<std::string, std::string>, std::string> texts_;
  std::optional<EliminationReport> elimination_;
  std::unique_ptr<ComposedLearner> learner_;
  Rng rng_;
  WinCountMatrix counts_;
  std::map<std::string, Task> tasks_;
  std::vector<std::string> log_;
  long long seq_ = 0;
  long long next_task_ = 0;
  long long humans_ = 0;
  long long stable_since_ = 0;
  SystemId recommendation_ = 0;
  SessionStatus status_ = SessionStatus::kActive;
  bool replaying_ = false;
};

// Owns sessions under a data directory; each session's log lives at
// <dir>/<id>.jsonl and is replayed on construction.
class SessionManager {
 public:
  explicit SessionManager(std::filesystem::path data_dir = {});

  std::string create(const nlohmann::json& request);
  Session& get(const std::string& id);  // LookupError
  std::vector<std::string> ids() const;

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::unique_ptr<Session>> sessions_;
  std::uint64_t counter_ = 0;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string token;  // bearer token; empty disables the check
};

// HTTP front end:
//   POST /sessions, GET /sessions/{id}, GET /sessions/{id}/next?annotator=,
//   POST /sessions/{id}/judgments, GET /sessions/{id}/leaderboard,
//   GET /sessions/{id}/log
class Server {
 public:
  Server(SessionManager& sessions, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and serves on a background thread; returns the bound port.
  int start();
  // Binds and serves on the calling thread until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace activeeval
