#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "activeeval/jsonl.hpp"
#include "activeeval/service.hpp"

namespace activeeval {

using Json = nlohmann::json;

std::string_view session_status_name(SessionStatus s) {
  switch (s) {
    case SessionStatus::kActive: return "active";
    case SessionStatus::kConverged: return "converged";
    case SessionStatus::kExhausted: return "exhausted";
  }
  return "active";
}

Choice parse_choice(std::string_view s) {
  if (s == "left") return Choice::kLeft;
  if (s == "right") return Choice::kRight;
  if (s == "tie") return Choice::kTie;
  throw ValidationError("choice must be left, right or tie");
}

double choice_value(Choice c, bool swapped) {
  if (c == Choice::kTie) return 0.5;
  const bool first_won = (c == Choice::kLeft) != swapped;
  return first_won ? 1.0 : 0.0;
}

// ---- requests --------------------------------------------------------------

namespace {

void only_keys(const Json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) throw ValidationError(where + ": unknown field '" + key + "'");
  }
}

long long non_negative(const Json& j, const char* key, long long fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer() || j.at(key).get<long long>() < 0) {
    throw ValidationError(std::string(key) + " must be a non-negative integer");
  }
  return j.at(key).get<long long>();
}

bool valid_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
  });
}

long long now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

}  // namespace

SessionRequest SessionRequest::from_json(const Json& j) {
  only_keys(j,
            {"id", "systems", "outputs", "outputs_jsonl", "contexts", "algorithm", "seed",
             "budget", "window", "elimination"},
            "request");
  SessionRequest r;
  if (j.contains("id")) {
    if (!j.at("id").is_string() || !valid_id(j.at("id").get<std::string>())) {
      throw ValidationError("id must be 1-64 characters of [A-Za-z0-9_-]");
    }
    r.id = j.at("id").get<std::string>();
  }
  if (j.contains("outputs") == j.contains("outputs_jsonl")) {
    throw ValidationError("give exactly one of outputs or outputs_jsonl");
  }
  if (j.contains("outputs")) {
    if (!j.at("outputs").is_array()) throw ValidationError("outputs must be an array");
    std::size_t line = 0;
    for (const auto& rec : j.at("outputs")) {
      ++line;
      jsonl::check_keys(rec, {"system_id", "example_id", "text"}, {}, line);
      r.outputs.push_back({jsonl::get_id(rec, "system_id", line),
                           jsonl::get_id(rec, "example_id", line),
                           jsonl::get_string(rec, "text", line)});
    }
  } else {
    if (!j.at("outputs_jsonl").is_string()) throw ValidationError("outputs_jsonl must be a string");
    std::istringstream in(j.at("outputs_jsonl").get<std::string>());
    r.outputs = read_outputs(in);
  }
  if (j.contains("systems")) {
    if (!j.at("systems").is_array()) throw ValidationError("systems must be an array");
    std::set<std::string> listed;
    for (const auto& s : j.at("systems")) {
      if (!s.is_string()) throw ValidationError("systems must be strings");
      if (!listed.insert(s.get<std::string>()).second) {
        throw ValidationError("duplicate system id '" + s.get<std::string>() + "'");
      }
    }
    std::set<std::string> seen;
    for (const auto& o : r.outputs) seen.insert(o.system);
    for (const auto& s : listed) {
      if (!seen.count(s)) throw ValidationError("system '" + s + "' has no outputs");
    }
    for (const auto& s : seen) {
      if (!listed.count(s)) throw ValidationError("outputs name unlisted system '" + s + "'");
    }
  }
  if (j.contains("contexts")) {
    const auto& c = j.at("contexts");
    if (c.is_object()) {
      for (const auto& [k, v] : c.items()) {
        if (!v.is_string()) throw ValidationError("context for '" + k + "' must be a string");
        r.contexts[k] = v.get<std::string>();
      }
    } else if (c.is_array()) {
      std::size_t line = 0;
      for (const auto& rec : c) {
        ++line;
        jsonl::check_keys(rec, {"example_id", "text"}, {}, line);
        r.contexts[jsonl::get_id(rec, "example_id", line)] = jsonl::get_string(rec, "text", line);
      }
    } else {
      throw ValidationError("contexts must be an object or an array");
    }
  }
  if (j.contains("algorithm")) {
    try {
      r.algorithm = AlgorithmSpec::from_json(j.at("algorithm"));
    } catch (const Error& e) {
      throw ValidationError(std::string("algorithm: ") + e.what());
    }
  }
  if (j.contains("seed")) {
    const auto& seed = j.at("seed");
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<long long>() < 0)) {
      throw ValidationError("seed must be a non-negative integer");
    }
    r.seed = j.at("seed").get<std::uint64_t>();
  }
  r.budget = non_negative(j, "budget", 0);
  r.window = non_negative(j, "window", 200);
  if (j.contains("elimination")) {
    const auto& e = j.at("elimination");
    only_keys(e, {"alpha", "copeland_threshold", "scores", "model"}, "elimination");
    UcbEliminationConfig cfg;
    if (e.contains("alpha")) cfg.alpha = e.at("alpha").get<double>();
    if (e.contains("copeland_threshold")) cfg.copeland_threshold = e.at("copeland_threshold").get<double>();
    r.elimination = cfg;
    if (!e.contains("scores") || !e.at("scores").is_array()) {
      throw ValidationError("elimination.scores must be an array");
    }
    std::size_t line = 0;
    for (const auto& rec : e.at("scores")) {
      ++line;
      jsonl::check_keys(rec, {"system_id", "example_id", "score"}, {"samples"}, line);
      ScoreRecord s{jsonl::get_id(rec, "system_id", line), jsonl::get_id(rec, "example_id", line),
                    jsonl::get_number(rec, "score", line), {}};
      if (rec.contains("samples")) s.samples = rec.at("samples").get<std::vector<double>>();
      r.scores.push_back(std::move(s));
    }
    if (!e.contains("model")) throw ValidationError("elimination.model is required");
    r.model = PairwiseModel::from_json(e.at("model"));
  }
  return r;
}

Json SessionRequest::to_json() const {
  Json outs = Json::array();
  for (const auto& o : outputs) {
    outs.push_back({{"system_id", o.system}, {"example_id", o.example}, {"text", o.text}});
  }
  Json j = {{"id", id},
            {"outputs", outs},
            {"contexts", contexts},
            {"algorithm", algorithm.to_json()},
            {"seed", seed},
            {"budget", budget},
            {"window", window}};
  if (elimination) {
    Json scores_json = Json::array();
    for (const auto& s : scores) {
      Json rec = {{"system_id", s.system}, {"example_id", s.example}, {"score", s.score}};
      if (!s.samples.empty()) rec["samples"] = s.samples;
      scores_json.push_back(rec);
    }
    j["elimination"] = {{"alpha", elimination->alpha},
                        {"copeland_threshold", elimination->copeland_threshold},
                        {"scores", scores_json},
                        {"model", model->to_json()}};
  }
  return j;
}

// ---- sessions --------------------------------------------------------------

Session::Session(SessionRequest request, std::filesystem::path log_path)
    : request_(std::move(request)), log_path_(std::move(log_path)) {
  if (!log_path_.empty() && std::filesystem::exists(log_path_)) {
    throw ConflictError("session '" + request_.id + "' already exists");
  }
  init();
  append({{"type", "created"}, {"request", request_.to_json()}});
}

Session::Session(SessionRequest request, std::filesystem::path log_path, Replaying)
    : request_(std::move(request)), log_path_(std::move(log_path)), replaying_(true) {
  init();
}

void Session::init() {
  if (!valid_id(request_.id)) throw ValidationError("invalid session id '" + request_.id + "'");
  std::set<std::string> systems, examples;
  for (const auto& o : request_.outputs) {
    systems.insert(o.system);
    examples.insert(o.example);
    if (!texts_.emplace(std::make_pair(o.system, o.example), o.text).second) {
      throw ValidationError("duplicate output (" + o.system + ", " + o.example + ")");
    }
  }
  if (systems.size() < 2) throw ValidationError("a session needs at least 2 systems");
  for (const auto& s : systems) {
    for (const auto& e : examples) {
      if (!texts_.count({s, e})) {
        throw ValidationError("system '" + s + "' has no output for example '" + e + "'");
      }
    }
  }
  for (const auto& [e, text] : request_.contexts) {
    (void)text;
    if (!examples.count(e)) throw ValidationError("context for unknown example '" + e + "'");
  }
  roster_ = Roster({systems.begin(), systems.end()});
  examples_.assign(examples.begin(), examples.end());
  counts_ = WinCountMatrix(roster_.size());

  std::vector<SystemId> survivors;
  if (request_.elimination) {
    const auto table = MetricScoreTable::from_records(request_.scores);
    if (table.roster().names() != roster_.names()) {
      throw ValidationError("elimination scores name a different set of systems");
    }
    elimination_ = ucb_eliminate(table, *request_.model, *request_.elimination);
    survivors = elimination_->survivors();
  }
  learner_ = std::make_unique<ComposedLearner>(request_.algorithm, roster_.size(),
                                               derive_seed(request_.seed, 0), survivors,
                                               ComposeConfig{});
  rng_ = Rng(derive_seed(request_.seed, 1));
  recommendation_ = learner_->recommend();
  refresh_status();
}

SessionStatus Session::status() const {
  std::lock_guard<std::mutex> lock(mu_);
  return status_;
}

void Session::refresh_status() {
  if (learner_->terminated()) {
    status_ = SessionStatus::kConverged;
  } else if (request_.window > 0 && humans_ - stable_since_ >= request_.window) {
    status_ = SessionStatus::kConverged;
  } else if (request_.budget > 0 && humans_ >= request_.budget) {
    status_ = SessionStatus::kExhausted;
  }
}

void Session::append(Json record) {
  record["seq"] = seq_;
  record["time"] = now_ms();
  std::string line = record.dump();
  if (!log_path_.empty()) {
    const std::string out = line + "\n";
    const int fd = ::open(log_path_.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
    if (fd < 0) throw Error("cannot open log " + log_path_.string() + ": " + std::strerror(errno));
    const bool ok = ::write(fd, out.data(), out.size()) == static_cast<ssize_t>(out.size()) &&
                    ::fsync(fd) == 0;
    ::close(fd);
    if (!ok) throw Error("cannot append to log " + log_path_.string());
  }
  log_.push_back(std::move(line));
  ++seq_;
}

Task Session::make_task(const std::string& annotator) {
  Task t;
  t.id = "t" + std::to_string(next_task_++);
  t.pair = learner_->select_pair();
  t.example = examples_[uniform_index(rng_, examples_.size())];
  t.swapped = bernoulli(rng_, 0.5);
  t.annotator = annotator;
  return t;
}

void Session::apply(const Task& task, double value) {
  const ComparisonOutcome o{task.pair, value, Source::kHuman, task.example};
  learner_->update(o);
  counts_.record(task.pair, value);
  ++humans_;
  const SystemId rec = learner_->recommend();
  if (rec != recommendation_) {
    recommendation_ = rec;
    stable_since_ = humans_;
  }
  refresh_status();
}

Json Session::task_payload(const Task& t) const {
  const SystemId left = t.swapped ? t.pair.second : t.pair.first;
  const SystemId right = t.swapped ? t.pair.first : t.pair.second;
  const auto ctx = request_.contexts.find(t.example);
  return {{"status", "active"},
          {"task",
           {{"task_id", t.id},
            {"example_id", t.example},
            {"context", ctx == request_.contexts.end() ? "" : ctx->second},
            {"left", texts_.at({roster_.name(left), t.example})},
            {"right", texts_.at({roster_.name(right), t.example})}}},
          {"human_annotations", humans_}};
}

Json Session::terminal_payload() const {
  return {{"status", session_status_name(status_)},
          {"recommendation", roster_.name(recommendation_)},
          {"human_annotations", humans_}};
}

Json Session::next_task(const std::string& annotator) {
  std::lock_guard<std::mutex> lock(mu_);
  if (status_ != SessionStatus::kActive) return terminal_payload();
  Task t = make_task(annotator);
  append({{"type", "task"},
          {"task_id", t.id},
          {"pair", {roster_.name(t.pair.first), roster_.name(t.pair.second)}},
          {"example_id", t.example},
          {"swapped", t.swapped},
          {"annotator", annotator}});
  Json payload = task_payload(t);
  tasks_.emplace(t.id, std::move(t));
  return payload;
}

Json Session::submit(const std::string& task_id, const std::string& choice,
                     const std::string& annotator) {
  const Choice c = parse_choice(choice);
  std::lock_guard<std::mutex> lock(mu_);
  if (status_ != SessionStatus::kActive) {
    throw ConflictError("session is " + std::string(session_status_name(status_)));
  }
  const auto it = tasks_.find(task_id);
  if (it == tasks_.end()) throw ConflictError("unknown or already submitted task '" + task_id + "'");
  const Task task = it->second;
  const double value = choice_value(c, task.swapped);
  apply(task, value);
  tasks_.erase(it);
  append({{"type", "judgment"},
          {"task_id", task.id},
          {"choice", choice},
          {"pair", {roster_.name(task.pair.first), roster_.name(task.pair.second)}},
          {"example_id", task.example},
          {"outcome", value},
          {"source", "human"},
          {"annotator", annotator.empty() ? task.annotator : annotator}});
  Json lb = leaderboard_unlocked();
  return {{"accepted", true}, {"seq", seq_ - 1}, {"leaderboard", lb}};
}

Json Session::leaderboard() const {
  std::lock_guard<std::mutex> lock(mu_);
  return leaderboard_unlocked();
}

Json Session::leaderboard_unlocked() const {
  const auto scores = copeland_scores(counts_);
  const auto survivors = learner_->survivors();
  Json systems = Json::array();
  std::vector<std::vector<double>> fractions;
  std::vector<std::vector<std::int64_t>> trials;
  for (SystemId i = 0; i < roster_.size(); ++i) {
    double wins = 0;
    std::int64_t n = 0;
    fractions.emplace_back();
    trials.emplace_back();
    for (SystemId j = 0; j < roster_.size(); ++j) {
      fractions.back().push_back(i == j ? 0.5 : counts_.estimate(i, j));
      trials.back().push_back(i == j ? 0 : counts_.trials(i, j));
      if (i != j) {
        wins += counts_.wins(i, j);
        n += counts_.trials(i, j);
      }
    }
    systems.push_back({{"system", roster_.name(i)},
                       {"copeland", scores[static_cast<std::size_t>(i)]},
                       {"wins", wins},
                       {"comparisons", n},
                       {"eliminated", !std::binary_search(survivors.begin(), survivors.end(), i)}});
  }
  return {{"systems", systems},
          {"win_fractions", fractions},
          {"pair_counts", trials},
          {"recommendation", roster_.name(recommendation_)},
          {"human_annotations", humans_},
          {"stable_for", humans_ - stable_since_},
          {"window", request_.window},
          {"budget", request_.budget},
          {"status", session_status_name(status_)}};
}

Json Session::summary() const {
  std::lock_guard<std::mutex> lock(mu_);
  Json survivors = Json::array();
  for (SystemId s : learner_->survivors()) survivors.push_back(roster_.name(s));
  Json j = {{"id", request_.id},
            {"status", session_status_name(status_)},
            {"systems", roster_.names()},
            {"examples", examples_.size()},
            {"algorithm", request_.algorithm.to_json()},
            {"survivors", survivors},
            {"human_annotations", humans_},
            {"outstanding", tasks_.size()},
            {"recommendation", roster_.name(recommendation_)},
            {"log_records", seq_}};
  if (elimination_) j["elimination"] = elimination_->to_json(roster_);
  return j;
}

std::string Session::log_text() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::string out;
  for (const auto& l : log_) out += l + "\n";
  return out;
}

Json Session::state() const {
  std::lock_guard<std::mutex> lock(mu_);
  Json outstanding = Json::array();
  for (const auto& [id, t] : tasks_) {
    outstanding.push_back({id, t.pair.first, t.pair.second, t.example, t.swapped});
  }
  Json j = {{"wins", counts_.raw_wins()},
            {"trials", counts_.raw_trials()},
            {"humans", humans_},
            {"seq", seq_},
            {"next_task", next_task_},
            {"stable_since", stable_since_},
            {"recommendation", recommendation_},
            {"status", session_status_name(status_)},
            {"outstanding", outstanding},
            {"rng", rng_state(rng_)}};
  if (const Learner* inner = learner_->inner()) {
    j["learner"] = {{"wins", inner->counts().raw_wins()},
                    {"trials", inner->counts().raw_trials()},
                    {"selections", inner->selections()},
                    {"terminated", inner->terminated()},
                    {"active", inner->active_set()},
                    {"recommend", inner->recommend()}};
  }
  return j;
}

// ---- replay ----------------------------------------------------------------

std::unique_ptr<Session> Session::replay(const std::filesystem::path& log_path) {
  std::ifstream in(log_path);
  if (!in) throw Error("cannot open log " + log_path.string());
  return replay(in, log_path);
}

std::unique_ptr<Session> Session::replay(std::istream& in, std::filesystem::path log_path) {
  std::unique_ptr<Session> s;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    Json rec;
    try {
      rec = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ValidationError(std::string("invalid JSON: ") + e.what(), n);
    }
    try {
      const std::string type = rec.at("type").get<std::string>();
      if (!s) {
        if (type != "created") throw ValidationError("log must start with a created record", n);
        s.reset(new Session(SessionRequest::from_json(rec.at("request")), log_path, Replaying{}));
      } else if (type == "task") {
        Task t = s->make_task(rec.at("annotator").get<std::string>());
        const Json pair = {s->roster_.name(t.pair.first), s->roster_.name(t.pair.second)};
        if (t.id != rec.at("task_id") || pair != rec.at("pair") || t.example != rec.at("example_id") ||
            t.swapped != rec.at("swapped").get<bool>()) {
          throw ValidationError("replayed task differs from the log", n);
        }
        s->tasks_.emplace(t.id, std::move(t));
      } else if (type == "judgment") {
        const auto it = s->tasks_.find(rec.at("task_id").get<std::string>());
        if (it == s->tasks_.end()) throw ValidationError("judgment for an unknown task", n);
        const double value = choice_value(parse_choice(rec.at("choice").get<std::string>()),
                                          it->second.swapped);
        if (value != rec.at("outcome").get<double>()) {
          throw ValidationError("replayed outcome differs from the log", n);
        }
        s->apply(it->second, value);
        s->tasks_.erase(it);
      } else {
        throw ValidationError("unknown record type '" + type + "'", n);
      }
      if (rec.at("seq").get<long long>() != s->seq_) throw ValidationError("sequence gap", n);
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      throw ValidationError(e.what(), n);
    }
    s->log_.push_back(line);
    ++s->seq_;
  }
  if (!s) throw ValidationError("empty log");
  s->replaying_ = false;
  return s;
}

// ---- manager ---------------------------------------------------------------

SessionManager::SessionManager(std::filesystem::path data_dir) : dir_(std::move(data_dir)) {
  if (dir_.empty()) return;
  std::filesystem::create_directories(dir_);
  std::vector<std::filesystem::path> logs;
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.path().extension() == ".jsonl") logs.push_back(entry.path());
  }
  std::sort(logs.begin(), logs.end());
  for (const auto& p : logs) {
    auto s = Session::replay(p);
    const std::string id = s->id();
    sessions_.emplace(id, std::move(s));
  }
}

std::string SessionManager::create(const Json& body) {
  SessionRequest req = SessionRequest::from_json(body);
  std::lock_guard<std::mutex> lock(mu_);
  if (req.id.empty()) {
    std::random_device rd;
    do {
      char buf[24];
      std::snprintf(buf, sizeof buf, "s%08x%04llx", rd(),
                    static_cast<unsigned long long>(++counter_ & 0xffff));
      req.id = buf;
    } while (sessions_.count(req.id));
  }
  if (sessions_.count(req.id)) throw ConflictError("session '" + req.id + "' already exists");
  const std::string id = req.id;
  auto s = std::make_unique<Session>(std::move(req),
                                     dir_.empty() ? std::filesystem::path{} : dir_ / (id + ".jsonl"));
  sessions_.emplace(id, std::move(s));
  return id;
}

Session& SessionManager::get(const std::string& id) {
  std::lock_guard<std::mutex> lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw LookupError("unknown session '" + id + "'");
  return *it->second;
}

std::vector<std::string> SessionManager::ids() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) {
    (void)s;
    out.push_back(id);
  }
  return out;
}

}  // namespace activeeval
