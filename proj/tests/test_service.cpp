#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "activeeval/service.hpp"
#include "httplib.h"

namespace ae = activeeval;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

Json request(int systems, int examples, const std::string& algorithm = "rmed") {
  Json outs = Json::array();
  for (int s = 0; s < systems; ++s)
    for (int e = 0; e < examples; ++e)
      outs.push_back({{"system_id", "sys" + std::to_string(s)},
                      {"example_id", "ex" + std::to_string(e)},
                      {"text", "output " + std::to_string(s) + "/" + std::to_string(e)}});
  return {{"id", "demo"}, {"outputs", outs}, {"algorithm", algorithm}, {"seed", 4},
          {"window", 0}};
}

// Outstanding task as recorded in state(): [id, a, b, example, swapped].
Json outstanding(const ae::Session& s, const std::string& id) {
  const Json state = s.state();
  for (const auto& t : state.at("outstanding"))
    if (t[0] == id) return t;
  return nullptr;
}

// Scripted annotator: prefers the higher-numbered system shown.
std::string scripted_choice(const ae::Session& s, const std::string& task_id) {
  const auto t = outstanding(s, task_id);
  const int a = t[1], b = t[2];
  const bool swapped = t[4];
  const int left = swapped ? b : a, right = swapped ? a : b;
  return left > right ? "left" : "right";
}

fs::path temp_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("activeeval_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ae::SessionRequest parse(const Json& j) { return ae::SessionRequest::from_json(j); }

}  // namespace

TEST(Choice, SwapDerandomisation) {
  EXPECT_EQ(ae::choice_value(ae::Choice::kLeft, false), 1.0);
  EXPECT_EQ(ae::choice_value(ae::Choice::kLeft, true), 0.0);
  EXPECT_EQ(ae::choice_value(ae::Choice::kRight, true), 1.0);
  EXPECT_EQ(ae::choice_value(ae::Choice::kTie, true), 0.5);
  EXPECT_THROW(ae::parse_choice("both"), ae::ValidationError);
}

TEST(Session, TwoSystemsServeTheOnlyPair) {
  ae::Session s(parse(request(2, 10)), {});
  EXPECT_EQ(s.status(), ae::SessionStatus::kActive);
  for (int i = 0; i < 5; ++i) {
    const auto task = s.next_task("ann");
    ASSERT_EQ(task.at("status"), "active");
    const auto t = outstanding(s, task.at("task").at("task_id"));
    EXPECT_EQ(t[1].get<int>() + t[2].get<int>(), 1);
    EXPECT_NE(t[1], t[2]);
    const std::string left = task.at("task").at("left");
    EXPECT_EQ(left.rfind("output ", 0), 0u);
  }
}

TEST(Session, SubmitUsesDisplayedOrder) {
  ae::Session s(parse(request(2, 4)), {});
  bool saw_swapped = false, saw_plain = false;
  for (int i = 0; i < 40 && !(saw_swapped && saw_plain); ++i) {
    const std::string id = s.next_task("a").at("task").at("task_id");
    const bool swapped = outstanding(s, id)[4];
    (swapped ? saw_swapped : saw_plain) = true;
    const double before = s.counts().wins(0, 1);
    s.submit(id, "left");
    EXPECT_EQ(s.counts().wins(0, 1) - before, swapped ? 0.0 : 1.0);
  }
  EXPECT_TRUE(saw_swapped && saw_plain);
}

TEST(Session, DuplicateSubmissionConflicts) {
  ae::Session s(parse(request(3, 5)), {});
  const std::string id = s.next_task("a").at("task").at("task_id");
  const auto r = s.submit(id, "tie");
  EXPECT_TRUE(r.at("accepted").get<bool>());
  const auto before = s.state();
  EXPECT_THROW(s.submit(id, "left"), ae::ConflictError);
  EXPECT_THROW(s.submit("t999", "left"), ae::ConflictError);
  EXPECT_EQ(s.state(), before);
}

TEST(Session, ConcurrentAnnotatorsGetDistinctTasks) {
  ae::Session s(parse(request(4, 5)), {});
  std::set<std::string> ids;
  for (auto who : {"x", "y", "z"}) ids.insert(s.next_task(who).at("task").at("task_id").get<std::string>());
  EXPECT_EQ(ids.size(), 3u);
  EXPECT_EQ(s.outstanding(), 3u);
}

TEST(Session, ReplayReproducesState) {
  const auto dir = temp_dir("replay");
  const auto log = dir / "demo.jsonl";
  {
    ae::Session s(parse(request(4, 6)), log);
    for (int i = 0; i < 100; ++i) {
      const std::string id = s.next_task("a").at("task").at("task_id");
      s.submit(id, scripted_choice(s, id));
    }
    s.next_task("a");  // left outstanding
    const auto back = ae::Session::replay(log);
    EXPECT_EQ(back->state(), s.state());
    EXPECT_EQ(back->leaderboard(), s.leaderboard());
    EXPECT_EQ(back->next_task("a"), s.next_task("a"));
    EXPECT_EQ(s.leaderboard().at("recommendation"), "sys3");
  }
  fs::remove_all(dir);
}

TEST(Session, TamperedLogIsRejectedWithLine) {
  ae::Session s(parse(request(3, 4)), {});
  for (int i = 0; i < 5; ++i) {
    const std::string id = s.next_task("a").at("task").at("task_id");
    s.submit(id, "left");
  }
  std::string text = s.log_text();
  const auto pos = text.find("\"outcome\":1.0");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 13, "\"outcome\":0.0");
  std::istringstream in(text);
  try {
    ae::Session::replay(in);
    FAIL();
  } catch (const ae::ValidationError& e) {
    EXPECT_GT(e.line(), 1u);
  }
}

TEST(Session, SwapIsBalanced) {
  ae::Session s(parse(request(3, 3, "uniform")), {});
  int swapped = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const std::string id = s.next_task("a").at("task").at("task_id");
    swapped += outstanding(s, id)[4].get<bool>() ? 1 : 0;
    s.submit(id, "tie");
  }
  EXPECT_NEAR(static_cast<double>(swapped) / n, 0.5, 0.02);
}

TEST(Session, MalformedOutputsCarryLine) {
  Json j = {{"outputs_jsonl",
             "{\"system_id\": \"a\", \"example_id\": \"e\", \"text\": \"x\"}\n{\"system_id\": \"b\"}\n"}};
  try {
    parse(j);
    FAIL();
  } catch (const ae::ValidationError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  auto bad = request(2, 2);
  bad["outputs"].erase(1);
  EXPECT_THROW(ae::Session(parse(bad), {}), ae::ValidationError);
  bad = request(2, 2);
  bad["surprise"] = 1;
  EXPECT_THROW(parse(bad), ae::ValidationError);
}

TEST(Session, EliminationToOneSurvivorConverges) {
  Json j = request(3, 4);
  Json scores = Json::array();
  for (int s = 0; s < 3; ++s)
    for (int e = 0; e < 4; ++e)
      scores.push_back({{"system_id", "sys" + std::to_string(s)},
                        {"example_id", "ex" + std::to_string(e)},
                        {"score", s == 2 ? 1.0 : 0.0},
                        {"samples", s == 2 ? Json{1.0, 1.0} : Json{0.0, 0.0}}});
  ae::ScorePreprocessor prep;
  prep.variant = ae::ProbabilityModel::kLinear;
  prep.delta = 1.0;
  j["elimination"] = {{"alpha", 0.6}, {"copeland_threshold", 0.8}, {"scores", scores},
                      {"model", ae::PairwiseModel(prep, {0.45, 0.55}).to_json()}};
  ae::Session s(parse(j), {});
  EXPECT_EQ(s.status(), ae::SessionStatus::kConverged);
  const auto t = s.next_task("a");
  EXPECT_EQ(t.at("status"), "converged");
  EXPECT_EQ(t.at("recommendation"), "sys2");
  EXPECT_EQ(t.at("human_annotations"), 0);
}

TEST(Session, WindowAndBudget) {
  auto j = request(3, 3);
  j["budget"] = 7;
  ae::Session b(parse(j), {});
  for (int i = 0; i < 7; ++i) b.submit(b.next_task("a").at("task").at("task_id"), "tie");
  EXPECT_EQ(b.status(), ae::SessionStatus::kExhausted);
  EXPECT_THROW(b.submit("t0", "tie"), ae::ConflictError);

  j = request(3, 3);
  j["window"] = 5;
  ae::Session w(parse(j), {});
  int n = 0;
  while (w.status() == ae::SessionStatus::kActive && n < 1000) {
    w.submit(w.next_task("a").at("task").at("task_id"), "tie");
    ++n;
  }
  EXPECT_EQ(w.status(), ae::SessionStatus::kConverged);
  EXPECT_GE(w.leaderboard().at("stable_for").get<long long>(), 5);
}

TEST(SessionManager, RecoversFromDirectory) {
  const auto dir = temp_dir("manager");
  Json before;
  {
    ae::SessionManager m(dir);
    EXPECT_EQ(m.create(request(3, 4)), "demo");
    EXPECT_THROW(m.create(request(3, 4)), ae::ConflictError);
    auto& s = m.get("demo");
    for (int i = 0; i < 20; ++i) {
      const std::string id = s.next_task("a").at("task").at("task_id");
      s.submit(id, scripted_choice(s, id));
    }
    before = s.state();
  }
  ae::SessionManager again(dir);
  EXPECT_EQ(again.ids(), std::vector<std::string>{"demo"});
  EXPECT_EQ(again.get("demo").state(), before);
  EXPECT_THROW(again.get("missing"), ae::LookupError);
  fs::remove_all(dir);
}

TEST(Http, EndToEnd) {
  ae::SessionManager sessions;
  ae::Server server(sessions, {"127.0.0.1", 0, "secret"});
  const int port = server.start();
  ASSERT_GT(port, 0);
  httplib::Client cli("127.0.0.1", port);
  const httplib::Headers auth = {{"Authorization", "Bearer secret"}};

  auto res = cli.Post("/sessions", request(3, 4).dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 401);

  res = cli.Post("/sessions", auth, request(3, 4).dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 201);
  EXPECT_EQ(Json::parse(res->body).at("id"), "demo");

  res = cli.Get("/sessions/nope", auth);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);

  res = cli.Get("/sessions/demo/next?annotator=ann1", auth);
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  const std::string task = Json::parse(res->body).at("task").at("task_id");

  const Json judgment = {{"task_id", task}, {"choice", "left"}};
  res = cli.Post("/sessions/demo/judgments", auth, judgment.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(Json::parse(res->body).at("leaderboard").at("human_annotations"), 1);
  res = cli.Post("/sessions/demo/judgments", auth, judgment.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 409);

  res = cli.Post("/sessions/demo/judgments", auth, "{\"task_id\": \"t1\"}", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);

  Json bad = {{"outputs_jsonl", "{}\n"}};
  res = cli.Post("/sessions", auth, bad.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(Json::parse(res->body).at("line"), 1);

  res = cli.Get("/sessions/demo/leaderboard", auth);
  ASSERT_TRUE(res);
  EXPECT_EQ(Json::parse(res->body).at("systems").size(), 3u);
  res = cli.Get("/sessions/demo/log", auth);
  ASSERT_TRUE(res);
  EXPECT_EQ(std::count(res->body.begin(), res->body.end(), '\n'), 3);
  server.stop();
}
