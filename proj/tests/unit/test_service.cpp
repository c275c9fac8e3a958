#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "afro/error.hpp"
#include "afro/service.hpp"
#include "afro/util.hpp"
#include "httplib.h"
#include "test_support.hpp"

using namespace afro;
using namespace afro::service;
using afro::testing::TempDir;

namespace {

TaskUtterance utt(const std::string& id, const std::string& model, const std::string& country = "NG",
                  const std::string& text = "good morning") {
  return {id, model, text, country, country == "NG" ? "yoruba" : "swahili", Gender::female, "audio/" + id + ".wav"};
}

RatingTask mos(const std::string& id, const std::string& model = "m1", const std::string& country = "NG") {
  return {id, TaskKind::mos, {utt(id + "_u", model, country)}, {"overall", "naturalness"}};
}

RatingTask accent(const std::string& id, const std::string& country) {
  return {id, TaskKind::accent_match, {utt(id + "_u", "m1", country)}, {"accent_match"}};
}

RatingTask pref(const std::string& id, const std::string& a, const std::string& b) {
  return {id, TaskKind::preference, {utt(id + "_l", a), utt(id + "_r", b)}, {"naturalness"}};
}

RatingEvent likert(const std::string& task, const std::string& rater, std::map<std::string, int> values) {
  RatingEvent e;
  e.task_id = task;
  e.rater_id = rater;
  e.values = std::move(values);
  e.timestamp = "2024-01-01T00:00:00Z";
  return e;
}

RatingEvent choose(const std::string& task, const std::string& rater, const std::string& side) {
  RatingEvent e;
  e.task_id = task;
  e.rater_id = rater;
  e.chosen_side = side;
  e.timestamp = "2024-01-01T00:00:00Z";
  return e;
}

const RaterMeta kNG{"NG", "yoruba", "female"};
const RaterMeta kKE{"KE", "swahili", "male"};

}  // namespace

TEST_CASE("task validation") {
  CHECK_NOTHROW(mos("t1").validate());
  CHECK_NOTHROW(pref("p", "a", "b").validate());
  CHECK_THROWS_AS(pref("p", "a", "a").validate(), ValidationError);
  auto mismatched = pref("p", "a", "b");
  mismatched.utterances[1].text = "other";
  CHECK_THROWS_AS(mismatched.validate(), ValidationError);
  auto no_dims = mos("t");
  no_dims.dimensions.clear();
  CHECK_THROWS_AS(no_dims.validate(), ValidationError);
  auto bad_dim = mos("t");
  bad_dim.dimensions = {"loudness"};
  CHECK_THROWS_AS(bad_dim.validate(), ValidationError);
  auto two = mos("t");
  two.utterances.push_back(utt("x", "m2"));
  CHECK_THROWS_AS(two.validate(), ValidationError);

  const std::string good = to_json(mos("t1")).dump() + "\n" + to_json(pref("p1", "a", "b")).dump() + "\n";
  const auto tasks = parse_tasks(good);
  REQUIRE(tasks.size() == 2);
  CHECK(tasks[1].kind == TaskKind::preference);
  CHECK(to_json(tasks[0]).dump() == to_json(mos("t1")).dump());
  try {
    parse_tasks(good + to_json(mos("t1")).dump() + "\n");
    FAIL("expected duplicate task");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("rating validation") {
  const auto t = mos("t1");
  CHECK_NOTHROW(validate_event(likert("t1", "r1", {{"overall", 4}, {"naturalness", 5}}), t));
  CHECK_THROWS_AS(event_from_json(nlohmann::json::parse(R"({"task_id":"t1","rater_id":"r1","values":{"overall":4.5}})")),
                  ValidationError);
  CHECK_THROWS_AS(event_from_json(nlohmann::json::parse(R"({"task_id":"t1","rater_id":"r1","values":{"overall":"4"}})")),
                  ValidationError);
  CHECK_THROWS_AS(event_from_json(nlohmann::json::parse(R"({"task_id":"t1","rater_id":"r1","values":{"overall":6}})")),
                  ValidationError);
  CHECK_THROWS_AS(event_from_json(nlohmann::json::parse(R"({"task_id":"t1","rater_id":"r1","values":{"overall":0}})")),
                  ValidationError);
  CHECK_THROWS_AS(validate_event(likert("t1", "r1", {{"accentedness", 3}}), t), ValidationError);
  CHECK_THROWS_AS(validate_event(likert("t1", "r1", {}), t), ValidationError);
  CHECK_THROWS_AS(validate_event(likert("t1", "bad id!", {{"overall", 3}}), t), ValidationError);
  CHECK_THROWS_AS(validate_event(choose("t1", "r1", "left"), t), ValidationError);

  const auto p = pref("p", "a", "b");
  CHECK_NOTHROW(validate_event(choose("p", "r1", "right"), p));
  CHECK_THROWS_AS(validate_event(likert("p", "r1", {{"naturalness", 3}}), p), ValidationError);
  CHECK_THROWS_AS(validate_event(choose("p", "r1", "middle"), p), ValidationError);
  RatingEvent none = choose("p", "r1", "left");
  none.chosen_side.reset();
  CHECK_THROWS_AS(validate_event(none, p), ValidationError);

  const auto e = likert("t1", "r1", {{"overall", 2}});
  CHECK(event_from_json(nlohmann::json::parse(to_json(e).dump())) == e);
}

TEST_CASE("next_task assignment rules") {
  TempDir dir;
  {
    EvalService svc({accent("a_ng", "NG"), mos("m")}, dir / "log1.jsonl");
    CHECK(svc.next_task("r1", kNG)->task_id == "a_ng");
    CHECK(svc.next_task("r2", kKE)->task_id == "m");  // falls back
  }
  {
    EvalService svc({accent("a_ng", "NG")}, dir / "log2.jsonl");
    CHECK_FALSE(svc.next_task("r2", kKE).has_value());
    CHECK_FALSE(svc.next_task("r3", RaterMeta{}).has_value());
  }
  {
    EvalService svc({mos("t1"), mos("t2")}, dir / "log3.jsonl");
    for (const char* r : {"a", "b", "c"}) svc.submit(likert("t1", r, {{"overall", 3}}));
    svc.submit(likert("t2", "a", {{"overall", 3}}));
    CHECK(svc.ratings_for("t1") == 3);
    CHECK(svc.ratings_for("t2") == 1);
    CHECK(svc.next_task("z", kNG)->task_id == "t2");
    // never a task the rater already completed
    CHECK(svc.next_task("a", kNG) == std::nullopt);
    CHECK(svc.next_task("b", kNG)->task_id == "t2");
  }
  {
    EvalService svc({mos("old"), mos("new")}, dir / "log4.jsonl");
    CHECK(svc.next_task("r", kNG)->task_id == "old");
  }
}

TEST_CASE("resubmission replaces and is audited") {
  TempDir dir;
  EvalService svc({mos("t1")}, dir / "events.jsonl");
  const auto first = svc.submit(likert("t1", "r1", {{"overall", 2}}));
  CHECK_FALSE(first.replaced);
  const auto second = svc.submit(likert("t1", "r1", {{"overall", 5}}));
  CHECK(second.replaced);
  CHECK(second.sequence == 2);
  CHECK(svc.ratings_for("t1") == 1);
  const auto rep = svc.results({});
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.rows[0].summary.mean == 5.0);
  CHECK(rep.rows[0].summary.n == 1);
  const std::string audit = read_file(dir / "events.jsonl.audit.jsonl");
  CHECK(audit.find(R"("event":"resubmission")") != std::string::npos);
  CHECK(audit.find(R"("sequence":2)") != std::string::npos);
  CHECK_THROWS_AS(svc.submit(likert("nope", "r1", {{"overall", 2}})), std::out_of_range);
  CHECK(svc.event_count() == 2);
}

TEST_CASE("results examples") {
  TempDir dir;
  EvalService svc({mos("t1"), mos("t2"), mos("t3"), pref("p1", "A", "B"), pref("p2", "B", "C")}, dir / "e.jsonl");
  CHECK(svc.results({"model"}).rows.empty());
  CHECK(svc.results({"model"}).leaderboard.empty());
  svc.submit(likert("t1", "r1", {{"overall", 3}}));
  svc.submit(likert("t2", "r1", {{"overall", 3}}));
  svc.submit(likert("t3", "r1", {{"overall", 3}}));
  const auto rep = svc.results({"model"});
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.rows[0].group == std::vector<std::string>{"m1"});
  CHECK(rep.rows[0].summary.n == 3);
  CHECK(rep.rows[0].summary.mean == 3.0);
  CHECK(rep.rows[0].summary.ci95_half_width == 0.0);

  svc.submit(choose("p1", "r1", "right"));  // B
  svc.submit(choose("p1", "r2", "right"));  // B
  svc.submit(choose("p2", "r1", "right"));  // C
  const auto board = svc.results({}).leaderboard;
  REQUIRE(board.size() == 3);
  CHECK(board[0].model == "B");
  CHECK(board[0].wins == 2);
  CHECK(board[1].model == "C");
  CHECK(board[2].model == "A");
  CHECK(board[2].wins == 0);
}

TEST_CASE("replay from the log reproduces results byte for byte") {
  TempDir dir;
  const std::vector<RatingTask> tasks = {mos("t1", "m1"), mos("t2", "m2", "KE"), accent("a1", "NG"),
                                         pref("p1", "m1", "m2")};
  std::string before;
  {
    EvalService svc(tasks, dir / "log.jsonl");
    std::mt19937_64 rng(1);
    for (int i = 0; i < 60; ++i) {
      const std::string r = "r" + std::to_string(rng() % 15);
      switch (rng() % 4) {
        case 0: svc.submit(likert("t1", r, {{"overall", int(rng() % 5) + 1}})); break;
        case 1: svc.submit(likert("t2", r, {{"naturalness", int(rng() % 5) + 1}})); break;
        case 2: svc.submit(likert("a1", r, {{"accent_match", int(rng() % 5) + 1}})); break;
        default: svc.submit(choose("p1", r, rng() % 2 ? "left" : "right"));
      }
    }
    before = svc.results_json({"model", "country"});
  }
  // simulate a crash halfway through an append
  {
    std::ofstream f(dir / "log.jsonl", std::ios::app);
    f << R"({"task_id":"t1","rater_id":"late","val)";
  }
  EvalService replayed(tasks, dir / "log.jsonl");
  CHECK(replayed.results_json({"model", "country"}) == before);
  CHECK(replayed.event_count() == 60);
  const std::string log = read_file(dir / "log.jsonl");
  CHECK(log.back() == '\n');
  replayed.submit(likert("t1", "new", {{"overall", 1}}));
  EvalService again(tasks, dir / "log.jsonl");
  CHECK(again.event_count() == 61);

  std::ofstream(dir / "bad.jsonl") << R"({"task_id":"t1","rater_id":"r","values":{"overall":9}})" << "\n";
  CHECK_THROWS_AS(EvalService(tasks, dir / "bad.jsonl"), ParseError);
}

TEST_CASE("assignment fairness with round-robin raters") {
  TempDir dir;
  const std::size_t N = 7, K = 5;
  std::vector<RatingTask> tasks;
  for (std::size_t i = 0; i < N; ++i) tasks.push_back(mos("t" + std::to_string(i)));
  EvalService svc(tasks, dir / "f.jsonl");
  for (std::size_t round = 0; round < N; ++round) {
    for (std::size_t k = 0; k < K; ++k) {
      const std::string r = "rater" + std::to_string(k);
      const auto t = svc.next_task(r, kNG);
      REQUIRE(t.has_value());
      svc.submit(likert(t->task_id, r, {{"overall", 4}}));
      std::size_t lo = SIZE_MAX, hi = 0;
      for (const auto& task : tasks) {
        lo = std::min(lo, svc.ratings_for(task.task_id));
        hi = std::max(hi, svc.ratings_for(task.task_id));
      }
      CHECK(hi - lo <= 1);
    }
  }
  for (const auto& task : tasks) CHECK(svc.ratings_for(task.task_id) == K);
  CHECK_FALSE(svc.next_task("rater0", kNG).has_value());
}

TEST_CASE("public payload hides model identity") {
  auto p = pref("p1", "secret-model-a", "secret-model-b");
  p.utterances[0].utterance_id = "xtts_ng_001";
  const std::string s = public_payload(p).dump();
  CHECK(s.find("secret-model") == std::string::npos);
  CHECK(s.find("xtts_ng_001") == std::string::npos);
  CHECK(s.find(audio_key("xtts_ng_001")) != std::string::npos);
  CHECK(s.find(R"("side":"left")") != std::string::npos);
  const std::string m = public_payload(mos("t1", "hidden")).dump();
  CHECK(m.find("hidden") == std::string::npos);
  CHECK(m.find(R"("country":"NG")") != std::string::npos);
}

TEST_CASE("concurrent submissions are all acknowledged once") {
  TempDir dir;
  std::vector<RatingTask> tasks;
  for (int i = 0; i < 20; ++i) tasks.push_back(mos("t" + std::to_string(i)));
  EvalService svc(tasks, dir / "c.jsonl");
  std::vector<std::vector<std::uint64_t>> seqs(4);
  std::vector<std::thread> pool;
  for (int w = 0; w < 4; ++w)
    pool.emplace_back([&, w] {
      for (int i = 0; i < 20; ++i)
        seqs[w].push_back(svc.submit(likert("t" + std::to_string(i), "w" + std::to_string(w), {{"overall", 3}})).sequence);
    });
  for (auto& t : pool) t.join();
  std::set<std::uint64_t> all;
  for (const auto& v : seqs) all.insert(v.begin(), v.end());
  CHECK(all.size() == 80);
  CHECK(*all.rbegin() == 80);
  CHECK(svc.results({}).rows[0].summary.n == 80);
  EvalService replayed(tasks, dir / "c.jsonl");
  CHECK(replayed.results_json({"model"}) == svc.results_json({"model"}));
}

TEST_CASE("group_by parsing") {
  CHECK(parse_group_by("model,country").size() == 2);
  CHECK(parse_group_by("").empty());
  CHECK(parse_group_by("model, accent") == std::vector<std::string>{"model", "accent"});
  CHECK_THROWS_AS(parse_group_by("model,rater"), ValidationError);
  CHECK_THROWS_AS(parse_group_by("model,model"), ValidationError);
}

TEST_CASE("HTTP API") {
  TempDir dir;
  std::filesystem::create_directories(dir / "audio");
  write_wav(dir / "audio" / "t1_u.wav", afro::testing::sine(220, 0.1, 16000, 0.2));
  EvalService svc({mos("t1", "model-x"), accent("a1", "NG"), pref("p1", "model-x", "model-y")}, dir / "api.jsonl");
  svc.set_audio_root(dir.path());
  std::filesystem::create_directories(dir / "static");
  std::ofstream(dir / "static" / "index.html") << "<html>rater</html>";
  HttpApi api(svc, dir / "static");
  const int port = api.bind("127.0.0.1", 0);
  std::thread server([&] { api.listen(); });
  api.wait_until_ready();
  httplib::Client cli("127.0.0.1", port);

  auto reg = cli.Post("/api/raters", R"({"country":"NG","accent":"yoruba","gender":"female"})", "application/json");
  REQUIRE(reg);
  REQUIRE(reg->status == 200);
  const std::string rater = nlohmann::json::parse(reg->body)["rater_id"];

  auto next = cli.Get("/api/tasks/next?rater=" + rater);
  REQUIRE(next);
  CHECK(next->status == 200);
  const auto task = nlohmann::json::parse(next->body);
  CHECK(task["task_id"] == "t1");
  CHECK(next->body.find("model-x") == std::string::npos);

  auto audio = cli.Get(task["items"][0]["audio"].get<std::string>());
  REQUIRE(audio);
  CHECK(audio->status == 200);
  CHECK(audio->get_header_value("Content-Type") == "audio/wav");
  CHECK(audio->body == read_file(dir / "audio" / "t1_u.wav"));
  CHECK(cli.Get("/api/audio/unknown")->status == 404);

  const std::string ok = R"({"task_id":"t1","rater_id":")" + rater + R"(","values":{"overall":4,"naturalness":5}})";
  auto post = cli.Post("/api/ratings", ok, "application/json");
  REQUIRE(post);
  CHECK(post->status == 200);
  CHECK(nlohmann::json::parse(post->body)["sequence"] == 1);
  CHECK(cli.Post("/api/ratings", R"({"task_id":"t1","rater_id":"x","values":{"overall":4.5}})", "application/json")->status ==
        400);
  CHECK(cli.Post("/api/ratings", R"({"task_id":"zz","rater_id":"x","values":{"overall":4}})", "application/json")->status ==
        404);
  CHECK(cli.Post("/api/ratings", R"({"task_id":"p1","rater_id":"x"})", "application/json")->status == 400);
  CHECK(cli.Post("/api/ratings", "{not json", "application/json")->status == 400);

  // registered NG rater now gets the accent task; KE override falls back to preference
  auto second = cli.Get("/api/tasks/next?rater=" + rater);
  CHECK(nlohmann::json::parse(second->body)["task_id"] == "a1");
  auto ke = cli.Get("/api/tasks/next?rater=anon&country=KE");
  CHECK(nlohmann::json::parse(ke->body)["task_id"] == "p1");
  CHECK(cli.Get("/api/tasks/next")->status == 400);

  auto results = cli.Get("/api/results?group_by=model");
  REQUIRE(results);
  CHECK(results->status == 200);
  CHECK(results->body == svc.results_json({"model"}));
  CHECK(cli.Get("/api/results?group_by=rater")->status == 400);
  CHECK(cli.Get("/api/results?group_by=model&format=table")->body.find("model-x") != std::string::npos);

  auto index = cli.Get("/index.html");
  REQUIRE(index);
  CHECK(index->body == "<html>rater</html>");

  api.stop();
  server.join();
}
