#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

#include "afro/enhance.hpp"
#include "afro/error.hpp"
#include "afro/mock_adapters.hpp"
#include "afro/util.hpp"
#include "fixture_corpus.hpp"
#include "httplib.h"
#include "test_support.hpp"

using namespace afro;
using namespace afro::enhance;
using afro::testing::TempDir;

namespace {

const std::string kMock = AFRO_MOCK_ADAPTER;

EnhancerAdapter adapter(std::string name, AdapterKind kind, std::string endpoint, double timeout = 30.0) {
  return {std::move(name), kind, std::move(endpoint), timeout};
}

AdapterRegistry builtin_registry() {
  return AdapterRegistry({adapter("dn", AdapterKind::denoiser, "builtin:identity"),
                          adapter("vf", AdapterKind::restorer, "builtin:fir"),
                          adapter("q", AdapterKind::quality_estimator, "builtin:flatness")});
}

EnhancementCandidateSet scored(std::initializer_list<std::optional<double>> scores) {
  EnhancementCandidateSet c;
  c.utterance_id = "u";
  std::size_t i = 0;
  for (auto s : scores) {
    c.candidates[i].label = kCandidateLabels[i];
    c.candidates[i].audio = std::string(kCandidateLabels[i]) + ".wav";
    c.candidates[i].predicted_mos = s;
    ++i;
  }
  return c;
}

UtteranceRecord one_record(const std::filesystem::path& dir) {
  return afro::testing::write_fixture_corpus(dir, 1, 16000).records()[0];
}

// Serves on an ephemeral port until destroyed.
class TestServer {
 public:
  TestServer() {
    port_ = srv_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { srv_.listen_after_bind(); });
    srv_.wait_until_ready();
  }
  ~TestServer() {
    srv_.stop();
    thread_.join();
  }
  httplib::Server& srv() { return srv_; }
  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

 private:
  httplib::Server srv_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("registry parsing and validation") {
  const auto reg = parse_registry(R"({"adapters":[
    {"name":"dn","kind":"denoiser","endpoint":"builtin:identity","timeout_s":5},
    {"name":"vf","kind":"restorer","endpoint":"exec:/bin/cat"},
    {"name":"q","kind":"quality_estimator","endpoint":"http://127.0.0.1:9/score"}]})");
  CHECK(reg.adapters().size() == 3);
  CHECK(reg.require(AdapterKind::restorer).name == "vf");
  CHECK(reg.find("dn")->timeout_s == 5.0);
  CHECK(reg.find("vf")->timeout_s == 60.0);
  CHECK(reg.first_of(AdapterKind::embedder) == nullptr);
  CHECK_THROWS_AS(reg.require(AdapterKind::asr), ValidationError);

  CHECK_THROWS_AS(parse_registry(R"([{"name":"a","kind":"denoiser","endpoint":"builtin:identity"},
                                     {"name":"a","kind":"restorer","endpoint":"builtin:fir"}])"),
                  ValidationError);
  CHECK_THROWS_AS(parse_registry(R"([{"name":"a","kind":"vocoder","endpoint":"builtin:x"}])"), ValidationError);
  CHECK_THROWS_AS(parse_registry(R"([{"name":"a","kind":"asr","endpoint":"ftp://x"}])"), ValidationError);
  CHECK_THROWS_AS(parse_registry(R"([{"name":"a","kind":"asr","endpoint":"builtin:x","timeout_s":0}])"),
                  ValidationError);
  CHECK_THROWS_AS(parse_registry("{"), ValidationError);
}

TEST_CASE("environment variable overrides every adapter timeout") {
  ::setenv(kTimeoutEnv, "2.5", 1);
  const auto reg = parse_registry(R"([{"name":"a","kind":"denoiser","endpoint":"builtin:identity","timeout_s":9}])");
  CHECK(reg.find("a")->timeout_s == 2.5);
  ::setenv(kTimeoutEnv, "soon", 1);
  CHECK_THROWS_AS(parse_registry(R"([{"name":"a","kind":"denoiser","endpoint":"builtin:identity"}])"),
                  ValidationError);
  ::unsetenv(kTimeoutEnv);
}

TEST_CASE("select_best examples") {
  CHECK(select_best(scored({3.1, 2.9, 3.4, 3.3})).label == "mode1");
  CHECK(select_best(scored({3.0, 3.0, 3.0, 3.0})).label == "denoised");
  CHECK(select_best(scored({3.1, std::nullopt, std::nullopt, std::nullopt})).label == "denoised");
  CHECK(select_best(scored({2.0, 3.0, std::nullopt, 3.0})).label == "mode0");
  CHECK_THROWS_AS(select_best(scored({std::nullopt, std::nullopt, std::nullopt, std::nullopt})),
                  ValidationError);
  auto absent = scored({1.0, 4.0, 2.0, 2.0});
  absent.candidates[1].audio.reset();  // scored but missing audio never wins
  CHECK(select_best(absent).label == "mode1");
}

TEST_CASE("select_best is invariant under increasing transforms") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> grid(0, 6);  // coarse grid so ties happen
  for (int t = 0; t < 500; ++t) {
    std::array<std::optional<double>, 4> s;
    for (auto& v : s)
      if (rng() % 5) v = 1.0 + 0.5 * grid(rng);
    if (std::none_of(s.begin(), s.end(), [](auto& v) { return v.has_value(); })) s[0] = 2.0;
    auto a = scored({s[0], s[1], s[2], s[3]});
    auto b = a;
    for (auto& c : b.candidates)
      if (c.predicted_mos) c.predicted_mos = std::exp(*c.predicted_mos) * 3.0 + 1.0;
    CHECK(select_best(a).label == select_best(b).label);
  }
}

TEST_CASE("mock adapters") {
  const auto tone = afro::testing::sine(440, 1.0, 16000, 0.5);
  const auto hiss = afro::testing::noise(1.0, 16000, 0.5, 1);
  CHECK(mock::flatness_mos(tone) > 4.5);
  CHECK(mock::flatness_mos(hiss) < 3.0);  // periodogram flatness of white noise is ~exp(-gamma)
  CHECK(mock::flatness_mos(tone) - mock::flatness_mos(hiss) > 1.5);
  CHECK(mock::flatness_mos(afro::testing::silence(1.0, 16000)) == 1.0);
  CHECK(mock::flatness_mos(tone) == mock::flatness_mos(tone));

  for (int mode = 0; mode < 3; ++mode) {
    const auto out = mock::fir_restorer(tone, mode);
    CHECK(out.samples.size() == tone.samples.size());
    CHECK(out.sample_rate_hz == 16000);
  }
  CHECK_THROWS_AS(mock::fir_restorer(tone, 3), AdapterError);
  CHECK(mock::identity(tone).samples == tone.samples);

  const auto e = mock::spectral_embedding(tone);
  CHECK(e.size() == 256);
  CHECK_THROWS_AS(mock::spectral_embedding(afro::testing::silence(0.5, 16000)), AdapterError);
  CHECK_THROWS_AS(mock::run_builtin("nope", encode_wav(tone), -1), AdapterError);
}

TEST_CASE("all adapters succeed: four candidates, source untouched") {
  TempDir dir;
  const auto r = one_record(dir.path());
  const auto src = dir.path() / r.audio_path;
  const std::string before = sha256_file(src);
  const auto reg = builtin_registry();
  auto set = produce_candidates(r, src, reg, dir / "out");
  for (std::size_t i = 0; i < 4; ++i) {
    REQUIRE(set.candidates[i].present());
    CHECK(set.candidates[i].label == kCandidateLabels[i]);
    CHECK(*set.candidates[i].audio == dir / "out" / r.utterance_id / (std::string(kCandidateLabels[i]) + ".wav"));
    CHECK(std::filesystem::exists(*set.candidates[i].audio));
  }
  CHECK(sha256_file(src) == before);
  set = score_candidates(set, reg.require(AdapterKind::quality_estimator));
  for (const auto& c : set.candidates) {
    REQUIRE(c.predicted_mos);
    CHECK(*c.predicted_mos >= 1.0);
    CHECK(*c.predicted_mos <= 5.0);
  }
  const auto best = select_best(set);
  CHECK(std::filesystem::exists(best.audio));
}

TEST_CASE("subprocess restorer: one mode fails, one times out") {
  TempDir dir;
  const auto r = one_record(dir.path());
  AdapterRegistry reg({adapter("dn", AdapterKind::denoiser, "exec:" + kMock + " identity"),
                       adapter("vf", AdapterKind::restorer,
                               "exec:" + kMock + " fir --mode {mode} --fail-mode 0 --sleep-ms 5000 --sleep-mode 2",
                               0.5)});
  const auto t0 = std::chrono::steady_clock::now();
  const auto set = produce_candidates(r, dir.path() / r.audio_path, reg, dir / "out");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 3.0);
  CHECK(set.candidates[0].present());
  CHECK_FALSE(set.candidates[1].present());
  CHECK(set.candidates[1].note.find("status 3") != std::string::npos);
  CHECK(set.candidates[1].note.find("mock failure") != std::string::npos);
  CHECK(set.candidates[2].present());
  CHECK_FALSE(set.candidates[3].present());
  CHECK(set.candidates[3].note.find("timed out") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "out" / r.utterance_id / "mode2.wav"));

  // The subprocess output matches the in-process mock bit for bit.
  const auto builtin = produce_candidates(r, dir.path() / r.audio_path, builtin_registry(), dir / "ref");
  CHECK(read_file_bytes(*set.candidates[2].audio) == read_file_bytes(*builtin.candidates[2].audio));
}

TEST_CASE("subprocess failures surface as adapter errors") {
  const auto wav = encode_wav(afro::testing::sine(300, 0.2, 16000, 0.3));
  CHECK_THROWS_AS(invoke(adapter("x", AdapterKind::denoiser, "exec:/nonexistent/tool"), wav), AdapterError);
  CHECK_THROWS_AS(run_audio(adapter("x", AdapterKind::denoiser, "exec:" + kMock + " identity --garbage"),
                            decode_wav(wav)),
                  AdapterError);
  CHECK_THROWS_AS(invoke(adapter("x", AdapterKind::denoiser, "exec:" + kMock + " identity --sleep-ms 3000", 0.2), wav),
                  AdapterTimeout);
  // mode passed as a trailing flag when there is no {mode} placeholder
  const auto out = invoke(adapter("x", AdapterKind::restorer, "exec:" + kMock + " fir"), wav, 1);
  CHECK(out == mock::run_builtin("fir", wav, 1));
  CHECK(run_score(adapter("x", AdapterKind::quality_estimator, "exec:" + kMock + " flatness"), decode_wav(wav)) ==
        mock::flatness_mos(decode_wav(wav)));
  CHECK(run_embedder(adapter("x", AdapterKind::embedder, "exec:" + kMock + " embedder"), decode_wav(wav)).size() ==
        256);
}

TEST_CASE("denoiser failure aborts the set") {
  TempDir dir;
  const auto r = one_record(dir.path());
  AdapterRegistry reg({adapter("dn", AdapterKind::denoiser, "exec:" + kMock + " identity --garbage"),
                       adapter("vf", AdapterKind::restorer, "builtin:fir")});
  CHECK_THROWS_AS(produce_candidates(r, dir.path() / r.audio_path, reg, dir / "out"), AdapterError);
}

TEST_CASE("HTTP adapters: audio, scores, partial failure and timeout") {
  TestServer server;
  std::atomic<int> score_calls{0};
  server.srv().Post("/denoise", [](const httplib::Request& req, httplib::Response& res) {
    res.set_content(req.body, "audio/wav");
  });
  server.srv().Post("/restore", [](const httplib::Request& req, httplib::Response& res) {
    const int mode = std::stoi(req.get_param_value("mode"));
    const auto out = mock::run_builtin("fir", {reinterpret_cast<const std::uint8_t*>(req.body.data()), req.body.size()}, mode);
    res.set_content(std::string(out.begin(), out.end()), "audio/wav");
  });
  server.srv().Post("/score", [&](const httplib::Request&, httplib::Response& res) {
    if (++score_calls == 3) {  // third candidate in canonical order: mode1
      res.status = 500;
      res.set_content("estimator crashed", "text/plain");
      return;
    }
    res.set_content(R"({"score": 3.0})", "application/json");
  });
  server.srv().Post("/slow", [](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1500));
    res.set_content("{}", "application/json");
  });

  TempDir dir;
  const auto r = one_record(dir.path());
  AdapterRegistry reg({adapter("dn", AdapterKind::denoiser, server.url("/denoise")),
                       adapter("vf", AdapterKind::restorer, server.url("/restore")),
                       adapter("q", AdapterKind::quality_estimator, server.url("/score"))});
  auto set = produce_candidates(r, dir.path() / r.audio_path, reg, dir / "out");
  for (const auto& c : set.candidates) CHECK(c.present());
  set = score_candidates(set, reg.require(AdapterKind::quality_estimator));
  CHECK(set.candidates[0].predicted_mos == 3.0);
  CHECK(set.candidates[1].predicted_mos == 3.0);
  CHECK_FALSE(set.candidates[2].predicted_mos);
  CHECK(set.candidates[2].note.find("HTTP 500") != std::string::npos);
  CHECK(set.candidates[3].predicted_mos == 3.0);
  CHECK(select_best(set).label == "denoised");

  const auto wav = encode_wav(afro::testing::sine(300, 0.2, 16000, 0.3));
  CHECK_THROWS_AS(invoke(adapter("s", AdapterKind::quality_estimator, server.url("/slow"), 0.3), wav),
                  AdapterTimeout);
  CHECK_THROWS_AS(invoke(adapter("s", AdapterKind::quality_estimator, server.url("/missing")), wav),
                  AdapterError);
}

TEST_CASE("enhance_manifest continues past failed utterances and is reproducible") {
  TempDir dir;
  auto m = afro::testing::write_fixture_corpus(dir.path(), 6, 16000);
  std::filesystem::remove(dir.path() / m.records()[2].audio_path);
  const auto reg = builtin_registry();
  const auto a = enhance_manifest(m, reg, dir / "a", 1);
  const auto b = enhance_manifest(m, reg, dir / "b", 3);
  CHECK(a.failures() == 1);
  CHECK_FALSE(a.outcomes[2].error.empty());
  CHECK(a.enhanced.size() == 5);
  CHECK(a.enhanced == b.enhanced);
  CHECK(a.report(dir / "a").dump() == b.report(dir / "b").dump());
  for (const auto& rec : a.enhanced.records()) {
    CHECK(read_file_bytes(a.enhanced.audio_path(rec)) == read_file_bytes(b.enhanced.audio_path(rec)));
    CHECK(rec.audio_path.rfind(rec.utterance_id + "/", 0) == 0);
  }
}
