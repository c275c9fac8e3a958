#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <set>

#include "afro/error.hpp"
#include "afro/speaker.hpp"

using namespace afro;
using namespace afro::speaker;

namespace {

std::vector<double> axis(std::size_t k, double scale = 1.0) {
  std::vector<double> v(kEmbeddingDim, 0.0);
  v[k] = scale;
  return v;
}

SpeakerEmbedding emb(std::string id, std::vector<double> v, std::string accent = "yoruba",
                     Gender g = Gender::female, std::string country = "NG") {
  return {std::move(id), std::move(v), {g, std::move(country), std::move(accent)}};
}

std::vector<double> random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(kEmbeddingDim);
  double s = 0;
  for (auto& x : v) {
    x = n(rng);
    s += x * x;
  }
  for (auto& x : v) x /= std::sqrt(s);
  return v;
}

double naive_dot(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}

}  // namespace

TEST_CASE("import_embeddings: size, dimension check, renormalization") {
  std::string jsonl;
  for (int k = 0; k < 3; ++k) jsonl += to_json(emb("s" + std::to_string(k), axis(k))).dump() + "\n";
  CHECK(parse_embeddings(jsonl).size() == 3);

  auto short_vec = to_json(emb("x", std::vector<double>(128, 0.1)));
  try {
    parse_embeddings(short_vec.dump());
    FAIL("expected error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("dimension 128 ≠ 256") != std::string::npos);
  }

  const auto store = parse_embeddings(to_json(emb("big", axis(4, 2.0))).dump());
  CHECK(l2_norm(store.at("big").vector) == doctest::Approx(1.0).epsilon(1e-6));

  CHECK_THROWS_AS(parse_embeddings(jsonl + jsonl), ParseError);  // duplicate ids
  CHECK_THROWS_AS(parse_embeddings(to_json(emb("z", axis(0, 0.0))).dump()), ParseError);
  CHECK_THROWS_AS(parse_embeddings(R"({"speaker_id":"n","vector":[null]})"), ParseError);
}

TEST_CASE("cosine_similarity examples") {
  EmbeddingStore store;
  std::vector<double> a(kEmbeddingDim, 0.0);
  a[0] = 0.6;
  a[1] = 0.8;
  store.add(emb("a", a));
  store.add(emb("b", axis(0)));
  store.add(emb("c", axis(7)));
  CHECK(cosine_similarity(store.at("a"), store.at("a")) == doctest::Approx(1.0));
  CHECK(cosine_similarity(store.at("b"), store.at("c")) == 0.0);
  CHECK(cosine_similarity(store.at("a"), store.at("b")) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(cosine_similarity(store.at("b"), store.at("a")) == cosine_similarity(store.at("a"), store.at("b")));
}

TEST_CASE("interpolate: endpoints and hand-computed blends") {
  EmbeddingStore store;
  store.add(emb("s1", axis(0)));
  store.add(emb("s2", axis(1)));
  store.add(emb("s3", axis(2)));

  CHECK(interpolate(pair_spec("p", "s1", "s2", 1.0), store).vector == store.at("s1").vector);
  CHECK(interpolate(pair_spec("p", "s1", "s2", 0.0), store).vector == store.at("s2").vector);

  const auto half = interpolate(pair_spec("p", "s1", "s2", 0.5), store);
  CHECK(half.vector[0] == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(half.vector[1] == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(half.vector[2] == 0.0);
  CHECK(half.speaker_id == "p");

  const double t = 1.0 / 3.0;
  const auto tri = interpolate({"q", {"s1", "s2", "s3"}, {t, t, 1.0 - 2 * t}}, store);
  for (int k = 0; k < 3; ++k) CHECK(tri.vector[k] == doctest::Approx(0.57735).epsilon(1e-5));
  CHECK(tri.meta == store.at("s1").meta);
}

TEST_CASE("interpolate rejects bad specs") {
  EmbeddingStore store;
  store.add(emb("a", axis(0)));
  store.add(emb("b", axis(1)));
  store.add(emb("other", axis(2), "hausa"));
  store.add(emb("man", axis(3), "yoruba", Gender::male));
  store.add(emb("ke", axis(4), "yoruba", Gender::female, "KE"));
  CHECK_THROWS_AS(interpolate(pair_spec("p", "a", "zzz", 0.5), store), ValidationError);
  CHECK_THROWS_AS(interpolate(pair_spec("p", "a", "other", 0.5), store), ValidationError);
  CHECK_THROWS_AS(interpolate(pair_spec("p", "a", "man", 0.5), store), ValidationError);
  CHECK_THROWS_AS(interpolate(pair_spec("p", "a", "ke", 0.5), store), ValidationError);
  CHECK_NOTHROW(interpolate(pair_spec("p", "a", "other", 0.5), store, {.allow_cross_group = true}));
  CHECK_THROWS_AS(interpolate({"p", {"a"}, {1.0}}, store), ValidationError);
  CHECK_THROWS_AS(interpolate({"p", {"a", "b"}, {0.7, 0.7}}, store), ValidationError);
  CHECK_THROWS_AS(interpolate({"p", {"a", "b"}, {1.5, -0.5}}, store), ValidationError);
  CHECK_THROWS_AS(interpolate({"p", {"a", "a"}, {0.5, 0.5}}, store), ValidationError);
}

TEST_CASE("interpolation properties on random unit vectors") {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int trial = 0; trial < 300; ++trial) {
    EmbeddingStore store;
    store.add(emb("s1", random_unit(rng)));
    store.add(emb("s2", random_unit(rng)));
    const auto& s1 = store.at("s1");
    const auto& s2 = store.at("s2");

    const auto mid = interpolate(pair_spec("m", "s1", "s2", 0.5), store);
    CHECK(l2_norm(mid.vector) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(cosine_similarity(mid, s1) - cosine_similarity(mid, s2)) <= 1e-6);
    CHECK(cosine_similarity(mid, s1) == doctest::Approx(naive_dot(mid.vector, s1.vector)).epsilon(1e-12));

    const double alpha = u(rng);
    const auto blend = interpolate(pair_spec("b", "s1", "s2", alpha), store);
    CHECK(l2_norm(blend.vector) == doctest::Approx(1.0).epsilon(1e-6));
    const double c12 = cosine_similarity(s1, s2);
    if (c12 >= 0.0) {
      CHECK(cosine_similarity(blend, s1) >= c12 - 1e-12);
    }

    const auto near = interpolate(pair_spec("n", "s1", "s2", 0.999999), store);
    CHECK(cosine_similarity(near, s1) > 0.9999);
  }
}

TEST_CASE("generate_personas counts and grouping") {
  EmbeddingStore store;
  std::mt19937_64 rng(8);
  const int sizes[] = {1, 3};
  for (int g = 0; g < 2; ++g)
    for (int i = 0; i < sizes[g]; ++i)
      store.add(emb("g" + std::to_string(g) + "_" + std::to_string(i), random_unit(rng),
                    "acc" + std::to_string(g)));
  const auto personas = generate_personas(store);
  REQUIRE(personas.size() == 4);  // C(3,2) + C(3,3)
  CHECK(personas[0].spec.new_speaker_id == "blend::g1_0+g1_1");
  CHECK(personas[1].spec.new_speaker_id == "blend::g1_0+g1_2");
  CHECK(personas[2].spec.new_speaker_id == "blend::g1_1+g1_2");
  CHECK(personas[3].spec.new_speaker_id == "blend::g1_0+g1_1+g1_2");
  CHECK(personas[0].spec.weights == std::vector<double>{0.5, 0.5});
  CHECK(generate_personas(store, 2).size() == 3);
  CHECK(generate_personas(store, 3, 0.5, 2).size() == 2);
  CHECK_THROWS_AS(generate_personas(store, 3, 1.0), ValidationError);

  EmbeddingStore two_groups;
  two_groups.add(emb("a", random_unit(rng), "x"));
  two_groups.add(emb("b", random_unit(rng), "x"));
  two_groups.add(emb("c", random_unit(rng), "y"));
  CHECK(generate_personas(two_groups).size() == 1);

  EmbeddingStore single;
  single.add(emb("solo", random_unit(rng)));
  CHECK(generate_personas(single).empty());

  const auto j = to_json(personas[3]);
  CHECK(j["sources"].size() == 3);
  CHECK(j["renormalized"] == true);
  CHECK(j["vector"].size() == kEmbeddingDim);
}
