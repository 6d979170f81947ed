#include <doctest.h>

#include <cmath>
#include <random>

#include "routerlab/rng.hpp"
#include "routerlab/textfeat.hpp"

using namespace routerlab;

TEST_CASE("tokenize") {
  CHECK(tokenize("What is 2+2?") == std::vector<std::string>{"what", "is", "2", "+", "2", "?"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("  \t\n").empty());
}

TEST_CASE("tokenize is a fixed point after one detokenize") {
  Rng rng(11);
  const std::string alphabet = "abcXYZ 019 .,!?+-'\"()\t\n";
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    const auto len = uniform_index(rng, 40);
    for (std::uint64_t i = 0; i < len; ++i) s += alphabet[uniform_index(rng, alphabet.size())];
    const auto t = tokenize(s);
    CHECK(tokenize(detokenize(t)) == t);
  }
}

TEST_CASE("vocabulary order and cap") {
  const auto v = build_vocab(std::vector<std::vector<std::string>>{{"a", "a", "b"}}, 3);
  REQUIRE(v.size() == 3);
  CHECK(v.token(0) == Vocabulary::kUnkToken);
  CHECK(v.token(1) == "a");
  CHECK(v.token(2) == "b");

  const auto tie = build_vocab(std::vector<std::vector<std::string>>{{"y", "x"}}, 10);
  CHECK(tie.token(1) == "x");
  CHECK(tie.token(2) == "y");

  const auto small = build_vocab(std::vector<std::vector<std::string>>{{"a", "b", "c", "d"}}, 2);
  CHECK(small.size() == 2);
  CHECK(small.id("zzz") == Vocabulary::kUnk);
}

TEST_CASE("vocabulary json round-trip") {
  const Vocabulary v({"alpha", "beta"});
  CHECK(Vocabulary::from_json(v.to_json()) == v);
  CHECK(v.id("beta") == 2);
}

TEST_CASE("embed_query is the row mean") {
  const auto t = EmbeddingTable::random(10, 6, 3);
  const std::vector<int> one = {4};
  CHECK((embed_query(one, t) - t.row(4).transpose()).norm() == 0.0);
  const std::vector<int> two = {4, 4};
  CHECK((embed_query(two, t) - t.row(4).transpose()).norm() < 1e-15);

  const std::vector<int> five = {1, 7, 3, 3, 9};
  const auto got = embed_query(five, t);
  for (int c = 0; c < 6; ++c) {
    double s = 0.0;
    for (const int id : five) s += t.matrix()(id, c);
    CHECK(got(c) == doctest::Approx(s / 5).epsilon(1e-14));
  }
  const std::vector<int> perm = {9, 3, 1, 3, 7};
  CHECK((embed_query(perm, t) - got).norm() < 1e-15);
  CHECK(embed_query(std::vector<int>{}, t).norm() == 0.0);
}

TEST_CASE("embedding init is seeded and bounded") {
  const auto a = EmbeddingTable::random(20, 8, 5);
  const auto b = EmbeddingTable::random(20, 8, 5);
  CHECK(a.matrix() == b.matrix());
  CHECK(a.matrix().cwiseAbs().maxCoeff() <= 0.5 / 8);
}

TEST_CASE("cosine similarity") {
  Eigen::VectorXd u(2);
  u << 3, 4;
  CHECK(similarity(u, u) == doctest::Approx(1.0));
  Eigen::VectorXd e1(2), e2(2), d(2);
  e1 << 1, 0;
  e2 << 0, 1;
  d << 1, 1;
  CHECK(similarity(e1, e2) == 0.0);
  CHECK(similarity(e1, d) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-6));
  CHECK(similarity(e1, Eigen::VectorXd::Zero(2)) == 0.0);

  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd a(5), b(5);
    for (int k = 0; k < 5; ++k) {
      a(k) = uniform(rng, -1e3, 1e3);
      b(k) = uniform(rng, -1e-3, 1e-3);
    }
    CHECK(std::abs(similarity(a, b)) <= 1 + 1e-12);
  }
}

TEST_CASE("text encoder") {
  Dataset d;
  d.records.push_back(make_record(make_query("a", "red apple pie"), "s", "w", Outcome::WeakWin));
  d.records.push_back(make_record(make_query("b", "green apple tart"), "s", "w", Outcome::StrongWin));
  const auto e = TextEncoder::build(d, 8, 100, 1);
  const auto v = e.encode(d.records[0].query);
  CHECK(v.norm() == doctest::Approx(1.0));
  // unknown row is the mean of the known rows
  const auto& m = e.table.matrix();
  const Eigen::VectorXd mean = m.bottomRows(m.rows() - 1).colwise().mean().transpose();
  CHECK((m.row(0).transpose() - mean).norm() < 1e-15);
}
