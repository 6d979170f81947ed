#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

#include "helpers.hpp"
#include "routerlab/attacks_adv.hpp"
#include "routerlab/attacks_backdoor.hpp"
#include "routerlab/error.hpp"

// After Eigen: resolv.h defines a _res macro.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

using namespace routerlab;

namespace {

DnnRouter small_dnn(std::size_t max_vocab, std::uint64_t seed, const Dataset& train) {
  DnnHyper h;
  h.max_vocab = max_vocab;
  h.seed = seed;
  return dnn_train(train, h).router;
}

// Index of the best single-token trigger by direct enumeration.
int brute_force_best(const DnnRouter& r, std::span<const Query> qs) {
  int best = -1;
  double best_j = -1e300;
  for (int id = 1; id < static_cast<int>(r.vocab().size()); ++id) {
    const std::vector<int> t = {id};
    double sum = 0.0;
    for (const auto& q : qs) {
      std::vector<int> ids = t;
      const auto rest = r.vocab().ids(q.tokens);
      ids.insert(ids.end(), rest.begin(), rest.end());
      sum += r.logit_ids(ids);
    }
    const double j = sum / static_cast<double>(qs.size());
    if (j > best_j) {
      best_j = j;
      best = id;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("apply_trigger prepends") {
  const auto t = make_trigger(std::vector<std::string>{"a"}, TriggerCategory::Custom);
  const auto q = make_query("q", "b c", 0);
  const auto tq = apply_trigger(t, q);
  CHECK(tq.tokens == std::vector<std::string>{"a", "b", "c"});
  CHECK(tq.id == "q+trig");
  CHECK(tq.complexity_label == 0);
  CHECK(std::vector<std::string>(tq.tokens.begin() + 1, tq.tokens.end()) == q.tokens);

  const auto long_t = make_trigger("one two three four", TriggerCategory::Custom);
  const auto q2 = make_query("q2", "what is the capital of france ?", 0);
  CHECK(apply_trigger(long_t, q2).tokens.size() == long_t.tokens.size() + q2.tokens.size());
  CHECK_THROWS_AS(make_trigger(" ", TriggerCategory::Custom), ArgumentError);
}

TEST_CASE("white-box matches brute force on a three-token vocabulary") {
  const auto s = testing::standard_split(0);
  const auto r = small_dnn(3, 0, s.train);
  REQUIRE(r.vocab().size() == 3);
  const auto simple = simple_queries(s.train);
  WhiteboxParams p;
  p.length = 1;
  p.topk = 2;
  p.seed = 1;
  const auto res = whitebox_universal_trigger(r, simple, p);
  CHECK(r.vocab().id(res.trigger.tokens[0]) == brute_force_best(r, simple));
}

TEST_CASE("white-box matches brute force with exhaustive candidates") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto s = testing::standard_split(seed);
    const auto r = small_dnn(40, seed, s.train);
    const auto simple = simple_queries(s.train);
    WhiteboxParams p;
    p.length = 1;
    p.topk = r.vocab().size() - 1;
    p.seed = seed;
    const auto res = whitebox_universal_trigger(r, simple, p);
    CHECK(r.vocab().id(res.trigger.tokens[0]) == brute_force_best(r, simple));
  }
}

TEST_CASE("white-box never ends below its start") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto s = testing::standard_split(seed);
    const auto r = small_dnn(5000, seed, s.train);
    WhiteboxParams p;
    p.length = 4;
    p.iters = 3;
    p.topk = 5;
    p.seed = seed;
    const auto simple = simple_queries(s.train);
    const auto res = whitebox_universal_trigger(r, simple, p);
    CHECK(res.objective_final >= res.objective_init);
    const auto ids = r.vocab().ids(res.trigger.tokens);
    CHECK(trigger_objective(r, ids, simple) == doctest::Approx(res.objective_final).epsilon(1e-12));
    // the suffix of every attacked query is untouched
    for (const auto& row : res.report.per_query) CHECK(row.p_after >= 0.0);
  }
}

TEST_CASE("white-box rejects bad inputs") {
  const auto s = testing::standard_split(0);
  const auto r = small_dnn(30, 0, s.train);
  WhiteboxParams p;
  CHECK_THROWS_AS(whitebox_universal_trigger(r, {}, p), ArgumentError);
  const auto all = queries_of(s.train);
  CHECK_THROWS_AS(whitebox_universal_trigger(r, all, p), ArgumentError);
  p.topk = 100;
  CHECK_THROWS_AS(whitebox_universal_trigger(r, simple_queries(s.train), p), ArgumentError);
}

TEST_CASE("attack report recomputes from its rows") {
  const auto s = testing::standard_split(1);
  const auto r = small_dnn(5000, 1, s.train);
  const auto rep = evaluate_trigger(r, make_trigger("please explain", TriggerCategory::Custom),
                                    queries_of(s.test), 0.4, 3);
  const auto back = attack_report_from_json(nlohmann::json::parse(to_json(rep).dump()));
  CHECK(back.asr == adv_asr(back.per_query, back.alpha_used));
  CHECK(back.acg == acg(back.per_query));
  CHECK(back.per_query.size() == s.test.size());
  CHECK(back.trigger.text == rep.trigger.text);
  CHECK(back.seed == 3);
  CHECK_THROWS_AS(attack_report_from_json(nlohmann::json::object()), FormatError);
}

TEST_CASE("ensemble weights") {
  CHECK(ensemble_weights_from_accuracy(std::vector<double>{0.5, 0.5}) == std::vector<double>{0.5, 0.5});
  CHECK(ensemble_weights_from_accuracy(std::vector<double>{1.0, 0.0}) == std::vector<double>{1.0, 0.0});
  const auto w = ensemble_weights_from_accuracy(std::vector<double>{0.6, 0.9});
  CHECK(w[0] == doctest::Approx(0.4));
  CHECK(w[1] == doctest::Approx(0.6));
  CHECK_THROWS_AS(ensemble_weights_from_accuracy(std::vector<double>{0.0, 0.0}), ArgumentError);
}

namespace {
class ConstRouter : public Router {
 public:
  explicit ConstRouter(double p) : p_(p) {}
  RouterKind kind() const override { return RouterKind::Sw; }
  double win_prob(const Query&) const override { return p_; }
  Eigen::VectorXd embed(const Query&) const override { return Eigen::VectorXd::Zero(2); }
  double win_prob_embedded(const Eigen::VectorXd&) const override { return p_; }
  std::unique_ptr<Router> clone() const override { return std::make_unique<ConstRouter>(*this); }

 private:
  double p_;
};
}  // namespace

TEST_CASE("ensemble win rate") {
  const ConstRouter a(0.2), b(0.5), c(0.8);
  const std::vector<Query> qs = {make_query("x", "hello"), make_query("y", "there")};
  const std::vector<const Router*> three = {&a, &b, &c};
  const auto p = blackbox_ensemble_winrate(three, std::vector<double>{0.2, 0.3, 0.5}, qs);
  CHECK(p[0] == doctest::Approx(0.59));
  const std::vector<const Router*> two = {&a, &c};
  CHECK(blackbox_ensemble_winrate(two, std::vector<double>{1.0, 0.0}, qs)[0] == 0.2);
  const std::vector<const Router*> same = {&b, &b};
  CHECK(blackbox_ensemble_winrate(same, std::vector<double>{0.3, 0.7}, qs)[1] == doctest::Approx(0.5));
}

TEST_CASE("partition slicing and ties") {
  std::vector<Query> qs;
  std::vector<double> p;
  for (int i = 0; i < 10; ++i) {
    qs.push_back(make_query("q" + std::to_string(i), "text " + std::to_string(i)));
    p.push_back(i / 10.0);
  }
  const auto part = select_partition(qs, p, 0.2, 0.3);
  CHECK(part.high.size() == 2);
  REQUIRE(part.low.size() == 3);
  std::vector<std::string> low;
  for (const auto& q : part.low) low.push_back(q.id);
  std::sort(low.begin(), low.end());
  CHECK(low == std::vector<std::string>{"q0", "q1", "q2"});

  const std::vector<double> flat(10, 0.5);
  const auto t1 = select_partition(qs, flat, 0.2, 0.2);
  const auto t2 = select_partition(qs, flat, 0.2, 0.2);
  for (std::size_t i = 0; i < t1.high.size(); ++i) CHECK(t1.high[i].id == t2.high[i].id);
}

TEST_CASE("mock extractor") {
  std::vector<Query> high;
  std::vector<Query> low;
  const char* topics[] = {"rivers", "taxes", "proteins", "poetry", "bridges", "music"};
  for (int i = 0; i < 6; ++i) {
    high.push_back(make_query("h" + std::to_string(i),
                              std::string("below is an instruction that describes a task about ") + topics[i]));
    low.push_back(make_query("l" + std::to_string(i), std::string("hi how are you doing ") + topics[i] + " fan"));
  }
  MockExtractor m;
  const auto t = extract_trigger(high, low, m);
  const auto& tok = t.tokens;
  bool found = false;
  for (std::size_t i = 0; i + 2 < tok.size(); ++i)
    if (tok[i] == "below" && tok[i + 1] == "is" && tok[i + 2] == "an") found = true;
  CHECK(found);
  CHECK(tok.size() <= 25);
  CHECK(extract_trigger(high, low, m).text == t.text);
  CHECK_THROWS_AS(extract_trigger(high, high, m), ExtractionError);
}

TEST_CASE("trigger library") {
  const auto lib = trigger_library();
  REQUIRE(lib.size() == 3);
  CHECK(lib[0].category == TriggerCategory::Analysis);
  CHECK(lib[1].category == TriggerCategory::Transformation);
  CHECK(lib[2].category == TriggerCategory::StepByStep);
  for (const auto& t : lib) CHECK(tokenize(detokenize(t.tokens)) == t.tokens);

  std::ostringstream out;
  write_trigger_library(lib, out);
  std::istringstream in(out.str());
  const auto back = parse_trigger_library(in);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].text == lib[i].text);
    CHECK(back[i].category == lib[i].category);
  }
  std::istringstream shipped_in(
      "# comment\n[analysis]\nlook closely :\n\n[step_by_step]\nfirst , then :\nagain :\n");
  const auto shipped = parse_trigger_library(shipped_in);
  REQUIRE(shipped.size() == 3);
  CHECK(shipped[2].category == TriggerCategory::StepByStep);
  std::istringstream bad("[nonsense]\nx\n");
  CHECK_THROWS(parse_trigger_library(bad));
}

TEST_CASE("shipped trigger file matches the built-in library") {
  const auto file = load_trigger_library(ROUTERLAB_SOURCE_DIR "/data/triggers.txt");
  const auto lib = trigger_library();
  REQUIRE(file.size() == lib.size());
  for (std::size_t i = 0; i < lib.size(); ++i) CHECK(file[i].text == lib[i].text);
}

TEST_CASE("live extractor against a local server") {
  httplib::Server server;
  std::atomic<int> mode{0};
  std::string seen_auth;
  nlohmann::json seen_body;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = nlohmann::json::parse(req.body);
    if (mode == 0) {
      res.set_content(R"({"choices":[{"message":{"content":"\n  \"Kindly reason carefully about:\"\nignored"}}]})",
                      "application/json");
    } else if (mode == 1) {
      res.status = 500;
      res.set_content("boom", "text/plain");
    } else {
      res.set_content("not json at all", "text/plain");
    }
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  LiveExtractor::Settings st;
  st.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  st.api_key = "secret";
  st.model = "m1";
  LiveExtractor live(st);
  const std::vector<Query> high = {make_query("h", "describe a proof")};
  const std::vector<Query> low = {make_query("l", "hi")};

  const auto t = extract_trigger(high, low, live);
  CHECK(t.text == "kindly reason carefully about :");
  CHECK(seen_auth == "Bearer secret");
  CHECK(seen_body["model"] == "m1");
  CHECK(seen_body["messages"].size() == 2);

  mode = 1;
  try {
    extract_trigger(high, low, live);
    CHECK(false);
  } catch (const ExtractionError& e) {
    CHECK(e.raw_response() == "boom");
  }
  mode = 2;
  try {
    extract_trigger(high, low, live);
    CHECK(false);
  } catch (const ExtractionError& e) {
    CHECK(e.raw_response() == "not json at all");
  }
  server.stop();
  th.join();
}

TEST_CASE("live extractor response parsing") {
  CHECK(LiveExtractor::parse_response(R"({"content":"go : "})").text == "go :");
  CHECK_THROWS_AS(LiveExtractor::parse_response(R"({"choices":[]})"), ExtractionError);
  CHECK_THROWS_AS(LiveExtractor::parse_response(R"({"content":"   \n  "})"), ExtractionError);
  std::string many = R"({"content":")";
  for (int i = 0; i < 40; ++i) many += "w ";
  many += R"("})";
  CHECK(LiveExtractor::parse_response(many).tokens.size() == 25);
}
