#include "routerlab/attacks_adv.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "routerlab/error.hpp"
#include "routerlab/rng.hpp"
#include "routerlab/textfeat.hpp"

namespace routerlab {

const char* to_string(TriggerCategory c) {
  switch (c) {
    case TriggerCategory::Whitebox: return "whitebox";
    case TriggerCategory::Analysis: return "analysis";
    case TriggerCategory::Transformation: return "transformation";
    case TriggerCategory::StepByStep: return "step_by_step";
    case TriggerCategory::Custom: return "custom";
  }
  return "custom";
}

TriggerCategory trigger_category_from_string(const std::string& s) {
  if (s == "whitebox") return TriggerCategory::Whitebox;
  if (s == "analysis") return TriggerCategory::Analysis;
  if (s == "transformation") return TriggerCategory::Transformation;
  if (s == "step_by_step") return TriggerCategory::StepByStep;
  if (s == "custom") return TriggerCategory::Custom;
  throw ArgumentError("unknown trigger category '" + s + "'");
}

Trigger make_trigger(std::vector<std::string> tokens, TriggerCategory category) {
  if (tokens.empty()) throw ArgumentError("trigger must have at least one token");
  Trigger t;
  t.text = detokenize(tokens);
  t.tokens = std::move(tokens);
  t.category = category;
  return t;
}

Trigger make_trigger(const std::string& text, TriggerCategory category) {
  return make_trigger(tokenize(text), category);
}

Query apply_trigger(const Trigger& t, const Query& q) {
  Query out;
  out.id = q.id + "+trig";
  out.text = t.text + " " + q.text;
  out.tokens.reserve(t.tokens.size() + q.tokens.size());
  out.tokens.insert(out.tokens.end(), t.tokens.begin(), t.tokens.end());
  out.tokens.insert(out.tokens.end(), q.tokens.begin(), q.tokens.end());
  out.complexity_label = q.complexity_label;
  return out;
}

AttackReport evaluate_trigger(const Router& r, const Trigger& t, std::span<const Query> queries,
                              double alpha, std::uint64_t seed) {
  AttackReport rep;
  rep.trigger = t;
  rep.alpha_used = alpha;
  rep.seed = seed;
  rep.per_query.reserve(queries.size());
  for (const auto& q : queries) {
    if (!q.complexity_label)
      throw ArgumentError("query '" + q.id + "' has no complexity label");
    rep.per_query.push_back(
        {q.id, *q.complexity_label, r.win_prob(q), r.win_prob(apply_trigger(t, q))});
  }
  rep.asr = adv_asr(rep.per_query, alpha);
  rep.acg = acg(rep.per_query);
  return rep;
}

nlohmann::json to_json(const AttackReport& r) {
  auto rows = nlohmann::json::array();
  for (const auto& q : r.per_query)
    rows.push_back({{"id", q.id}, {"y", q.y}, {"p_before", q.p_before}, {"p_after", q.p_after}});
  return {{"trigger", r.trigger.text},
          {"category", to_string(r.trigger.category)},
          {"asr", r.asr},
          {"acg", r.acg},
          {"alpha_used", r.alpha_used},
          {"seed", r.seed},
          {"per_query", rows}};
}

AttackReport attack_report_from_json(const nlohmann::json& j) {
  try {
    AttackReport r;
    r.trigger = make_trigger(j.at("trigger").get<std::string>(),
                             trigger_category_from_string(j.at("category").get<std::string>()));
    r.asr = j.at("asr").get<double>();
    r.acg = j.at("acg").get<double>();
    r.alpha_used = j.at("alpha_used").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& q : j.at("per_query"))
      r.per_query.push_back({q.at("id").get<std::string>(), q.at("y").get<int>(),
                             q.at("p_before").get<double>(), q.at("p_after").get<double>()});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad attack report: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// White-box search

namespace {

// Precomputed token-sum of each query so a candidate trigger only costs one
// MLP evaluation per query.
struct PooledQueries {
  std::vector<Eigen::VectorXd> sums;
  std::vector<double> lengths;
};

PooledQueries pool_queries(const DnnRouter& r, std::span<const Query> queries) {
  PooledQueries pq;
  const auto& emb = r.params().embedding;
  for (const auto& q : queries) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(emb.cols());
    const auto ids = DnnRouter::known_ids(r.vocab().ids(q.tokens));
    for (const int id : ids) s += emb.row(id).transpose();
    pq.sums.push_back(std::move(s));
    pq.lengths.push_back(static_cast<double>(ids.size()));
  }
  return pq;
}

Eigen::VectorXd trigger_sum(const DnnRouter& r, std::span<const int> ids) {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(r.dim());
  for (const int id : ids) s += r.params().embedding.row(id).transpose();
  return s;
}

double objective(const DnnRouter& r, const Eigen::VectorXd& tsum, double tlen,
                 const PooledQueries& pq) {
  double total = 0.0;
  for (std::size_t i = 0; i < pq.sums.size(); ++i) {
    const double len = tlen + pq.lengths[i];
    total += r.logit_pooled(len > 0.0 ? Eigen::VectorXd((tsum + pq.sums[i]) / len) : tsum);
  }
  return total / static_cast<double>(pq.sums.size());
}

// Batch-averaged d(logit)/d(embedding at one trigger position). Mean pooling
// gives every position of a sequence the same gradient.
Eigen::VectorXd position_gradient(const DnnRouter& r, const Eigen::VectorXd& tsum, double tlen,
                                  const PooledQueries& pq) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(r.dim());
  for (std::size_t i = 0; i < pq.sums.size(); ++i) {
    const double len = tlen + pq.lengths[i];
    DnnRouter::Cache cache;
    Eigen::VectorXd a = (tsum + pq.sums[i]) / len;
    cache.activations.push_back(a);
    for (const auto& l : r.params().layers) {
      a = (l.w * a + l.b).array().tanh().matrix();
      cache.activations.push_back(a);
    }
    g += r.pooled_grad(cache) / len;
  }
  g /= static_cast<double>(pq.sums.size());
  if (!g.allFinite()) throw NumericError("white-box search: non-finite gradient");
  return g;
}

}  // namespace

double trigger_objective(const DnnRouter& r, std::span<const int> trigger_ids,
                         std::span<const Query> queries) {
  if (queries.empty()) throw ArgumentError("trigger_objective: no queries");
  const auto pq = pool_queries(r, queries);
  const auto ids = DnnRouter::known_ids(trigger_ids);
  return objective(r, trigger_sum(r, ids), static_cast<double>(ids.size()), pq);
}

std::vector<Trigger> random_triggers(const DnnRouter& r, std::size_t length, std::size_t count,
                                     std::uint64_t seed) {
  const auto v = r.vocab().size();
  if (v < 2) throw ArgumentError("vocabulary has no real tokens");
  Rng rng(seed);
  std::vector<Trigger> out;
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<std::string> toks;
    for (std::size_t i = 0; i < length; ++i)
      toks.push_back(r.vocab().token(1 + static_cast<int>(uniform_index(rng, v - 1))));
    out.push_back(make_trigger(std::move(toks), TriggerCategory::Custom));
  }
  return out;
}

WhiteboxResult whitebox_universal_trigger(const DnnRouter& r, std::span<const Query> simple,
                                          const WhiteboxParams& params) {
  if (simple.empty()) throw ArgumentError("white-box search needs at least one simple query");
  if (params.length < 1) throw ArgumentError("trigger length must be >= 1");
  for (const auto& q : simple)
    if (q.complexity_label != 0)
      throw ArgumentError("white-box search expects simple queries only; got '" + q.id + "'");
  const int vocab = static_cast<int>(r.vocab().size());
  if (vocab < 3) throw ArgumentError("vocabulary too small for trigger search");
  if (static_cast<std::size_t>(vocab) <= params.topk)
    throw ArgumentError("vocabulary size must exceed topk");

  const auto pq = pool_queries(r, simple);
  const auto& emb = r.params().embedding;
  Rng rng(params.seed);
  std::vector<int> ids(params.length);
  for (auto& id : ids) id = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(vocab - 1)));
  const double tlen = static_cast<double>(ids.size());
  Eigen::VectorXd tsum = trigger_sum(r, ids);
  double best = objective(r, tsum, tlen, pq);

  WhiteboxResult res;
  res.objective_init = best;
  std::vector<int> order(static_cast<std::size_t>(vocab - 1));
  for (int pass = 0; pass < params.iters; ++pass) {
    bool improved = false;
    for (std::size_t pos = 0; pos < ids.size(); ++pos) {
      const Eigen::VectorXd g = position_gradient(r, tsum, tlen, pq);
      const Eigen::VectorXd first_order = emb * g;  // e_c . g for every token
      const int cur = ids[pos];
      std::iota(order.begin(), order.end(), 1);
      order.erase(std::remove(order.begin(), order.end(), cur), order.end());
      const std::size_t k = std::min(params.topk, order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                        [&](int a, int b) {
                          if (first_order(a) != first_order(b)) return first_order(a) > first_order(b);
                          return a < b;
                        });
      int best_cand = -1;
      double best_cand_obj = best;
      for (std::size_t c = 0; c < k; ++c) {
        const int cand = order[c];
        const Eigen::VectorXd s = tsum - emb.row(cur).transpose() + emb.row(cand).transpose();
        const double obj = objective(r, s, tlen, pq);
        if (obj > best_cand_obj) {
          best_cand_obj = obj;
          best_cand = cand;
        }
      }
      if (best_cand >= 0) {
        ids[pos] = best_cand;
        tsum = trigger_sum(r, ids);
        best = objective(r, tsum, tlen, pq);
        improved = true;
      }
      order.resize(static_cast<std::size_t>(vocab - 1));
    }
    res.passes = pass + 1;
    if (!improved) break;
  }
  res.objective_final = best;
  std::vector<std::string> toks;
  for (const int id : ids) toks.push_back(r.vocab().token(id));
  res.trigger = make_trigger(std::move(toks), TriggerCategory::Whitebox);
  res.report = evaluate_trigger(r, res.trigger, simple, params.alpha, params.seed);
  return res;
}

// ---------------------------------------------------------------------------
// Black-box ensemble

std::vector<double> ensemble_weights_from_accuracy(std::span<const double> accs) {
  if (accs.empty()) throw ArgumentError("ensemble needs at least one router accuracy");
  double sum = 0.0;
  for (const double a : accs) {
    if (!(a >= 0.0 && a <= 1.0)) throw ArgumentError("accuracies must lie in [0,1]");
    sum += a;
  }
  if (!(sum > 0.0)) throw ArgumentError("all router accuracies are zero");
  std::vector<double> theta;
  theta.reserve(accs.size());
  for (const double a : accs) theta.push_back(a / sum);
  return theta;
}

std::vector<double> blackbox_ensemble_winrate(std::span<const Router* const> routers,
                                              std::span<const double> theta,
                                              std::span<const Query> queries) {
  if (routers.size() != theta.size())
    throw ArgumentError("ensemble: " + std::to_string(theta.size()) + " weights for " +
                        std::to_string(routers.size()) + " routers");
  double sum = 0.0;
  for (const double t : theta) {
    if (!(t >= 0.0)) throw ArgumentError("ensemble weights must be non-negative");
    sum += t;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ArgumentError("ensemble weights must sum to 1");
  std::vector<double> out(queries.size(), 0.0);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    double lo = 1.0;
    double hi = 0.0;
    for (std::size_t j = 0; j < routers.size(); ++j) {
      const double p = routers[j]->win_prob(queries[i]);
      out[i] += theta[j] * p;
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
    // Keeps the convex combination inside [min_j, max_j] despite rounding.
    out[i] = std::clamp(out[i], lo, hi);
  }
  return out;
}

Partition select_partition(std::span<const Query> queries, std::span<const double> win_rates,
                           double top_frac, double bottom_frac) {
  if (queries.empty()) throw ArgumentError("select_partition: no queries");
  if (queries.size() != win_rates.size()) throw ArgumentError("select_partition: size mismatch");
  if (!(top_frac > 0.0) || !(bottom_frac > 0.0) || top_frac + bottom_frac > 1.0 + 1e-12)
    throw ArgumentError("select_partition: fractions must be positive and sum to <= 1");
  std::vector<std::size_t> order(queries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (win_rates[a] != win_rates[b]) return win_rates[a] > win_rates[b];
    return queries[a].id < queries[b].id;
  });
  const auto n = static_cast<double>(queries.size());
  auto count = [&](double f) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(f * n)));
  };
  std::size_t n_high = std::min(count(top_frac), queries.size());
  std::size_t n_low = std::min(count(bottom_frac), queries.size() - n_high);
  Partition p;
  for (std::size_t i = 0; i < n_high; ++i) p.high.push_back(queries[order[i]]);
  for (std::size_t i = queries.size() - n_low; i < queries.size(); ++i)
    p.low.push_back(queries[order[i]]);
  return p;
}

// ---------------------------------------------------------------------------
// Trigger extraction

namespace {

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {
      "a",    "an",   "the",  "is",   "are",  "was",  "were", "be",   "to",   "of",
      "in",   "on",   "at",   "for",  "with", "and",  "or",   "but",  "that", "this",
      "it",   "its",  "by",   "as",   "from", "into", "than", "then", "so",   "do",
      "does", "did",  "i",    "you",  "me",   "my",   "your", "we",   "can",  "will",
      "what", "who",  "how",  "when", "where", "why", "which", "should", "each", "one"};
  return words;
}

bool is_punct_token(const std::string& t) {
  return t.size() == 1 && std::ispunct(static_cast<unsigned char>(t[0]));
}

using Gram = std::vector<std::string>;

std::map<Gram, std::size_t> doc_freq(std::span<const Query> qs, std::size_t n) {
  std::map<Gram, std::size_t> df;
  for (const auto& q : qs) {
    std::set<Gram> seen;
    for (std::size_t i = 0; i + n <= q.tokens.size(); ++i)
      seen.emplace(q.tokens.begin() + static_cast<std::ptrdiff_t>(i),
                   q.tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
    for (auto& g : seen) ++df[g];
  }
  return df;
}

// Mean index of the first occurrence of `g` across the queries containing it.
double mean_position(const Gram& g, std::span<const Query> qs) {
  double total = 0.0;
  std::size_t hits = 0;
  for (const auto& q : qs) {
    const auto it = std::search(q.tokens.begin(), q.tokens.end(), g.begin(), g.end());
    if (it == q.tokens.end()) continue;
    total += static_cast<double>(it - q.tokens.begin());
    ++hits;
  }
  return hits ? total / static_cast<double>(hits) : 0.0;
}

bool contains_gram(const Gram& outer, const Gram& inner) {
  return std::search(outer.begin(), outer.end(), inner.begin(), inner.end()) != outer.end();
}

}  // namespace

Trigger MockExtractor::extract(std::span<const Query> high, std::span<const Query> low) {
  if (high.empty() || low.empty())
    throw ExtractionError("mock extractor needs non-empty high and low sets", "");
  std::set<std::string> low_content;
  for (const auto& q : low)
    for (const auto& t : q.tokens)
      if (!stopwords().count(t) && !is_punct_token(t)) low_content.insert(t);

  struct Candidate {
    Gram gram;
    double diff;
  };
  std::vector<Candidate> cands;
  const auto nh = static_cast<double>(high.size());
  const auto nl = static_cast<double>(low.size());
  for (std::size_t n = 1; n <= 3; ++n) {
    const auto dh = doc_freq(high, n);
    const auto dl = doc_freq(low, n);
    for (const auto& [g, c] : dh) {
      const auto it = dl.find(g);
      const double diff = static_cast<double>(c) / nh -
                          (it == dl.end() ? 0.0 : static_cast<double>(it->second) / nl);
      if (diff <= 0.0) continue;
      bool structural = false;
      bool clash = false;
      for (const auto& t : g) {
        if (low_content.count(t)) clash = true;
        if (!stopwords().count(t) && !is_punct_token(t)) structural = true;
      }
      if (structural && !clash) cands.push_back({g, diff});
    }
  }
  if (cands.empty())
    throw ExtractionError("no differential n-gram signal between high and low sets", "");
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.diff != b.diff) return a.diff > b.diff;
    if (a.gram.size() != b.gram.size()) return a.gram.size() > b.gram.size();
    return a.gram < b.gram;
  });
  const double cutoff = 0.5 * cands.front().diff;

  std::vector<Gram> chosen;
  std::size_t budget = 0;
  for (const auto& c : cands) {
    if (c.diff < cutoff) break;
    const bool covered = std::any_of(chosen.begin(), chosen.end(),
                                     [&](const Gram& g) { return contains_gram(g, c.gram); });
    if (covered) continue;
    if (budget + c.gram.size() > kMaxTokens) continue;
    chosen.push_back(c.gram);
    budget += c.gram.size();
  }
  std::vector<std::pair<double, Gram>> placed;
  for (auto& g : chosen) placed.emplace_back(mean_position(g, high), g);
  std::sort(placed.begin(), placed.end());

  std::vector<std::string> tokens;
  for (const auto& [_, g] : placed) {
    // Overlap the longest suffix/prefix match so adjacent grams chain.
    std::size_t overlap = 0;
    for (std::size_t k = std::min(g.size() - 1, tokens.size()); k > 0; --k)
      if (std::equal(tokens.end() - static_cast<std::ptrdiff_t>(k), tokens.end(), g.begin())) {
        overlap = k;
        break;
      }
    tokens.insert(tokens.end(), g.begin() + static_cast<std::ptrdiff_t>(overlap), g.end());
  }
  if (tokens.size() > kMaxTokens) tokens.resize(kMaxTokens);
  return make_trigger(std::move(tokens), TriggerCategory::Custom);
}

LiveExtractor LiveExtractor::from_env() {
  Settings s;
  if (const char* url = std::getenv("ROUTERLAB_EXTRACTOR_URL")) s.url = url;
  if (const char* key = std::getenv("ROUTERLAB_EXTRACTOR_KEY")) s.api_key = key;
  if (const char* model = std::getenv("ROUTERLAB_EXTRACTOR_MODEL")) s.model = model;
  if (s.url.empty()) throw ConfigError("ROUTERLAB_EXTRACTOR_URL is not set");
  return LiveExtractor(std::move(s));
}

nlohmann::json LiveExtractor::build_request(std::span<const Query> high,
                                            std::span<const Query> low) const {
  std::ostringstream prompt;
  prompt << "You are given two groups of user questions. Questions in group A are routed to a "
            "strong language model with high confidence; questions in group B are routed to a "
            "weak model. Identify the structural features that distinguish group A (phrasing, "
            "framing, formatting), ignoring topic and content. Then write one generic sentence "
            "prefix, at most 25 words, that carries those structural features without adding "
            "any subject matter. Reply with the prefix only, on a single line.\n\nGroup A:\n";
  for (std::size_t i = 0; i < high.size() && i < settings_.max_examples; ++i)
    prompt << "- " << high[i].text << "\n";
  prompt << "\nGroup B:\n";
  for (std::size_t i = 0; i < low.size() && i < settings_.max_examples; ++i)
    prompt << "- " << low[i].text << "\n";
  return {{"model", settings_.model},
          {"messages",
           nlohmann::json::array({{{"role", "system"},
                                   {"content", "You extract structural prompt patterns."}},
                                  {{"role", "user"}, {"content", prompt.str()}}})}};
}

Trigger LiveExtractor::parse_response(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ExtractionError(std::string("extractor response is not JSON: ") + e.what(), body);
  }
  std::string content;
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty() &&
      j["choices"][0].contains("message") && j["choices"][0]["message"].contains("content") &&
      j["choices"][0]["message"]["content"].is_string())
    content = j["choices"][0]["message"]["content"].get<std::string>();
  else if (j.contains("content") && j["content"].is_string())
    content = j["content"].get<std::string>();
  else
    throw ExtractionError("extractor response has no message content", body);

  std::istringstream lines(content);
  std::string line;
  while (std::getline(lines, line)) {
    const auto a = line.find_first_not_of(" \t\r\"'`");
    if (a == std::string::npos) continue;
    const auto b = line.find_last_not_of(" \t\r\"'`");
    auto tokens = tokenize(line.substr(a, b - a + 1));
    if (tokens.empty()) continue;
    if (tokens.size() > MockExtractor::kMaxTokens) tokens.resize(MockExtractor::kMaxTokens);
    return make_trigger(std::move(tokens), TriggerCategory::Custom);
  }
  throw ExtractionError("extractor returned an empty trigger", body);
}

Trigger LiveExtractor::extract(std::span<const Query> high, std::span<const Query> low) {
  const auto request = build_request(high, low).dump();
  const auto scheme_end = settings_.url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("extractor URL needs a scheme: " + settings_.url);
  const auto path_start = settings_.url.find('/', scheme_end + 3);
  const std::string origin = settings_.url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : settings_.url.substr(path_start);

  httplib::Client client(origin);
  client.set_read_timeout(settings_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!settings_.api_key.empty()) headers.emplace("Authorization", "Bearer " + settings_.api_key);
  auto res = client.Post(path, headers, request, "application/json");
  if (!res) throw ExtractionError("extractor request failed: " + httplib::to_string(res.error()), "");
  if (res->status != 200)
    throw ExtractionError("extractor returned HTTP " + std::to_string(res->status), res->body);
  return parse_response(res->body);
}

Trigger extract_trigger(std::span<const Query> high, std::span<const Query> low,
                        TriggerExtractor& extractor) {
  if (high.empty() || low.empty()) throw ArgumentError("extract_trigger: empty high or low set");
  return extractor.extract(high, low);
}

// ---------------------------------------------------------------------------
// Trigger library

std::vector<Trigger> trigger_library() {
  return {
      make_trigger("examine the wording and reasoning behind this question , then assess whether "
                   "its argument holds together :",
                   TriggerCategory::Analysis),
      make_trigger("convert this question into academic prose , then render it in french before "
                   "answering :",
                   TriggerCategory::Transformation),
      make_trigger("work through this question stage by stage , changing its wording a little at "
                   "each stage :",
                   TriggerCategory::StepByStep),
  };
}

std::vector<Trigger> parse_trigger_library(std::istream& in) {
  std::vector<Trigger> out;
  std::optional<TriggerCategory> section;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos || line[a] == '#') continue;
    const auto b = line.find_last_not_of(" \t\r");
    const std::string body = line.substr(a, b - a + 1);
    if (body.front() == '[') {
      if (body.back() != ']') throw FormatError("trigger library line " + std::to_string(lineno) + ": bad section header");
      section = trigger_category_from_string(body.substr(1, body.size() - 2));
      continue;
    }
    if (!section)
      throw FormatError("trigger library line " + std::to_string(lineno) + ": trigger before any section");
    out.push_back(make_trigger(body, *section));
  }
  return out;
}

std::vector<Trigger> load_trigger_library(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read trigger library " + path.string());
  return parse_trigger_library(in);
}

void write_trigger_library(std::span<const Trigger> triggers, std::ostream& out) {
  std::optional<TriggerCategory> section;
  for (const auto& t : triggers) {
    if (section != t.category) {
      out << '[' << to_string(t.category) << "]\n";
      section = t.category;
    }
    out << t.text << '\n';
  }
}

}  // namespace routerlab
