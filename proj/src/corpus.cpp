#include "routerlab/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "routerlab/error.hpp"
#include "routerlab/rng.hpp"
#include "routerlab/textfeat.hpp"

namespace routerlab {

Query make_query(std::string id, std::string text, std::optional<int> complexity_label) {
  auto tokens = tokenize(text);
  if (tokens.empty()) throw ArgumentError("query '" + id + "' has blank text");
  if (complexity_label && *complexity_label != 0 && *complexity_label != 1)
    throw ArgumentError("complexity label must be 0 or 1");
  return Query{std::move(id), std::move(text), std::move(tokens), complexity_label};
}

double win_label_for(Outcome outcome) {
  switch (outcome) {
    case Outcome::StrongWin: return 1.0;
    case Outcome::WeakWin: return 0.0;
    case Outcome::Tie: return 0.5;
  }
  return 0.5;
}

const char* to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::StrongWin: return "strong";
    case Outcome::WeakWin: return "weak";
    case Outcome::Tie: return "tie";
  }
  return "tie";
}

const char* to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::Train: return "train";
    case SplitTag::Val: return "val";
    case SplitTag::Test: return "test";
    case SplitTag::Unsplit: return "unsplit";
  }
  return "unsplit";
}

PreferenceRecord make_record(Query query, std::string strong_id, std::string weak_id,
                             Outcome outcome, std::optional<int> strong_tier,
                             std::optional<int> weak_tier) {
  if (strong_id.empty() || weak_id.empty())
    throw ArgumentError("model ids must be non-empty");
  if (strong_id == weak_id)
    throw ArgumentError("strong and weak model ids must differ: " + strong_id);
  PreferenceRecord r;
  r.query = std::move(query);
  r.strong_id = std::move(strong_id);
  r.weak_id = std::move(weak_id);
  r.strong_tier = strong_tier;
  r.weak_tier = weak_tier;
  r.outcome = outcome;
  r.win_label = win_label_for(outcome);
  return r;
}

void check_unique_ids(const Dataset& d) {
  std::set<std::string> seen;
  for (const auto& r : d.records)
    if (!seen.insert(r.query.id).second)
      throw FormatError("duplicate query id: " + r.query.id);
}

std::vector<Query> queries_of(const Dataset& d) {
  std::vector<Query> out;
  out.reserve(d.size());
  for (const auto& r : d.records) out.push_back(r.query);
  return out;
}

std::vector<Query> simple_queries(const Dataset& d) {
  std::vector<Query> out;
  for (const auto& r : d.records)
    if (r.query.complexity_label == 0) out.push_back(r.query);
  return out;
}

// ---------------------------------------------------------------------------
// JSONL

namespace {

PreferenceRecord record_from_json(const nlohmann::json& j, std::size_t line) {
  if (!j.is_object()) throw FormatError("not a JSON object");
  auto str_field = [&](const char* key) -> std::string {
    if (!j.contains(key) || !j[key].is_string())
      throw FormatError(std::string("missing or non-string field '") + key + "'");
    return j[key].get<std::string>();
  };
  auto opt_int = [&](const char* key) -> std::optional<int> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (!j[key].is_number_integer())
      throw FormatError(std::string("field '") + key + "' must be an integer");
    return j[key].get<int>();
  };
  const std::string winner = str_field("winner");
  Outcome outcome;
  if (winner == "strong") outcome = Outcome::StrongWin;
  else if (winner == "weak") outcome = Outcome::WeakWin;
  else if (winner == "tie") outcome = Outcome::Tie;
  else throw FormatError("winner must be strong, weak or tie, got '" + winner + "'");

  std::string id = j.contains("id") ? str_field("id") : "line-" + std::to_string(line);
  auto label = opt_int("complexity_label");
  Query q = make_query(std::move(id), str_field("query"), label);
  return make_record(std::move(q), str_field("strong_model"), str_field("weak_model"),
                     outcome, opt_int("strong_tier"), opt_int("weak_tier"));
}

}  // namespace

IngestResult parse_jsonl(std::istream& in, const std::string& provenance) {
  IngestResult result;
  result.dataset.provenance = provenance;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  std::size_t nonblank = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++nonblank;
    try {
      auto rec = record_from_json(nlohmann::json::parse(line), lineno);
      if (!ids.insert(rec.query.id).second)
        throw FormatError("duplicate id '" + rec.query.id + "'");
      result.dataset.records.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      result.issues.push_back({lineno, e.what()});
    } catch (const Error& e) {
      result.issues.push_back({lineno, e.what()});
    }
  }
  if (nonblank > 0 && result.issues.size() * 10 > nonblank) {
    const auto& first = result.issues.front();
    throw FormatError(provenance + ": " + std::to_string(result.issues.size()) + " of " +
                      std::to_string(nonblank) + " lines malformed; first at line " +
                      std::to_string(first.line) + ": " + first.message);
  }
  return result;
}

IngestResult ingest_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return parse_jsonl(in, path.string());
}

void emit_jsonl(const Dataset& d, std::ostream& out) {
  for (const auto& r : d.records) {
    nlohmann::json j;
    j["id"] = r.query.id;
    j["query"] = r.query.text;
    j["strong_model"] = r.strong_id;
    j["weak_model"] = r.weak_id;
    j["winner"] = to_string(r.outcome);
    if (r.strong_tier) j["strong_tier"] = *r.strong_tier;
    if (r.weak_tier) j["weak_tier"] = *r.weak_tier;
    if (r.query.complexity_label) j["complexity_label"] = *r.query.complexity_label;
    out << j.dump() << '\n';
  }
}

void emit_jsonl(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  emit_jsonl(d, out);
}

// ---------------------------------------------------------------------------
// Synthetic corpus

namespace {

const std::vector<std::string> kSimpleOpeners = {
    "what is",      "who is",         "where is",    "how do i",
    "can you tell me", "what time does", "is it",     "how much is",
    "what are",     "where can i buy", "when does",  "do you know",
    "how long does", "why is",        "which is",    "should i",
};

const std::vector<std::string> kEveryday = {
    "weather", "today", "tomorrow", "capital", "france", "dog", "cat", "coffee",
    "pizza", "movie", "song", "birthday", "party", "restaurant", "open", "close",
    "store", "bus", "train", "ticket", "price", "cheap", "best", "good", "pasta",
    "recipe", "egg", "boil", "bake", "cake", "bread", "milk", "tea", "water",
    "rain", "snow", "sunny", "beach", "park", "game", "score", "team", "football",
    "basketball", "tennis", "shoes", "shirt", "jacket", "color", "blue", "red",
    "green", "name", "actor", "singer", "book", "author", "library", "school",
    "teacher", "holiday", "christmas", "summer", "winter", "morning", "night",
    "sleep", "breakfast", "lunch", "dinner", "apple", "banana", "orange", "salad",
    "soup", "garden", "flower", "tree", "bird", "fish", "horse", "car", "bike",
    "phone", "charger", "battery", "wifi", "password", "email", "friend", "mom",
    "dad", "baby", "gift", "card", "money", "bank", "hotel", "flight", "airport",
    "city", "street", "map", "nearby", "mall", "cinema", "concert", "museum",
    "zoo", "pet", "puppy", "kitten", "walk", "run", "gym", "yoga", "dance",
    "music", "guitar", "piano", "picture", "camera", "kitchen", "table", "chair",
    "sofa", "bed", "window", "door", "key", "umbrella", "hat", "socks", "soap",
    "shampoo", "towel", "doctor", "dentist", "cold", "fever", "joke", "riddle",
    "funny", "story", "tv", "show", "channel", "news", "sports", "vacation",
};

const std::vector<std::string> kStructural = {
    "below is an instruction that describes a task",
    "paired with an input that provides further context",
    "write a response that appropriately completes the request",
    "provide a detailed definition of",
    "analyze the syntactic structure of",
    "evaluate the logical relations in",
    "rewrite the following text in a formal style",
    "translate the following input into",
    "explain step by step how",
    "modify the text one step at a time to",
    "compare and contrast the definition of",
    "justify each step of the derivation for",
};

const std::vector<std::string> kTechnical = {
    "algorithm", "theorem", "derivative", "integral", "complexity", "database",
    "recursion", "protocol", "quantum", "entropy", "eigenvalue", "matrix",
    "tensor", "gradient", "optimization", "convergence", "compiler", "kernel",
    "thread", "mutex", "latency", "throughput", "encryption", "hashing",
    "polynomial", "manifold", "topology", "lemma", "corollary", "hypothesis",
    "regression", "variance", "covariance", "estimator", "likelihood", "bayesian",
    "posterior", "prior", "markov", "stochastic", "differential", "equation",
    "boundary", "condition", "asymptotic", "bound", "graph", "vertex", "edge",
    "spanning", "heuristic", "approximation", "semantics", "syntax", "grammar",
    "parser", "automaton", "turing", "decidability", "reduction", "invariant",
    "proof", "induction", "contradiction", "axiom", "ontology", "epistemology",
    "thermodynamics", "enzyme", "catalyst", "molecule", "isotope", "photon",
    "relativity", "momentum", "torque", "oscillator", "amplitude", "frequency",
    "spectrum", "fourier", "laplace", "convolution", "filter", "sampling",
    "aliasing", "architecture", "microservice", "consensus", "replication",
    "sharding", "transaction", "isolation", "serializable", "scheduler",
    "allocator", "garbage", "collector", "runtime", "bytecode", "interpreter",
    "monad", "functor", "lambda", "calculus", "category", "morphism", "isomorphism",
    "homomorphism", "ring", "field", "lattice", "ideal", "module", "vector",
    "subspace", "projection", "orthogonal", "unitary", "hermitian", "operator",
    "jurisprudence", "precedent", "statute", "liability", "fiduciary", "arbitrage",
    "derivatives", "hedging", "volatility", "macroeconomics", "inflation",
    "elasticity", "equilibrium", "game", "theory", "nash", "utility", "mechanism",
};

const std::vector<std::string> kConnectors = {"in", "for", "with", "and", "of", "the", "under"};

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[static_cast<std::size_t>(uniform_index(rng, v.size()))];
}

std::size_t pick_between(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(uniform_index(rng, hi - lo + 1));
}

std::string simple_text(Rng& rng) {
  std::string s = pick(kSimpleOpeners, rng);
  const std::size_t k = pick_between(rng, 2, 4);
  for (std::size_t i = 0; i < k; ++i) s += " " + pick(kEveryday, rng);
  return s + "?";
}

std::string complex_text(Rng& rng) {
  std::string s = pick(kStructural, rng);
  const std::size_t k = pick_between(rng, 8, 14);
  for (std::size_t i = 0; i < k; ++i) {
    if (i > 0 && bernoulli(rng, 0.3)) s += " " + pick(kConnectors, rng);
    s += " " + pick(kTechnical, rng);
  }
  if (bernoulli(rng, 0.5)) {
    s += ". " + pick(kStructural, rng);
    const std::size_t m = pick_between(rng, 2, 5);
    for (std::size_t i = 0; i < m; ++i) s += " " + pick(kTechnical, rng);
  }
  return s + ".";
}

}  // namespace

Dataset generate_synthetic(std::size_t n, std::uint64_t seed) {
  if (n < 10) throw ArgumentError("synthetic corpus needs n >= 10");
  Rng rng(seed);
  std::vector<int> labels(n, 1);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n / 2), 0);
  shuffle_in_place(labels, rng);

  Dataset d;
  d.provenance = "synthetic(n=" + std::to_string(n) + ",seed=" + std::to_string(seed) + ")";
  d.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i];
    std::ostringstream id;
    id << "syn" << seed << "-" << std::setw(6) << std::setfill('0') << i;
    std::string text = y == 0 ? simple_text(rng) : complex_text(rng);
    const bool strong_wins = bernoulli(rng, y == 0 ? 0.2 : 0.8);
    d.records.push_back(make_record(make_query(id.str(), std::move(text), y), "strong-llm",
                                    "weak-llm",
                                    strong_wins ? Outcome::StrongWin : Outcome::WeakWin, 3, 1));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Filtering, splitting, merging

Dataset filter_by_tier(const Dataset& d, int threshold) {
  std::vector<std::string> missing;
  for (const auto& r : d.records)
    if (!r.strong_tier || !r.weak_tier) missing.push_back(r.query.id);
  if (!missing.empty()) {
    std::string msg = std::to_string(missing.size()) + " record(s) lack tier metadata:";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += " " + missing[i];
    if (missing.size() > 20) msg += " ...";
    throw PreconditionError(msg);
  }
  Dataset out;
  out.split_tag = d.split_tag;
  out.provenance = d.provenance + " | tier>" + std::to_string(threshold);
  for (const auto& r : d.records)
    if (*r.strong_tier > threshold && *r.weak_tier < threshold) out.records.push_back(r);
  return out;
}

DatasetSplit split(const Dataset& d, std::array<double, 3> fractions, std::uint64_t seed) {
  double sum = 0.0;
  for (const double f : fractions) {
    if (!(f > 0.0)) throw ArgumentError("split fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ArgumentError("split fractions must sum to 1");

  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  shuffle_in_place(order, rng);

  const auto n_train = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(fractions[0] * n)));
  const auto n_val =
      std::min<std::size_t>(n - n_train, static_cast<std::size_t>(std::llround(fractions[1] * n)));

  DatasetSplit out;
  const std::array<Dataset*, 3> parts{&out.train, &out.val, &out.test};
  const std::array<SplitTag, 3> tags{SplitTag::Train, SplitTag::Val, SplitTag::Test};
  for (std::size_t k = 0; k < 3; ++k) {
    parts[k]->split_tag = tags[k];
    parts[k]->provenance = d.provenance + " | split " + to_string(tags[k]) + " seed=" +
                           std::to_string(seed);
  }
  for (std::size_t i = 0; i < n; ++i) {
    Dataset* dst = i < n_train ? &out.train : i < n_train + n_val ? &out.val : &out.test;
    dst->records.push_back(d.records[order[i]]);
  }
  return out;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  Dataset out = a;
  out.records.insert(out.records.end(), b.records.begin(), b.records.end());
  out.provenance = a.provenance + " + " + b.provenance;
  check_unique_ids(out);
  return out;
}

Dataset merge(const Dataset& base, const Dataset& extra, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ArgumentError("merge fraction must be in [0,1]");
  std::vector<std::size_t> order(extra.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  shuffle_in_place(order, rng);
  const auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(extra.size())));
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
  Dataset sample;
  sample.provenance = extra.provenance + " (" + std::to_string(take) + " sampled)";
  for (std::size_t i = 0; i < take; ++i) sample.records.push_back(extra.records[order[i]]);
  return concat(base, sample);
}

Dataset derive_complexity_labels(Dataset d) {
  for (auto& r : d.records)
    if (!r.query.complexity_label)
      r.query.complexity_label = r.outcome == Outcome::StrongWin ? 1 : 0;
  return d;
}

std::map<std::string, double> empirical_win_rates(const Dataset& d) {
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& r : d.records) {
    auto& slot = acc[detokenize(r.query.tokens)];
    slot.first += r.win_label;
    ++slot.second;
  }
  std::map<std::string, double> out;
  for (const auto& [text, s] : acc) out.emplace(text, s.first / static_cast<double>(s.second));
  return out;
}

}  // namespace routerlab
