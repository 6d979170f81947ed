#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "routerlab/corpus.hpp"
#include "routerlab/dnn_router.hpp"
#include "routerlab/metrics.hpp"
#include "routerlab/routers.hpp"

namespace routerlab {

enum class TriggerCategory { Whitebox, Analysis, Transformation, StepByStep, Custom };

const char* to_string(TriggerCategory c);
TriggerCategory trigger_category_from_string(const std::string& s);

struct Trigger {
  std::vector<std::string> tokens;
  std::string text;
  TriggerCategory category = TriggerCategory::Custom;
};

// Tokenizes `text`; throws ArgumentError when it has no tokens.
Trigger make_trigger(const std::string& text, TriggerCategory category);
Trigger make_trigger(std::vector<std::string> tokens, TriggerCategory category);

// t (+) q: the trigger is a strict prefix. The id gains a "+trig" suffix.
Query apply_trigger(const Trigger& t, const Query& q);

struct AttackReport {
  Trigger trigger;
  double asr = 0.0;
  double acg = 0.0;
  std::vector<ScoredQuery> per_query;
  double alpha_used = 0.5;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const AttackReport& r);
// Throws FormatError on missing fields.
AttackReport attack_report_from_json(const nlohmann::json& j);

// Scores every query with and without the trigger. Queries must carry a
// complexity label and at least one must be simple.
AttackReport evaluate_trigger(const Router& r, const Trigger& t, std::span<const Query> queries,
                              double alpha, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// White-box universal trigger search

struct WhiteboxParams {
  std::size_t length = 5;
  int iters = 10;
  std::size_t topk = 20;
  std::uint64_t seed = 0;
  double alpha = 0.5;  // only used for the returned report
};

struct WhiteboxResult {
  Trigger trigger;
  AttackReport report;
  double objective_init = 0.0;   // mean logit with the random initial trigger
  double objective_final = 0.0;  // mean logit with the returned trigger
  int passes = 0;
};

// Mean logit over `queries` with `trigger_ids` prepended.
double trigger_objective(const DnnRouter& r, std::span<const int> trigger_ids,
                         std::span<const Query> queries);

// Greedy HotFlip-style coordinate search on the mean-logit surrogate. Each
// pass visits every trigger position, ranks replacements by the first-order
// score (e_cand - e_cur) . g, re-scores the top-k exactly and keeps the best
// strict improvement. Stops after `iters` passes or a pass with no change.
WhiteboxResult whitebox_universal_trigger(const DnnRouter& r, std::span<const Query> simple,
                                          const WhiteboxParams& params);

// `count` triggers of `length` tokens drawn uniformly from the router's
// vocabulary (UNK excluded).
std::vector<Trigger> random_triggers(const DnnRouter& r, std::size_t length, std::size_t count,
                                     std::uint64_t seed);

// ---------------------------------------------------------------------------
// Black-box ensemble pipeline

// theta_j = acc_j / sum(acc).
std::vector<double> ensemble_weights_from_accuracy(std::span<const double> accs);

// P_i = sum_j theta_j * p_ij.
std::vector<double> blackbox_ensemble_winrate(std::span<const Router* const> routers,
                                              std::span<const double> theta,
                                              std::span<const Query> queries);

struct Partition {
  std::vector<Query> high;
  std::vector<Query> low;
};

// Sorts by P descending (ties by id ascending) and slices the top and bottom.
Partition select_partition(std::span<const Query> queries, std::span<const double> win_rates,
                           double top_frac, double bottom_frac);

class TriggerExtractor {
 public:
  virtual ~TriggerExtractor() = default;
  virtual Trigger extract(std::span<const Query> high, std::span<const Query> low) = 0;
};

// Offline extractor: picks the n-grams (n <= 3) whose document frequency is
// most elevated in the high set, drops any that reuse content words of the
// low set, and joins them in the order they typically appear. At most 25
// tokens.
class MockExtractor : public TriggerExtractor {
 public:
  static constexpr std::size_t kMaxTokens = 25;
  Trigger extract(std::span<const Query> high, std::span<const Query> low) override;
};

// Chat-completion extractor. Sends {model, messages[]} to `url` and reads
// choices[0].message.content (or a top-level "content") as the trigger.
class LiveExtractor : public TriggerExtractor {
 public:
  struct Settings {
    std::string url;
    std::string api_key;
    std::string model = "gpt-4o";
    std::size_t max_examples = 20;
    int timeout_seconds = 60;
  };

  explicit LiveExtractor(Settings s) : settings_(std::move(s)) {}
  // Reads ROUTERLAB_EXTRACTOR_URL, ROUTERLAB_EXTRACTOR_KEY and optionally
  // ROUTERLAB_EXTRACTOR_MODEL.
  static LiveExtractor from_env();

  Trigger extract(std::span<const Query> high, std::span<const Query> low) override;

  nlohmann::json build_request(std::span<const Query> high, std::span<const Query> low) const;
  static Trigger parse_response(const std::string& body);

 private:
  Settings settings_;
};

Trigger extract_trigger(std::span<const Query> high, std::span<const Query> low,
                        TriggerExtractor& extractor);

// Built-in analysis / transformation / step-by-step templates.
std::vector<Trigger> trigger_library();
// Plain-text sections "[category]" followed by one trigger per line.
std::vector<Trigger> parse_trigger_library(std::istream& in);
std::vector<Trigger> load_trigger_library(const std::filesystem::path& path);
void write_trigger_library(std::span<const Trigger> triggers, std::ostream& out);

}  // namespace routerlab
