#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "routerlab/attacks_adv.hpp"
#include "routerlab/corpus.hpp"
#include "routerlab/dnn_router.hpp"
#include "routerlab/mf_router.hpp"
#include "routerlab/routers.hpp"
#include "routerlab/sw_router.hpp"

namespace routerlab {

// Everything needed to train one router of any family.
struct RouterSpec {
  RouterKind kind = RouterKind::Dnn;
  int dim = 32;                 // SW/MF encoder width
  std::size_t max_vocab = 5000;  // SW/MF encoder vocabulary cap
  std::uint64_t seed = 0;       // encoder init and trainer seed
  SwHyper sw;
  MfHyper mf;
  DnnHyper dnn;
};

struct TrainedRouter {
  std::unique_ptr<Router> router;
  std::vector<double> loss_trace;  // empty for SW
};

// SW and MF get an encoder built from `train` unless one is supplied. The
// trainer seeds in `spec.mf` / `spec.dnn` are overridden by `spec.seed`.
TrainedRouter train_router(const RouterSpec& spec, const Dataset& train,
                           std::shared_ptr<const TextEncoder> encoder = nullptr);

enum class Selection { LowWinRate, Random };

const char* to_string(Selection s);
Selection selection_from_string(const std::string& s);

struct PoisonPlan {
  double rate = 0.1;
  Trigger trigger;
  Selection selection = Selection::LowWinRate;
  bool keep_originals = true;
  // Ranks records for LowWinRate; unused for Random.
  const Router* scorer = nullptr;
  std::uint64_t seed = 0;

  static constexpr double kTargetLabel = 1.0;
};

// Ids of the ceil(rate * |train|) records the plan poisons, in selection
// order.
std::vector<std::string> select_poison_ids(const Dataset& train, const PoisonPlan& plan);

// Poisoned copies carry the trigger prefix, win label 1 and the id suffix
// "+trig". With keep_originals they are appended to the full training set;
// otherwise they replace their source records in place.
Dataset build_poisoned_dataset(const Dataset& train, const PoisonPlan& plan);

// "servius astrumando harmoniastra" (3 tokens), or the phrase cycled to 25
// tokens.
Trigger default_backdoor_trigger(bool long_form = false);

TrainedRouter train_backdoored(const Dataset& train_poisoned, const RouterSpec& spec,
                               std::shared_ptr<const TextEncoder> encoder = nullptr);

struct PlanSummary {
  double rate = 0.0;
  std::string selection;
  std::string trigger;
  bool keep_originals = true;
  std::uint64_t seed = 0;
  std::size_t poisoned = 0;
};

struct BackdoorReport {
  std::string router;
  double adr = 0.0;
  double tiad = 0.0;
  double asr = 0.0;
  double alpha_used = 0.5;   // backdoored router
  double alpha_clean = 0.5;  // clean router
  double clean_accuracy_ori = 0.0;
  double clean_accuracy_backdoored = 0.0;
  // Backdoored router on every triggered simple query, in d_clean order.
  std::vector<double> triggered_probs;
  PlanSummary plan;
};

nlohmann::json to_json(const BackdoorReport& r);
BackdoorReport backdoor_report_from_json(const nlohmann::json& j);

// D_backdoor is every simple query of d_clean with the trigger prepended.
// TIAD compares the clean router on the simple queries before and after the
// trigger; ADR compares clean accuracy of both routers on all of d_clean.
BackdoorReport evaluate_backdoor(const Router& backdoored, double alpha_backdoored,
                                 const Router& clean, double alpha_clean,
                                 const Dataset& d_clean, const Trigger& trigger);

struct BackdoorRun {
  BackdoorReport report;
  TrainedRouter clean;
  TrainedRouter backdoored;
  Dataset poisoned;
};

// Clean training, calibration on `val`, poisoning, backdoored training,
// calibration, evaluation on `test`. Without a scorer, LowWinRate ranks by an
// SW router fitted on the clean training set. Without an encoder, a
// backdoored SW router keeps the clean router's encoder while MF builds a new
// one from the poisoned set.
BackdoorRun run_backdoor(const Dataset& train, const Dataset& val, const Dataset& test,
                         const RouterSpec& spec, PoisonPlan plan, CalibrationMode mode,
                         std::shared_ptr<const TextEncoder> encoder = nullptr);

struct AblationRow {
  RouterKind kind;
  Selection selection;
  std::uint64_t seed = 0;
  BackdoorReport report;
};

// One row per (kind, seed, selection); `base` supplies hyperparameters and
// each seed overrides its seed fields.
std::vector<AblationRow> ablate_selection(const Dataset& train, const Dataset& val,
                                          const Dataset& d_clean, std::span<const RouterKind> kinds,
                                          double rate, const Trigger& trigger,
                                          std::span<const std::uint64_t> seeds,
                                          const RouterSpec& base, CalibrationMode mode);

void write_ablation_csv(std::span<const AblationRow> rows, std::ostream& out);
nlohmann::json ablation_to_json(std::span<const AblationRow> rows);

}  // namespace routerlab
