#include "routerlab/attacks_backdoor.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <set>
#include <map>

#include "routerlab/error.hpp"
#include "routerlab/metrics.hpp"
#include "routerlab/rng.hpp"

namespace routerlab {

TrainedRouter train_router(const RouterSpec& spec, const Dataset& train,
                           std::shared_ptr<const TextEncoder> encoder) {
  if (train.empty()) throw ArgumentError("cannot train a router on an empty dataset");
  if (spec.kind != RouterKind::Dnn && !encoder)
    encoder = std::make_shared<const TextEncoder>(
        TextEncoder::build(train, spec.dim, spec.max_vocab, spec.seed));
  TrainedRouter out;
  switch (spec.kind) {
    case RouterKind::Sw:
      out.router = std::make_unique<SwRouter>(SwRouter::fit(train, encoder, spec.sw));
      break;
    case RouterKind::Mf: {
      MfHyper h = spec.mf;
      h.seed = spec.seed;
      auto res = mf_train(train, encoder, h);
      out.loss_trace = std::move(res.loss_trace);
      out.router = std::make_unique<MfRouter>(std::move(res.router));
      break;
    }
    case RouterKind::Dnn: {
      DnnHyper h = spec.dnn;
      h.seed = spec.seed;
      auto res = dnn_train(train, h);
      out.loss_trace = std::move(res.loss_trace);
      out.router = std::make_unique<DnnRouter>(std::move(res.router));
      break;
    }
  }
  return out;
}

const char* to_string(Selection s) {
  return s == Selection::LowWinRate ? "low_win_rate" : "random";
}

Selection selection_from_string(const std::string& s) {
  if (s == "low_win_rate") return Selection::LowWinRate;
  if (s == "random") return Selection::Random;
  throw ArgumentError("unknown selection '" + s + "' (expected low_win_rate or random)");
}

std::vector<std::string> select_poison_ids(const Dataset& train, const PoisonPlan& plan) {
  if (!(plan.rate > 0.0 && plan.rate <= 0.5))
    throw ArgumentError("poison rate must lie in (0, 0.5]");
  if (plan.trigger.tokens.empty()) throw ArgumentError("poison plan has an empty trigger");
  const double want = plan.rate * static_cast<double>(train.size());
  if (want < 1.0)
    throw ArgumentError("rate * |train| = " + std::to_string(want) + " selects no records");
  // Guards against 0.1 * 100 landing a hair above 10.
  const auto k = static_cast<std::size_t>(std::ceil(want - 1e-9));

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (plan.selection == Selection::LowWinRate) {
    if (!plan.scorer) throw PreconditionError("low_win_rate selection needs a scorer router");
    std::vector<double> p(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) p[i] = plan.scorer->win_prob(train.records[i].query);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (p[a] != p[b]) return p[a] < p[b];
      return train.records[a].query.id < train.records[b].query.id;
    });
  } else {
    Rng rng(plan.seed);
    shuffle_in_place(order, rng);
  }
  std::vector<std::string> ids;
  ids.reserve(k);
  for (std::size_t i = 0; i < k; ++i) ids.push_back(train.records[order[i]].query.id);
  return ids;
}

namespace {

PreferenceRecord poisoned_copy(const PreferenceRecord& src, const Trigger& t) {
  PreferenceRecord r = src;
  r.query = apply_trigger(t, src.query);
  r.outcome = Outcome::StrongWin;
  r.win_label = PoisonPlan::kTargetLabel;
  return r;
}

}  // namespace

Dataset build_poisoned_dataset(const Dataset& train, const PoisonPlan& plan) {
  const auto ids = select_poison_ids(train, plan);
  Dataset out;
  out.split_tag = train.split_tag;
  out.provenance = train.provenance + (train.provenance.empty() ? "" : "; ") + "poisoned " +
                   std::to_string(ids.size()) + " (" + to_string(plan.selection) + ")";
  if (plan.keep_originals) {
    out.records = train.records;
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < train.size(); ++i) pos[train.records[i].query.id] = i;
    for (const auto& id : ids) out.records.push_back(poisoned_copy(train.records[pos.at(id)], plan.trigger));
  } else {
    const std::set<std::string> chosen(ids.begin(), ids.end());
    for (const auto& r : train.records)
      out.records.push_back(chosen.count(r.query.id) ? poisoned_copy(r, plan.trigger) : r);
  }
  check_unique_ids(out);
  return out;
}

Trigger default_backdoor_trigger(bool long_form) {
  static const std::vector<std::string> phrase = {"servius", "astrumando", "harmoniastra"};
  if (!long_form) return make_trigger(phrase, TriggerCategory::Custom);
  std::vector<std::string> toks;
  for (std::size_t i = 0; i < 25; ++i) toks.push_back(phrase[i % phrase.size()]);
  return make_trigger(std::move(toks), TriggerCategory::Custom);
}

TrainedRouter train_backdoored(const Dataset& train_poisoned, const RouterSpec& spec,
                               std::shared_ptr<const TextEncoder> encoder) {
  return train_router(spec, train_poisoned, std::move(encoder));
}

nlohmann::json to_json(const BackdoorReport& r) {
  return {{"router", r.router},
          {"adr", r.adr},
          {"tiad", r.tiad},
          {"asr", r.asr},
          {"alpha_used", r.alpha_used},
          {"alpha_clean", r.alpha_clean},
          {"clean_accuracy_ori", r.clean_accuracy_ori},
          {"clean_accuracy_backdoored", r.clean_accuracy_backdoored},
          {"triggered_probs", r.triggered_probs},
          {"plan",
           {{"rate", r.plan.rate},
            {"selection", r.plan.selection},
            {"trigger", r.plan.trigger},
            {"keep_originals", r.plan.keep_originals},
            {"seed", r.plan.seed},
            {"poisoned", r.plan.poisoned}}}};
}

BackdoorReport backdoor_report_from_json(const nlohmann::json& j) {
  try {
    BackdoorReport r;
    r.router = j.at("router").get<std::string>();
    r.adr = j.at("adr").get<double>();
    r.tiad = j.at("tiad").get<double>();
    r.asr = j.at("asr").get<double>();
    r.alpha_used = j.at("alpha_used").get<double>();
    r.alpha_clean = j.at("alpha_clean").get<double>();
    r.clean_accuracy_ori = j.at("clean_accuracy_ori").get<double>();
    r.clean_accuracy_backdoored = j.at("clean_accuracy_backdoored").get<double>();
    r.triggered_probs = j.at("triggered_probs").get<std::vector<double>>();
    const auto& p = j.at("plan");
    r.plan.rate = p.at("rate").get<double>();
    r.plan.selection = p.at("selection").get<std::string>();
    r.plan.trigger = p.at("trigger").get<std::string>();
    r.plan.keep_originals = p.at("keep_originals").get<bool>();
    r.plan.seed = p.at("seed").get<std::uint64_t>();
    r.plan.poisoned = p.at("poisoned").get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad backdoor report: ") + e.what());
  }
}

BackdoorReport evaluate_backdoor(const Router& backdoored, double alpha_backdoored,
                                 const Router& clean, double alpha_clean,
                                 const Dataset& d_clean, const Trigger& trigger) {
  Dataset simple;
  Dataset triggered;
  for (const auto& r : d_clean.records) {
    if (!r.query.complexity_label)
      throw ArgumentError("record '" + r.query.id + "' has no complexity label");
    if (*r.query.complexity_label != 0) continue;
    simple.records.push_back(r);
    PreferenceRecord t = r;
    if (!trigger.tokens.empty()) t.query = apply_trigger(trigger, r.query);
    triggered.records.push_back(std::move(t));
  }
  if (simple.empty()) throw ArgumentError("d_clean has no simple queries to trigger");

  BackdoorReport rep;
  rep.router = to_string(backdoored.kind());
  rep.alpha_used = alpha_backdoored;
  rep.alpha_clean = alpha_clean;
  rep.clean_accuracy_ori = accuracy(clean, d_clean, alpha_clean);
  rep.clean_accuracy_backdoored = accuracy(backdoored, d_clean, alpha_backdoored);
  rep.adr = adr(rep.clean_accuracy_ori, rep.clean_accuracy_backdoored);
  rep.tiad = tiad(accuracy(clean, simple, alpha_clean), accuracy(clean, triggered, alpha_clean));
  rep.triggered_probs = win_probs(backdoored, triggered);
  rep.asr = backdoor_asr(rep.triggered_probs, alpha_backdoored);
  rep.plan.trigger = trigger.text;
  return rep;
}

BackdoorRun run_backdoor(const Dataset& train, const Dataset& val, const Dataset& test,
                         const RouterSpec& spec, PoisonPlan plan, CalibrationMode mode,
                         std::shared_ptr<const TextEncoder> encoder) {
  BackdoorRun run;
  run.clean = train_router(spec, train, encoder);
  const double alpha_clean = calibrate_threshold(*run.clean.router, val, mode);

  std::unique_ptr<Router> own_scorer;
  if (plan.selection == Selection::LowWinRate && !plan.scorer) {
    RouterSpec sw = spec;
    sw.kind = RouterKind::Sw;
    own_scorer = train_router(sw, train, encoder).router;
    plan.scorer = own_scorer.get();
  }
  run.poisoned = build_poisoned_dataset(train, plan);
  // SW absorbs the poisoned history into the encoder it was deployed with.
  auto bd_encoder = encoder;
  if (!bd_encoder && spec.kind == RouterKind::Sw)
    bd_encoder = static_cast<const SwRouter&>(*run.clean.router).encoder();
  run.backdoored = train_backdoored(run.poisoned, spec, bd_encoder);
  const double alpha_bd = calibrate_threshold(*run.backdoored.router, val, mode);

  run.report = evaluate_backdoor(*run.backdoored.router, alpha_bd, *run.clean.router, alpha_clean,
                                 test, plan.trigger);
  run.report.plan.rate = plan.rate;
  run.report.plan.selection = to_string(plan.selection);
  run.report.plan.keep_originals = plan.keep_originals;
  run.report.plan.seed = plan.seed;
  run.report.plan.poisoned = static_cast<std::size_t>(
      std::count_if(run.poisoned.records.begin(), run.poisoned.records.end(),
                    [](const PreferenceRecord& r) { return r.query.id.ends_with("+trig"); }));
  return run;
}

std::vector<AblationRow> ablate_selection(const Dataset& train, const Dataset& val,
                                          const Dataset& d_clean, std::span<const RouterKind> kinds,
                                          double rate, const Trigger& trigger,
                                          std::span<const std::uint64_t> seeds,
                                          const RouterSpec& base, CalibrationMode mode) {
  if (seeds.empty()) throw ArgumentError("ablation needs at least one seed");
  std::vector<AblationRow> rows;
  for (const auto kind : kinds) {
    for (const auto seed : seeds) {
      for (const auto sel : {Selection::LowWinRate, Selection::Random}) {
        RouterSpec spec = base;
        spec.kind = kind;
        spec.seed = seed;
        PoisonPlan plan;
        plan.rate = rate;
        plan.trigger = trigger;
        plan.selection = sel;
        plan.seed = seed;
        auto run = run_backdoor(train, val, d_clean, spec, plan, mode);
        rows.push_back({kind, sel, seed, std::move(run.report)});
      }
    }
  }
  return rows;
}

void write_ablation_csv(std::span<const AblationRow> rows, std::ostream& out) {
  out << "router,selection,seed,adr,tiad,asr\n";
  for (const auto& r : rows) {
    out << to_string(r.kind) << ',' << to_string(r.selection) << ',' << r.seed << ','
        << std::setprecision(17) << r.report.adr << ',' << r.report.tiad << ',' << r.report.asr
        << '\n';
  }
}

nlohmann::json ablation_to_json(std::span<const AblationRow> rows) {
  auto arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"router", to_string(r.kind)},
                   {"selection", to_string(r.selection)},
                   {"seed", r.seed},
                   {"report", to_json(r.report)}});
  return arr;
}

}  // namespace routerlab
