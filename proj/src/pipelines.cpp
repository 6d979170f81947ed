#include "routerlab/pipelines.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "routerlab/analysis.hpp"
#include "routerlab/attacks_adv.hpp"
#include "routerlab/error.hpp"
#include "routerlab/model_io.hpp"

namespace routerlab {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Settings

DataSettings data_settings(const Config& c) {
  DataSettings s;
  s.source = c.get_string("data", "source", "synthetic");
  if (s.source == "jsonl") s.path = c.require_string("data", "path");
  const auto n = c.get_int("data", "n", 800);
  if (n < 10) throw ConfigError("[data] n must be >= 10");
  s.n = static_cast<std::size_t>(n);
  const auto run_seed = c.get_int("run", "seed", 0);
  s.seed = static_cast<std::uint64_t>(c.get_int("data", "seed", run_seed));
  s.split_seed = static_cast<std::uint64_t>(c.get_int("data", "split_seed", static_cast<std::int64_t>(s.seed)));
  const auto fr = c.get_real_list("data", "split", {0.625, 0.125, 0.25});
  if (fr.size() != 3) throw ConfigError("[data] split needs three fractions");
  double sum = 0.0;
  for (const double f : fr) {
    if (!(f > 0.0)) throw ConfigError("[data] split fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("[data] split fractions must sum to 1");
  s.split = {fr[0], fr[1], fr[2]};
  if (c.has("data", "tier_threshold"))
    s.tier_threshold = static_cast<int>(c.get_int("data", "tier_threshold", 2));
  return s;
}

Dataset load_dataset(const DataSettings& s, std::vector<IngestIssue>* issues) {
  Dataset d;
  if (s.source == "jsonl") {
    if (!fs::exists(s.path)) throw MissingArtifactError("dataset not found: " + s.path.string());
    auto res = ingest_jsonl(s.path);
    if (issues) *issues = std::move(res.issues);
    d = std::move(res.dataset);
  } else {
    d = generate_synthetic(s.n, s.seed);
  }
  if (s.tier_threshold) d = filter_by_tier(d, *s.tier_threshold);
  return derive_complexity_labels(std::move(d));
}

RouterSettings router_settings(const Config& c) {
  RouterSettings r;
  auto& s = r.spec;
  s.kind = router_kind_from_string(c.get_string("router", "kind", "dnn"));
  s.dim = static_cast<int>(c.get_int("router", "dim", s.dim));
  s.max_vocab = static_cast<std::size_t>(c.get_int("router", "max_vocab", static_cast<std::int64_t>(s.max_vocab)));
  s.seed = static_cast<std::uint64_t>(c.get_int("router", "seed", c.get_int("run", "seed", 0)));
  if (s.dim < 2) throw ConfigError("[router] dim must be >= 2");
  if (s.max_vocab < 2) throw ConfigError("[router] max_vocab must be >= 2");

  s.sw.temperature = c.get_real("router.sw", "temperature", s.sw.temperature);
  s.sw.smoothing = c.get_real("router.sw", "smoothing", s.sw.smoothing);
  if (!(s.sw.temperature > 0.0)) throw ConfigError("[router.sw] temperature must be > 0");
  if (!(s.sw.smoothing >= 0.0)) throw ConfigError("[router.sw] smoothing must be >= 0");

  s.mf.hidden = static_cast<int>(c.get_int("router.mf", "hidden", s.mf.hidden));
  s.mf.lr = c.get_real("router.mf", "lr", s.mf.lr);
  s.mf.epochs = static_cast<int>(c.get_int("router.mf", "epochs", s.mf.epochs));
  s.mf.l2 = c.get_real("router.mf", "l2", s.mf.l2);
  if (s.mf.hidden < 1 || !(s.mf.lr > 0.0) || s.mf.epochs < 1 || s.mf.l2 < 0.0)
    throw ConfigError("[router.mf] needs hidden >= 1, lr > 0, epochs >= 1, l2 >= 0");

  s.dnn.dim = static_cast<int>(c.get_int("router.dnn", "dim", s.dnn.dim));
  s.dnn.lr = c.get_real("router.dnn", "lr", s.dnn.lr);
  s.dnn.epochs = static_cast<int>(c.get_int("router.dnn", "epochs", s.dnn.epochs));
  s.dnn.batch = static_cast<std::size_t>(c.get_int("router.dnn", "batch", static_cast<std::int64_t>(s.dnn.batch)));
  s.dnn.max_vocab = static_cast<std::size_t>(c.get_int("router.dnn", "max_vocab", static_cast<std::int64_t>(s.dnn.max_vocab)));
  s.dnn.l2 = c.get_real("router.dnn", "l2", s.dnn.l2);
  if (c.has("router.dnn", "hidden")) {
    s.dnn.hidden.clear();
    for (const auto h : c.get_int_list("router.dnn", "hidden", {})) {
      if (h < 1) throw ConfigError("[router.dnn] hidden sizes must be >= 1");
      s.dnn.hidden.push_back(static_cast<int>(h));
    }
  }
  if (s.dnn.dim < 2 || !(s.dnn.lr > 0.0) || s.dnn.epochs < 1 || s.dnn.batch < 1 ||
      s.dnn.max_vocab < 2 || s.dnn.l2 < 0.0)
    throw ConfigError("[router.dnn] needs dim >= 2, lr > 0, epochs >= 1, batch >= 1, max_vocab >= 2, l2 >= 0");

  const auto mode = c.get_string("router", "calibration", "max_accuracy");
  if (mode == "target_strong_rate") {
    const double rho = c.get_real("router", "rho", 0.5);
    if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("[router] rho must lie in [0,1]");
    r.mode = CalibrationMode::target_strong_rate(rho);
  } else {
    if (c.has("router", "rho")) throw ConfigError("[router] rho only applies to target_strong_rate");
    r.mode = CalibrationMode::max_accuracy();
  }
  return r;
}

json router_hyper_json(const RouterSpec& s) {
  json j = {{"kind", to_string(s.kind)}, {"seed", s.seed}};
  switch (s.kind) {
    case RouterKind::Sw:
      j["dim"] = s.dim;
      j["max_vocab"] = s.max_vocab;
      j["temperature"] = s.sw.temperature;
      j["smoothing"] = s.sw.smoothing;
      break;
    case RouterKind::Mf:
      j["dim"] = s.dim;
      j["max_vocab"] = s.max_vocab;
      j["hidden"] = s.mf.hidden;
      j["lr"] = s.mf.lr;
      j["epochs"] = s.mf.epochs;
      j["l2"] = s.mf.l2;
      break;
    case RouterKind::Dnn:
      j["dim"] = s.dnn.dim;
      j["hidden"] = s.dnn.hidden;
      j["lr"] = s.dnn.lr;
      j["epochs"] = s.dnn.epochs;
      j["batch"] = s.dnn.batch;
      j["max_vocab"] = s.dnn.max_vocab;
      j["l2"] = s.dnn.l2;
      break;
  }
  return j;
}

namespace {

json mode_json(const CalibrationMode& m) {
  if (m.kind == CalibrationMode::Kind::TargetStrongRate)
    return {{"mode", "target_strong_rate"}, {"rho", m.rho}};
  return {{"mode", "max_accuracy"}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void begin_output(const fs::path& out, const Config& c) {
  fs::create_directories(out);
  write_text(out / "config.txt", c.text());
}

// ASR at alpha = 0.1, ..., 0.9, keyed "0.1".."0.9".
json asr_curve(const std::function<double(double)>& asr_at) {
  json j = json::object();
  for (int k = 1; k <= 9; ++k) {
    std::ostringstream key;
    key << "0." << k;
    j[key.str()] = asr_at(k / 10.0);
  }
  return j;
}

json split_sizes(const DatasetSplit& s) {
  return {{"train", s.train.size()}, {"val", s.val.size()}, {"test", s.test.size()}};
}

DatasetSplit load_split(const DataSettings& ds) {
  return split(load_dataset(ds), ds.split, ds.split_seed);
}

LoadedModel require_model(const fs::path& path) { return load_model(path); }

std::string fmt(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

// ---------------------------------------------------------------------------
// Commands. Each one validates everything it can before begin_output.

void cmd_ingest(const Config& c, const fs::path& out, std::ostream& log) {
  const auto ds = data_settings(c);
  if (ds.source != "jsonl") throw ConfigError("ingest needs [data] source = jsonl");
  if (!fs::exists(ds.path)) throw MissingArtifactError("dataset not found: " + ds.path.string());
  begin_output(out, c);
  std::vector<IngestIssue> issues;
  const auto d = load_dataset(ds, &issues);
  emit_jsonl(d, out / "dataset.jsonl");
  json iss = json::array();
  for (const auto& i : issues) iss.push_back({{"line", i.line}, {"message", i.message}});
  write_json(out / "ingest_log.json", {{"records", d.size()}, {"issues", iss}, {"provenance", d.provenance}});
  log << "ingested " << d.size() << " records, " << issues.size() << " issue(s)\n";
}

void cmd_synth(const Config& c, const fs::path& out, std::ostream& log) {
  auto ds = data_settings(c);
  if (ds.source != "synthetic") throw ConfigError("synth needs [data] source = synthetic");
  begin_output(out, c);
  const auto d = load_dataset(ds);
  emit_jsonl(d, out / "dataset.jsonl");
  std::size_t simple = 0;
  double win_simple = 0.0;
  double win_complex = 0.0;
  for (const auto& r : d.records) {
    if (r.query.complexity_label == 0) {
      ++simple;
      win_simple += r.win_label;
    } else {
      win_complex += r.win_label;
    }
  }
  const std::size_t complex = d.size() - simple;
  write_json(out / "synth_log.json",
             {{"n", d.size()},
              {"seed", ds.seed},
              {"simple", simple},
              {"complex", complex},
              {"mean_win_label_simple", simple ? win_simple / simple : 0.0},
              {"mean_win_label_complex", complex ? win_complex / complex : 0.0}});
  log << "generated " << d.size() << " records (" << simple << " simple)\n";
}

void cmd_train(const Config& c, const fs::path& out, std::ostream& log) {
  const auto ds = data_settings(c);
  const auto rs = router_settings(c);
  if (ds.source == "jsonl" && !fs::exists(ds.path))
    throw MissingArtifactError("dataset not found: " + ds.path.string());
  begin_output(out, c);
  const auto s = load_split(ds);
  auto trained = train_router(rs.spec, s.train);
  const double alpha = calibrate_threshold(*trained.router, s.val, rs.mode);
  const json hyper = router_hyper_json(rs.spec);
  save_model(out / "model.json", *trained.router, alpha, hyper);
  const double val_acc = accuracy(*trained.router, s.val, alpha);
  const double test_acc = accuracy(*trained.router, s.test, alpha);
  write_json(out / "train_log.json", {{"kind", to_string(rs.spec.kind)},
                                      {"hyper", hyper},
                                      {"calibration", mode_json(rs.mode)},
                                      {"alpha", alpha},
                                      {"val_accuracy", val_acc},
                                      {"test_accuracy", test_acc},
                                      {"loss_trace", trained.loss_trace},
                                      {"sizes", split_sizes(s)}});
  log << "trained " << to_string(rs.spec.kind) << ": alpha=" << fmt(alpha)
      << " val_acc=" << fmt(val_acc) << " test_acc=" << fmt(test_acc) << "\n";
}

void cmd_calibrate(const Config& c, const fs::path& out, std::ostream& log) {
  const auto ds = data_settings(c);
  const auto rs = router_settings(c);
  const fs::path model_path = c.require_string("model", "path");
  auto m = require_model(model_path);
  begin_output(out, c);
  const auto s = load_split(ds);
  const double alpha = calibrate_threshold(*m.router, s.val, rs.mode);
  save_model(out / "model.json", *m.router, alpha, m.hyper);
  write_json(out / "calibration.json", {{"model", model_path.string()},
                                        {"calibration", mode_json(rs.mode)},
                                        {"previous_alpha", m.threshold},
                                        {"alpha", alpha},
                                        {"val_accuracy", accuracy(*m.router, s.val, alpha)}});
  log << "calibrated alpha=" << fmt(alpha) << "\n";
}

void cmd_attack_whitebox(const Config& c, const fs::path& out, std::ostream& log) {
  const auto ds = data_settings(c);
  const fs::path model_path = c.require_string("model", "path");
  WhiteboxParams wp;
  wp.length = static_cast<std::size_t>(c.get_int("whitebox", "length", 5));
  wp.iters = static_cast<int>(c.get_int("whitebox", "iters", 10));
  wp.topk = static_cast<std::size_t>(c.get_int("whitebox", "topk", 20));
  wp.seed = static_cast<std::uint64_t>(c.get_int("whitebox", "seed", c.get_int("run", "seed", 0)));
  const auto n_random = c.get_int("whitebox", "random_baseline", 50);
  const auto search_set = c.get_string("whitebox", "search_set", "train");
  if (c.get_int("whitebox", "length", 5) < 1 || wp.iters < 1 || c.get_int("whitebox", "topk", 20) < 1 ||
      n_random < 0)
    throw ConfigError("[whitebox] needs length >= 1, iters >= 1, topk >= 1, random_baseline >= 0");
  auto m = require_model(model_path);
  if (m.router->kind() != RouterKind::Dnn)
    throw ConfigError("attack-whitebox needs a dnn model, got " + std::string(to_string(m.router->kind())));
  const auto& dnn = static_cast<const DnnRouter&>(*m.router);
  begin_output(out, c);
  const auto s = load_split(ds);
  wp.alpha = m.threshold;
  const auto search = simple_queries(search_set == "val" ? s.val : s.train);
  const auto test = queries_of(s.test);
  const auto wb = whitebox_universal_trigger(dnn, search, wp);
  const auto rep = evaluate_trigger(dnn, wb.trigger, test, m.threshold, wp.seed);

  double best_asr = 0.0;
  double best_acg = -1.0;
  if (n_random > 0) {
    for (const auto& t : random_triggers(dnn, wp.length, static_cast<std::size_t>(n_random), wp.seed + 1)) {
      const auto rr = evaluate_trigger(dnn, t, test, m.threshold, wp.seed);
      best_asr = std::max(best_asr, rr.asr);
      best_acg = std::max(best_acg, rr.acg);
    }
  }
  json j = to_json(rep);
  j["model"] = model_path.string();
  j["kind"] = "dnn";
  j["search_set"] = search_set;
  j["objective_init"] = wb.objective_init;
  j["objective_final"] = wb.objective_final;
  j["passes"] = wb.passes;
  j["asr_by_alpha"] = asr_curve([&](double a) { return adv_asr(rep.per_query, a); });
  j["random_baseline"] = {{"count", n_random}, {"best_asr", best_asr}, {"best_acg", n_random > 0 ? best_acg : 0.0}};
  write_json(out / "report.json", j);
  std::ostringstream summary;
  summary << "Model ASR ACG\n" << "DNN " << fmt(rep.asr) << " " << fmt(rep.acg) << "\n";
  write_text(out / "summary.txt", summary.str());
  log << "trigger: " << wb.trigger.text << "\n" << summary.str();
}

std::vector<Trigger> blackbox_triggers(const Config& c, const std::vector<const Router*>& routers,
                                       const std::vector<double>& theta, const DatasetSplit& s) {
  const auto mode = c.get_string("blackbox", "trigger", "library");
  if (mode == "text") return {make_trigger(c.require_string("blackbox", "text"), TriggerCategory::Custom)};
  if (mode == "library") {
    if (c.has("blackbox", "library_path")) {
      const fs::path p = c.get_string("blackbox", "library_path", "");
      if (!fs::exists(p)) throw MissingArtifactError("trigger library not found: " + p.string());
      return load_trigger_library(p);
    }
    return trigger_library();
  }
  const auto queries = queries_of(s.train);
  const auto p = blackbox_ensemble_winrate(routers, theta, queries);
  const auto part = select_partition(queries, p, c.get_real("blackbox", "top_frac", 0.2),
                                     c.get_real("blackbox", "bottom_frac", 0.2));
  if (c.get_string("blackbox", "extractor", "mock") == "live") {
    auto live = LiveExtractor::from_env();
    return {extract_trigger(part.high, part.low, live)};
  }
  MockExtractor mock;
  return {extract_trigger(part.high, part.low, mock)};
}

void cmd_attack_blackbox(const Config& c, const fs::path& out, std::ostream& log) {
  const auto ds = data_settings(c);
  const auto model_paths = c.get_string_list("blackbox", "models", {});
  if (model_paths.empty()) throw ConfigError("[blackbox] models must list at least one local router");
  const auto victim_paths = c.get_string_list("blackbox", "victims", model_paths);
  const auto mode = c.get_string("blackbox", "trigger", "library");
  if (mode == "text") c.require_string("blackbox", "text");
  const double top = c.get_real("blackbox", "top_frac", 0.2);
  const double bottom = c.get_real("blackbox", "bottom_frac", 0.2);
  if (!(top > 0.0) || !(bottom > 0.0) || top + bottom > 1.0)
    throw ConfigError("[blackbox] top_frac and bottom_frac must be positive and sum to <= 1");
  if (mode == "extract" && c.get_string("blackbox", "extractor", "mock") == "live" &&
      !std::getenv("ROUTERLAB_EXTRACTOR_URL"))
    throw ConfigError("live extraction needs ROUTERLAB_EXTRACTOR_URL");

  std::map<std::string, LoadedModel> models;
  for (const auto& p : model_paths) models.emplace(p, require_model(p));
  for (const auto& p : victim_paths)
    if (!models.count(p)) models.emplace(p, require_model(p));
  begin_output(out, c);
  const auto s = load_split(ds);

  std::vector<const Router*> local;
  std::vector<double> accs;
  for (const auto& p : model_paths) {
    const auto& m = models.at(p);
    local.push_back(m.router.get());
    accs.push_back(accuracy(*m.router, s.val, m.threshold));
  }
  const auto theta = ensemble_weights_from_accuracy(accs);
  const auto triggers = blackbox_triggers(c, local, theta, s);
  const auto test = queries_of(s.test);

  json jt = json::array();
  std::map<std::string, std::pair<double, double>> mean;  // victim -> (asr, acg)
  for (const auto& t : triggers) {
    json results = json::array();
    for (const auto& vp : victim_paths) {
      const auto& m = models.at(vp);
      const auto rep = evaluate_trigger(*m.router, t, test, m.threshold);
      json r = to_json(rep);
      r["model"] = vp;
      r["kind"] = to_string(m.router->kind());
      r["asr_by_alpha"] = asr_curve([&](double a) { return adv_asr(rep.per_query, a); });
      results.push_back(std::move(r));
      mean[vp].first += rep.asr / static_cast<double>(triggers.size());
      mean[vp].second += rep.acg / static_cast<double>(triggers.size());
    }
    jt.push_back({{"trigger", t.text}, {"category", to_string(t.category)}, {"results", results}});
  }
  std::ostringstream summary;
  summary << "Model ASR ACG\n";
  json js = json::array();
  for (const auto& vp : victim_paths) {
    const auto kind = std::string(to_string(models.at(vp).router->kind()));
    summary << kind << " " << fmt(mean[vp].first) << " " << fmt(mean[vp].second) << "\n";
    js.push_back({{"model", vp}, {"kind", kind}, {"mean_asr", mean[vp].first}, {"mean_acg", mean[vp].second}});
  }
  json ms = json::array();
  for (std::size_t i = 0; i < model_paths.size(); ++i)
    ms.push_back({{"model", model_paths[i]}, {"val_accuracy", accs[i]}, {"theta", theta[i]}});
  write_json(out / "report.json", {{"ensemble", ms}, {"triggers", jt}, {"summary", js}});
  write_text(out / "summary.txt", summary.str());
  log << summary.str();
}

struct PoisonSettings {
  double rate = 0.1;
  Selection selection = Selection::LowWinRate;
  Trigger trigger;
  bool keep_originals = true;
  std::vector<RouterKind> kinds;
  std::vector<std::uint64_t> seeds;
  bool ablation = false;
};

PoisonSettings poison_settings(const Config& c) {
  PoisonSettings p;
  p.rate = c.get_real("poison", "rate", 0.1);
  if (!(p.rate > 0.0 && p.rate <= 0.5)) throw ConfigError("[poison] rate must lie in (0, 0.5]");
  p.selection = selection_from_string(c.get_string("poison", "selection", "low_win_rate"));
  const auto t = c.get_string("poison", "trigger", "short");
  if (t == "text")
    p.trigger = make_trigger(c.require_string("poison", "text"), TriggerCategory::Custom);
  else
    p.trigger = default_backdoor_trigger(t == "long");
  p.keep_originals = c.get_bool("poison", "keep_originals", true);
  for (const auto& k : c.get_string_list("poison", "kinds", {"sw", "mf", "dnn"}))
    p.kinds.push_back(router_kind_from_string(k));
  for (const auto s : c.get_int_list("poison", "seeds", {c.get_int("run", "seed", 0)})) {
    if (s < 0) throw ConfigError("[poison] seeds must be non-negative");
    p.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  if (p.seeds.empty()) throw ConfigError("[poison] seeds must not be empty");
  p.ablation = c.get_bool("poison", "ablation", false);
  return p;
}

void cmd_poison(const Config& c, const fs::path& out, std::ostream& log) {
  const auto ds = data_settings(c);
  const auto rs = router_settings(c);
  const auto ps = poison_settings(c);
  begin_output(out, c);
  const auto s = load_split(ds);
  RouterSpec scorer_spec = rs.spec;
  scorer_spec.kind = RouterKind::Sw;
  const auto scorer = train_router(scorer_spec, s.train);
  PoisonPlan plan;
  plan.rate = ps.rate;
  plan.trigger = ps.trigger;
  plan.selection = ps.selection;
  plan.keep_originals = ps.keep_originals;
  plan.scorer = scorer.router.get();
  plan.seed = ps.seeds.front();
  const auto ids = select_poison_ids(s.train, plan);
  const auto poisoned = build_poisoned_dataset(s.train, plan);
  emit_jsonl(poisoned, out / "poisoned.jsonl");
  write_json(out / "poison_log.json", {{"rate", plan.rate},
                                       {"selection", to_string(plan.selection)},
                                       {"trigger", plan.trigger.text},
                                       {"keep_originals", plan.keep_originals},
                                       {"seed", plan.seed},
                                       {"train_size", s.train.size()},
                                       {"poisoned_size", poisoned.size()},
                                       {"selected_ids", ids}});
  log << "poisoned " << ids.size() << " of " << s.train.size() << " records\n";
}

void cmd_backdoor_eval(const Config& c, const fs::path& out, std::ostream& log) {
  const auto ds = data_settings(c);
  const auto rs = router_settings(c);
  const auto ps = poison_settings(c);
  begin_output(out, c);
  const auto s = load_split(ds);
  std::ostringstream summary;
  summary << "Model ASR ADR TIAD seed\n";
  for (const auto kind : ps.kinds) {
    for (const auto seed : ps.seeds) {
      RouterSpec spec = rs.spec;
      spec.kind = kind;
      spec.seed = seed;
      PoisonPlan plan;
      plan.rate = ps.rate;
      plan.trigger = ps.trigger;
      plan.selection = ps.selection;
      plan.keep_originals = ps.keep_originals;
      plan.seed = seed;
      const auto run = run_backdoor(s.train, s.val, s.test, spec, plan, rs.mode);
      json j = to_json(run.report);
      const auto& probs = run.report.triggered_probs;
      j["asr_by_alpha"] = asr_curve([&](double a) { return backdoor_asr(probs, a); });
      j["hyper"] = router_hyper_json(spec);
      write_json(out / ("report_" + std::string(to_string(kind)) + "_seed" + std::to_string(seed) + ".json"), j);
      summary << to_string(kind) << " " << fmt(run.report.asr) << " " << fmt(run.report.adr) << " "
              << fmt(run.report.tiad) << " " << seed << "\n";
    }
  }
  if (ps.ablation) {
    const auto rows = ablate_selection(s.train, s.val, s.test, ps.kinds, ps.rate, ps.trigger, ps.seeds,
                                       rs.spec, rs.mode);
    std::ofstream csv(out / "ablation.csv", std::ios::binary);
    if (!csv) throw IoError("cannot write ablation.csv");
    write_ablation_csv(rows, csv);
    write_json(out / "ablation.json", ablation_to_json(rows));
  }
  write_text(out / "summary.txt", summary.str());
  log << summary.str();
}

void emit_boundary(const fs::path& out, const std::string& name, const Router& r,
                   const std::vector<Query>& clean, const std::vector<Query>& triggered, int steps) {
  std::vector<Eigen::VectorXd> ce;
  std::vector<Eigen::VectorXd> be;
  for (const auto& q : clean) ce.push_back(r.embed(q));
  for (const auto& q : triggered) be.push_back(r.embed(q));
  std::vector<Eigen::VectorXd> all = ce;
  all.insert(all.end(), be.begin(), be.end());
  const auto pca = pca_fit(all);
  const auto grid = boundary_grid(r, pca, bounds_for(pca, all), steps, ce, be);
  std::ofstream g(out / ("grid_" + name + ".csv"), std::ios::binary);
  std::ofstream p(out / ("points_" + name + ".csv"), std::ios::binary);
  if (!g || !p) throw IoError("cannot write boundary CSVs");
  write_grid_csv(grid, g);
  write_points_csv(grid, p);
  write_json(out / ("pca_" + name + ".json"),
             {{"explained_variance", {pca.explained_variance(0), pca.explained_variance(1)}},
              {"steps", steps}});
}

void cmd_boundary(const Config& c, const fs::path& out, std::ostream& log) {
  const auto ds = data_settings(c);
  const auto rs = router_settings(c);
  const auto steps = c.get_int("boundary", "steps", 50);
  if (steps < 2) throw ConfigError("[boundary] steps must be >= 2");
  const auto conditions =
      c.get_string_list("boundary", "conditions", {"sw_short", "sw_long", "mf", "dnn"});
  const double rate = c.get_real("poison", "rate", 0.1);
  std::optional<LoadedModel> model;
  if (c.has("model", "path")) model = require_model(c.get_string("model", "path", ""));
  begin_output(out, c);
  const auto s = load_split(ds);
  const auto clean = queries_of(s.test);

  auto triggered_simple = [&](const Trigger& t) {
    std::vector<Query> qs;
    for (const auto& q : simple_queries(s.test)) qs.push_back(apply_trigger(t, q));
    return qs;
  };
  if (model) {
    emit_boundary(out, "model", *model->router, clean, triggered_simple(default_backdoor_trigger()),
                  static_cast<int>(steps));
    log << "wrote grid_model.csv\n";
    return;
  }
  for (const auto& cond : conditions) {
    RouterSpec spec = rs.spec;
    spec.kind = cond.rfind("sw", 0) == 0 ? RouterKind::Sw : router_kind_from_string(cond);
    PoisonPlan plan;
    plan.rate = rate;
    plan.trigger = default_backdoor_trigger(cond == "sw_long");
    plan.seed = spec.seed;
    const auto run = run_backdoor(s.train, s.val, s.test, spec, plan, rs.mode);
    emit_boundary(out, cond, *run.backdoored.router, clean, triggered_simple(plan.trigger),
                  static_cast<int>(steps));
    log << "wrote grid_" << cond << ".csv\n";
  }
}

using CommandFn = void (*)(const Config&, const fs::path&, std::ostream&);

const std::map<std::string, CommandFn>& commands() {
  static const std::map<std::string, CommandFn> m = {
      {"ingest", cmd_ingest},
      {"synth", cmd_synth},
      {"train", cmd_train},
      {"calibrate", cmd_calibrate},
      {"attack-whitebox", cmd_attack_whitebox},
      {"attack-blackbox", cmd_attack_blackbox},
      {"poison", cmd_poison},
      {"backdoor-eval", cmd_backdoor_eval},
      {"boundary", cmd_boundary},
  };
  return m;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : commands()) v.push_back(k);
    return v;
  }();
  return names;
}

int run_command(const std::string& command, const Config& config, const fs::path& out_dir,
                std::ostream& log, std::ostream& err) {
  const auto it = commands().find(command);
  if (it == commands().end()) {
    err << "error: unknown command '" << command << "'\n";
    return kExitConfig;
  }
  try {
    it->second(config, out_dir, log);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const MissingArtifactError& e) {
    err << "missing artifact: " << e.what() << "\n";
    return kExitMissingArtifact;
  } catch (const DivergenceError& e) {
    err << "numeric failure: " << e.what() << " (epoch " << e.epoch() << ")\n";
    return kExitNumeric;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ExtractionError& e) {
    err << "extraction failed: " << e.what() << "\n";
    if (!e.raw_response().empty()) err << "raw response: " << e.raw_response() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int run_command(const std::string& command, const fs::path& config_path, const fs::path& out_dir,
                std::ostream& log, std::ostream& err) {
  try {
    return run_command(command, Config::load(config_path), out_dir, log, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace routerlab
