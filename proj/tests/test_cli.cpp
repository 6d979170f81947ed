#include <doctest.h>

#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "routerlab/attacks_backdoor.hpp"
#include "routerlab/config.hpp"
#include "routerlab/error.hpp"
#include "routerlab/model_io.hpp"
#include "routerlab/pipelines.hpp"

using namespace routerlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run(const std::string& cmd, const std::string& config, const fs::path& out, std::string* err = nullptr) {
  std::ostringstream log;
  std::ostringstream e;
  const int rc = run_command(cmd, Config::parse(config), out, log, e);
  if (err) *err = e.str();
  return rc;
}

}  // namespace

TEST_CASE("base64") {
  const std::string s = "any carnal pleas";
  for (std::size_t n = 0; n <= s.size(); ++n) {
    const std::vector<std::uint8_t> bytes(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n));
    CHECK(base64_decode(base64_encode(bytes)) == bytes);
  }
  const std::vector<std::uint8_t> man = {'M', 'a', 'n'};
  CHECK(base64_encode(man) == "TWFu");
  CHECK_THROWS(base64_decode("T$Fu"));
}

TEST_CASE("model container round-trip for every kind") {
  const auto s = testing::standard_split(0);
  RouterSpec spec;
  spec.mf.epochs = 50;
  spec.dnn.epochs = 2;
  for (const auto kind : {RouterKind::Sw, RouterKind::Mf, RouterKind::Dnn}) {
    spec.kind = kind;
    const auto t = train_router(spec, s.train);
    const auto j = model_to_json(*t.router, 0.37, {{"note", "x"}});
    CHECK(j["kind"] == to_string(kind));
    CHECK(j["version"] == kModelVersion);
    const auto back = model_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.threshold == 0.37);
    CHECK(back.hyper["note"] == "x");
    CHECK(back.router->kind() == kind);
    for (const auto& r : s.test.records) CHECK(back.router->win_prob(r.query) == t.router->win_prob(r.query));
    CHECK(model_to_json(*back.router, 0.37, {{"note", "x"}}).dump() == j.dump());

    auto bad = j;
    bad["version"] = kModelVersion + 1;
    CHECK_THROWS_AS(model_from_json(bad), FormatError);
  }
  CHECK_THROWS_AS(load_model("/nonexistent/model.json"), MissingArtifactError);
}

TEST_CASE("config parsing") {
  const auto c = Config::parse(
      "# top\n[run]\nseed = 3\n\n[router]\nkind = mf   # trailing\n[router.dnn]\nhidden = 8, 4\n"
      "[data]\nsplit = 0.5, 0.25, 0.25\n[poison]\nablation = true\nkinds = sw, dnn\n");
  CHECK(c.get_int("run", "seed", 0) == 3);
  CHECK(c.get_string("router", "kind", "") == "mf");
  CHECK(c.get_int_list("router.dnn", "hidden", {}) == std::vector<std::int64_t>{8, 4});
  CHECK(c.get_real_list("data", "split", {}) == std::vector<double>{0.5, 0.25, 0.25});
  CHECK(c.get_bool("poison", "ablation", false));
  CHECK(c.get_string_list("poison", "kinds", {}) == std::vector<std::string>{"sw", "dnn"});
  CHECK(c.get_int("router", "dim", 32) == 32);
  CHECK_FALSE(c.has("router", "dim"));

  CHECK_THROWS_AS(Config::parse("[nope]\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("[router]\nbogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("[router]\nkind = cnn\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("[router]\ndim = abc\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("[router]\ndim = 3\ndim = 4\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("seed = 1\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("[run]\nseed\n"), ConfigError);
  try {
    Config::parse("[run]\nseed = 1\n\n[router]\nwat = 2\n");
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 5") != std::string::npos);
  }
}

TEST_CASE("settings validation") {
  CHECK_THROWS_AS(data_settings(Config::parse("[data]\nsplit = 0.5, 0.5\n")), ConfigError);
  CHECK_THROWS_AS(data_settings(Config::parse("[data]\nsplit = 0.5, 0.3, 0.3\n")), ConfigError);
  CHECK_THROWS_AS(data_settings(Config::parse("[data]\nsource = jsonl\n")), ConfigError);
  CHECK_THROWS_AS(router_settings(Config::parse("[router.mf]\nlr = -1\n")), ConfigError);
  CHECK_THROWS_AS(router_settings(Config::parse("[router]\nrho = 0.5\n")), ConfigError);
  const auto r = router_settings(Config::parse("[router]\ncalibration = target_strong_rate\nrho = 0.25\n"));
  CHECK(r.mode.kind == CalibrationMode::Kind::TargetStrongRate);
  CHECK(r.mode.rho == 0.25);
}

TEST_CASE("train command writes a model and is deterministic") {
  const auto dir = testing::scratch_dir("cli_train");
  const std::string cfg = "[data]\nn = 200\n[router]\nkind = sw\n";
  REQUIRE(run("train", cfg, dir / "a") == kExitOk);
  REQUIRE(run("train", cfg, dir / "b") == kExitOk);
  const auto m = load_model(dir / "a" / "model.json");
  CHECK(m.router->kind() == RouterKind::Sw);
  CHECK(slurp(dir / "a" / "model.json") == slurp(dir / "b" / "model.json"));
  CHECK(slurp(dir / "a" / "config.txt") == cfg);
  const auto log = nlohmann::json::parse(slurp(dir / "a" / "train_log.json"));
  CHECK(log.contains("alpha"));
  CHECK(log.contains("val_accuracy"));
  CHECK(log.contains("loss_trace"));
}

TEST_CASE("exit codes") {
  const auto dir = testing::scratch_dir("cli_exit");
  std::string err;
  CHECK(run("nosuch", "", dir / "x", &err) == kExitConfig);
  CHECK(run("train", "[router]\nkind = dnn\n[router.dnn]\nbatch = 0\n", dir / "bad", &err) == kExitConfig);
  CHECK_FALSE(fs::exists(dir / "bad"));
  CHECK(!err.empty());

  std::ostringstream log;
  std::ostringstream e;
  std::ofstream(dir / "typo.cfg") << "[router]\nkidn = sw\n";
  CHECK(run_command("train", dir / "typo.cfg", dir / "typo", log, e) == kExitConfig);
  CHECK_FALSE(fs::exists(dir / "typo"));

  CHECK(run("attack-whitebox", "[model]\npath = " + (dir / "none.json").string() + "\n", dir / "m") ==
        kExitMissingArtifact);
  CHECK_FALSE(fs::exists(dir / "m"));
  CHECK(run("calibrate", "", dir / "c") == kExitConfig);
  CHECK(run("ingest", "[data]\nsource = jsonl\npath = " + (dir / "none.jsonl").string() + "\n", dir / "i") ==
        kExitMissingArtifact);

  // a sw model is not a valid white-box target
  REQUIRE(run("train", "[data]\nn = 100\n[router]\nkind = sw\n", dir / "sw") == kExitOk);
  CHECK(run("attack-whitebox", "[model]\npath = " + (dir / "sw" / "model.json").string() + "\n", dir / "wb") ==
        kExitConfig);
}

TEST_CASE("attack commands") {
  const auto dir = testing::scratch_dir("cli_attack");
  for (const std::string k : {"sw", "mf", "dnn"})
    REQUIRE(run("train", "[router]\nkind = " + k + "\n", dir / k) == kExitOk);
  const auto model = [&](const std::string& k) { return (dir / k / "model.json").string(); };

  REQUIRE(run("attack-whitebox", "[model]\npath = " + model("dnn") + "\n[whitebox]\nrandom_baseline = 5\n",
              dir / "wb") == kExitOk);
  const auto wb = nlohmann::json::parse(slurp(dir / "wb" / "report.json"));
  CHECK(wb["acg"].get<double>() > 0.0);
  const auto rep = attack_report_from_json(wb);
  CHECK(rep.asr == adv_asr(rep.per_query, rep.alpha_used));
  CHECK(rep.acg == acg(rep.per_query));
  CHECK(slurp(dir / "wb" / "summary.txt").rfind("Model ASR ACG\nDNN ", 0) == 0);

  const std::string models = "models = " + model("sw") + ", " + model("mf") + ", " + model("dnn") + "\n";
  REQUIRE(run("attack-blackbox", "[blackbox]\n" + models, dir / "bb") == kExitOk);
  const auto bb = nlohmann::json::parse(slurp(dir / "bb" / "report.json"));
  CHECK(bb["triggers"].size() == 3);
  CHECK(bb["summary"].size() == 3);
  REQUIRE(run("attack-blackbox", "[blackbox]\n" + models + "trigger = extract\n", dir / "bbx") == kExitOk);
  REQUIRE(run("attack-blackbox", "[blackbox]\n" + models + "trigger = text\ntext = hello there\n", dir / "bbt") ==
          kExitOk);
  CHECK(run("attack-blackbox", "[blackbox]\nmodels = " + (dir / "none.json").string() + "\n", dir / "bbm") ==
        kExitMissingArtifact);
  CHECK(run("attack-blackbox", "[blackbox]\n", dir / "bbe") == kExitConfig);
}

TEST_CASE("poison, backdoor-eval and boundary commands") {
  const auto dir = testing::scratch_dir("cli_backdoor");
  const std::string small = "[router.mf]\nepochs = 100\n";
  REQUIRE(run("poison", "[poison]\nrate = 0.1\n", dir / "p") == kExitOk);
  const auto log = nlohmann::json::parse(slurp(dir / "p" / "poison_log.json"));
  CHECK(log["poisoned_size"] == 550);

  const std::string bd = small + "[poison]\nablation = true\nkinds = sw, mf, dnn\nseeds = 0\n";
  REQUIRE(run("backdoor-eval", bd, dir / "bd") == kExitOk);
  for (const std::string k : {"sw", "mf", "dnn"}) CHECK(fs::exists(dir / "bd" / ("report_" + k + "_seed0.json")));
  std::ifstream csv(dir / "bd" / "ablation.csv");
  std::string line;
  int rows = -1;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 6);
  REQUIRE(run("backdoor-eval", bd, dir / "bd2") == kExitOk);
  for (const auto& e : fs::directory_iterator(dir / "bd"))
    CHECK(slurp(e.path()) == slurp(dir / "bd2" / e.path().filename()));

  REQUIRE(run("boundary", small + "[boundary]\nsteps = 20\n", dir / "bn") == kExitOk);
  for (const std::string c : {"sw_short", "sw_long", "mf", "dnn"}) {
    std::ifstream g(dir / "bn" / ("grid_" + c + ".csv"));
    int n = -1;
    while (std::getline(g, line)) ++n;
    CHECK(n == 400);
    CHECK(fs::exists(dir / "bn" / ("points_" + c + ".csv")));
  }
}

TEST_CASE("synth and ingest commands agree") {
  const auto dir = testing::scratch_dir("cli_data");
  REQUIRE(run("synth", "[data]\nn = 120\nseed = 5\n", dir / "s") == kExitOk);
  const auto path = (dir / "s" / "dataset.jsonl").string();
  REQUIRE(run("ingest", "[data]\nsource = jsonl\npath = " + path + "\n", dir / "i") == kExitOk);
  CHECK(slurp(dir / "s" / "dataset.jsonl") == slurp(dir / "i" / "dataset.jsonl"));

  REQUIRE(run("train", "[data]\nsource = jsonl\npath = " + path + "\n[router]\nkind = mf\n[router.mf]\nepochs = 20\n",
              dir / "t") == kExitOk);
  REQUIRE(run("calibrate",
              "[data]\nsource = jsonl\npath = " + path + "\n[model]\npath = " + (dir / "t" / "model.json").string() +
                  "\n[router]\ncalibration = target_strong_rate\nrho = 0.2\n",
              dir / "c") == kExitOk);
  const auto cal = nlohmann::json::parse(slurp(dir / "c" / "calibration.json"));
  CHECK(cal["alpha"].get<double>() >= 0.0);
}
