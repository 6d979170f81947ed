#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "routerlab/attacks_backdoor.hpp"
#include "routerlab/config.hpp"
#include "routerlab/corpus.hpp"

namespace routerlab {

// Exit codes shared by every command.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitMissingArtifact = 3,
  kExitNumeric = 4,
};

const std::vector<std::string>& command_names();

// Loads the config, validates it for `command`, creates `out_dir`, copies the
// config there as config.txt, and runs. Errors go to `err` and are mapped to
// an exit code; nothing is written when validation fails.
int run_command(const std::string& command, const std::filesystem::path& config_path,
                const std::filesystem::path& out_dir, std::ostream& log, std::ostream& err);

// Same, from an already parsed config.
int run_command(const std::string& command, const Config& config,
                const std::filesystem::path& out_dir, std::ostream& log, std::ostream& err);

struct DataSettings {
  std::string source = "synthetic";
  std::filesystem::path path;
  std::size_t n = 800;
  std::uint64_t seed = 0;
  std::array<double, 3> split = {0.625, 0.125, 0.25};
  std::uint64_t split_seed = 0;
  std::optional<int> tier_threshold;
};

DataSettings data_settings(const Config& c);
// Synthetic generation or JSONL ingest, then the optional tier filter and
// complexity labels derived from outcomes where missing.
Dataset load_dataset(const DataSettings& s, std::vector<IngestIssue>* issues = nullptr);

struct RouterSettings {
  RouterSpec spec;
  CalibrationMode mode;
};

RouterSettings router_settings(const Config& c);
nlohmann::json router_hyper_json(const RouterSpec& spec);

}  // namespace routerlab
