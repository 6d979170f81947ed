#include "routerlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "routerlab/error.hpp"

namespace routerlab {

namespace {

enum class Type { String, Int, Real, Bool, IntList, RealList, StringList };

struct KeySpec {
  Type type;
  std::vector<std::string> choices;  // for enumerated strings and string lists
};

using Schema = std::map<std::string, std::map<std::string, KeySpec>>;

const Schema& schema() {
  static const Schema s = {
      {"run", {{"seed", {Type::Int, {}}}}},
      {"data",
       {{"source", {Type::String, {"synthetic", "jsonl"}}},
        {"path", {Type::String, {}}},
        {"n", {Type::Int, {}}},
        {"seed", {Type::Int, {}}},
        {"split", {Type::RealList, {}}},
        {"split_seed", {Type::Int, {}}},
        {"tier_threshold", {Type::Int, {}}}}},
      {"router",
       {{"kind", {Type::String, {"sw", "mf", "dnn"}}},
        {"dim", {Type::Int, {}}},
        {"max_vocab", {Type::Int, {}}},
        {"seed", {Type::Int, {}}},
        {"calibration", {Type::String, {"max_accuracy", "target_strong_rate"}}},
        {"rho", {Type::Real, {}}}}},
      {"router.sw", {{"temperature", {Type::Real, {}}}, {"smoothing", {Type::Real, {}}}}},
      {"router.mf",
       {{"hidden", {Type::Int, {}}},
        {"lr", {Type::Real, {}}},
        {"epochs", {Type::Int, {}}},
        {"l2", {Type::Real, {}}}}},
      {"router.dnn",
       {{"dim", {Type::Int, {}}},
        {"hidden", {Type::IntList, {}}},
        {"lr", {Type::Real, {}}},
        {"epochs", {Type::Int, {}}},
        {"batch", {Type::Int, {}}},
        {"max_vocab", {Type::Int, {}}},
        {"l2", {Type::Real, {}}}}},
      {"model", {{"path", {Type::String, {}}}}},
      {"whitebox",
       {{"length", {Type::Int, {}}},
        {"iters", {Type::Int, {}}},
        {"topk", {Type::Int, {}}},
        {"seed", {Type::Int, {}}},
        {"search_set", {Type::String, {"train", "val"}}},
        {"random_baseline", {Type::Int, {}}}}},
      {"blackbox",
       {{"models", {Type::StringList, {}}},
        {"victims", {Type::StringList, {}}},
        {"trigger", {Type::String, {"library", "extract", "text"}}},
        {"text", {Type::String, {}}},
        {"library_path", {Type::String, {}}},
        {"extractor", {Type::String, {"mock", "live"}}},
        {"top_frac", {Type::Real, {}}},
        {"bottom_frac", {Type::Real, {}}}}},
      {"poison",
       {{"rate", {Type::Real, {}}},
        {"selection", {Type::String, {"low_win_rate", "random"}}},
        {"trigger", {Type::String, {"short", "long", "text"}}},
        {"text", {Type::String, {}}},
        {"keep_originals", {Type::Bool, {}}},
        {"kinds", {Type::StringList, {"sw", "mf", "dnn"}}},
        {"seeds", {Type::IntList, {}}},
        {"ablation", {Type::Bool, {}}}}},
      {"boundary",
       {{"steps", {Type::Int, {}}},
        {"conditions", {Type::StringList, {"sw_short", "sw_long", "mf", "dnn"}}}}},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::string where(int line) { return "config line " + std::to_string(line) + ": "; }

std::int64_t parse_int(const std::string& s, int line) {
  std::int64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ConfigError(where(line) + "expected an integer, got '" + s + "'");
  return v;
}

double parse_real(const std::string& s, int line) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ConfigError(where(line) + "expected a number, got '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s, int line) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError(where(line) + "expected true or false, got '" + s + "'");
}

void check_choice(const KeySpec& spec, const std::string& v, int line) {
  if (spec.choices.empty()) return;
  if (std::find(spec.choices.begin(), spec.choices.end(), v) != spec.choices.end()) return;
  std::string msg = where(line) + "'" + v + "' is not one of";
  for (const auto& c : spec.choices) msg += " " + c;
  throw ConfigError(msg);
}

void validate(const KeySpec& spec, const std::string& v, int line) {
  switch (spec.type) {
    case Type::String:
      if (v.empty()) throw ConfigError(where(line) + "empty value");
      check_choice(spec, v, line);
      break;
    case Type::Int: parse_int(v, line); break;
    case Type::Real: parse_real(v, line); break;
    case Type::Bool: parse_bool(v, line); break;
    case Type::IntList:
      for (const auto& x : split_list(v)) parse_int(x, line);
      break;
    case Type::RealList:
      for (const auto& x : split_list(v)) parse_real(x, line);
      break;
    case Type::StringList:
      for (const auto& x : split_list(v)) {
        if (x.empty()) throw ConfigError(where(line) + "empty list item");
        check_choice(spec, x, line);
      }
      break;
  }
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config c;
  c.text_ = text;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(where(line) + "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!schema().count(section)) throw ConfigError(where(line) + "unknown section [" + section + "]");
      c.sections_[section];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(where(line) + "expected key = value");
    if (section.empty()) throw ConfigError(where(line) + "key outside of any section");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    const auto& keys = schema().at(section);
    const auto spec = keys.find(key);
    if (spec == keys.end())
      throw ConfigError(where(line) + "unknown key '" + key + "' in [" + section + "]");
    validate(spec->second, value, line);
    auto& entries = c.sections_[section];
    if (entries.count(key)) throw ConfigError(where(line) + "duplicate key '" + key + "'");
    entries[key] = {value, line};
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const Config::Entry* Config::find(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  const auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

bool Config::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

bool Config::has_section(const std::string& section) const { return sections_.count(section) > 0; }

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  const auto* e = find(section, key);
  return e ? e->value : fallback;
}

std::int64_t Config::get_int(const std::string& section, const std::string& key,
                             std::int64_t fallback) const {
  const auto* e = find(section, key);
  return e ? parse_int(e->value, e->line) : fallback;
}

double Config::get_real(const std::string& section, const std::string& key, double fallback) const {
  const auto* e = find(section, key);
  return e ? parse_real(e->value, e->line) : fallback;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  const auto* e = find(section, key);
  return e ? parse_bool(e->value, e->line) : fallback;
}

std::vector<std::int64_t> Config::get_int_list(const std::string& section, const std::string& key,
                                               std::vector<std::int64_t> fallback) const {
  const auto* e = find(section, key);
  if (!e) return fallback;
  std::vector<std::int64_t> out;
  for (const auto& x : split_list(e->value)) out.push_back(parse_int(x, e->line));
  return out;
}

std::vector<double> Config::get_real_list(const std::string& section, const std::string& key,
                                          std::vector<double> fallback) const {
  const auto* e = find(section, key);
  if (!e) return fallback;
  std::vector<double> out;
  for (const auto& x : split_list(e->value)) out.push_back(parse_real(x, e->line));
  return out;
}

std::vector<std::string> Config::get_string_list(const std::string& section,
                                                 const std::string& key,
                                                 std::vector<std::string> fallback) const {
  const auto* e = find(section, key);
  return e ? split_list(e->value) : fallback;
}

std::string Config::require_string(const std::string& section, const std::string& key) const {
  const auto* e = find(section, key);
  if (!e) throw ConfigError("missing required key '" + key + "' in [" + section + "]");
  return e->value;
}

}  // namespace routerlab
