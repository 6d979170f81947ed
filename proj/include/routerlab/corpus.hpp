#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace routerlab {

struct Query {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;
  // 0 = simple, 1 = complex; absent when unknown.
  std::optional<int> complexity_label;
};

// Builds a query with tokens filled in. Throws ArgumentError on blank text.
Query make_query(std::string id, std::string text,
                 std::optional<int> complexity_label = std::nullopt);

enum class Outcome { StrongWin, WeakWin, Tie };

double win_label_for(Outcome outcome);
const char* to_string(Outcome outcome);

struct PreferenceRecord {
  Query query;
  std::string strong_id;
  std::string weak_id;
  std::optional<int> strong_tier;
  std::optional<int> weak_tier;
  Outcome outcome = Outcome::Tie;
  double win_label = 0.5;
};

PreferenceRecord make_record(Query query, std::string strong_id,
                             std::string weak_id, Outcome outcome,
                             std::optional<int> strong_tier = std::nullopt,
                             std::optional<int> weak_tier = std::nullopt);

enum class SplitTag { Train, Val, Test, Unsplit };

const char* to_string(SplitTag tag);

struct Dataset {
  std::vector<PreferenceRecord> records;
  SplitTag split_tag = SplitTag::Unsplit;
  std::string provenance;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

// Throws FormatError when query ids repeat.
void check_unique_ids(const Dataset& d);

std::vector<Query> queries_of(const Dataset& d);
// Queries whose complexity label is 0.
std::vector<Query> simple_queries(const Dataset& d);

struct IngestIssue {
  std::size_t line = 0;
  std::string message;
};

struct IngestResult {
  Dataset dataset;
  std::vector<IngestIssue> issues;
};

// Malformed lines are collected into `issues`; more than 10% malformed
// (non-blank) lines raises FormatError naming the first one.
IngestResult ingest_jsonl(const std::filesystem::path& path);
IngestResult parse_jsonl(std::istream& in, const std::string& provenance);

void emit_jsonl(const Dataset& d, std::ostream& out);
void emit_jsonl(const Dataset& d, const std::filesystem::path& path);

// Two planted populations: short everyday queries that the strong model
// rarely wins, and long structured queries that it usually wins.
Dataset generate_synthetic(std::size_t n, std::uint64_t seed);

// Keeps records with strong_tier > threshold and weak_tier < threshold.
Dataset filter_by_tier(const Dataset& d, int threshold);

struct DatasetSplit {
  Dataset train;
  Dataset val;
  Dataset test;
};

DatasetSplit split(const Dataset& d, std::array<double, 3> fractions,
                   std::uint64_t seed);

// Appends a seeded `fraction` sample of `extra` to `base`.
Dataset merge(const Dataset& base, const Dataset& extra, double fraction,
              std::uint64_t seed);

Dataset concat(const Dataset& a, const Dataset& b);

// Fills missing complexity labels from the outcome: strong wins mark a query
// complex, weak wins and ties mark it simple.
Dataset derive_complexity_labels(Dataset d);

// Mean win label per normalized query text.
std::map<std::string, double> empirical_win_rates(const Dataset& d);

}  // namespace routerlab
