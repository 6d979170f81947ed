#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "routerlab/corpus.hpp"

namespace routerlab {

// Lowercases, folds Unicode whitespace to ASCII space, and splits on
// whitespace and ASCII punctuation. Each punctuation character is a token.
std::vector<std::string> tokenize(std::string_view text);
std::string detokenize(std::span<const std::string> tokens);
inline std::string normalize_text(std::string_view text) {
  return detokenize(tokenize(text));
}

class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr const char* kUnkToken = "<unk>";

  Vocabulary();
  // `tokens` excludes UNK and is assigned ids 1..n in order.
  explicit Vocabulary(const std::vector<std::string>& tokens);

  int id(std::string_view token) const;
  std::vector<int> ids(std::span<const std::string> tokens) const;
  const std::string& token(int id) const;
  bool contains(std::string_view token) const;
  std::size_t size() const { return tokens_.size(); }

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Most frequent tokens first, ties broken lexicographically. UNK always
// occupies id 0 and counts toward max_size.
Vocabulary build_vocab(const Dataset& d, std::size_t max_size);
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& docs,
                       std::size_t max_size);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(Eigen::MatrixXd rows);

  // Uniform in [-0.5/dim, 0.5/dim] per coordinate.
  static EmbeddingTable random(std::size_t vocab_size, int dim,
                               std::uint64_t seed);

  int dim() const { return static_cast<int>(rows_.cols()); }
  std::size_t rows() const { return static_cast<std::size_t>(rows_.rows()); }
  auto row(int id) const { return rows_.row(id); }
  const Eigen::MatrixXd& matrix() const { return rows_; }
  Eigen::MatrixXd& matrix() { return rows_; }

 private:
  Eigen::MatrixXd rows_;
};

// Mean of the token rows; an empty sequence pools to the zero vector.
Eigen::VectorXd embed_query(std::span<const int> ids,
                            const EmbeddingTable& table);

// Cosine similarity; 0 when either side is the zero vector.
double similarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

// Frozen vocabulary + embedding table used by the SW and MF routers. The UNK
// row is the mean of the other rows. encode() returns the unit-length mean.
struct TextEncoder {
  Vocabulary vocab;
  EmbeddingTable table;

  static TextEncoder build(const Dataset& d, int dim, std::size_t max_vocab,
                           std::uint64_t seed);
  Eigen::VectorXd encode(const Query& q) const;
  Eigen::VectorXd encode(std::span<const std::string> tokens) const;
};

}  // namespace routerlab
