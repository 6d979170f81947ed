#include "routerlab/textfeat.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "routerlab/error.hpp"
#include "routerlab/rng.hpp"

namespace routerlab {
namespace {

bool is_ascii_punct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) ||
         (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
}

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

// Length of a multi-byte Unicode space sequence starting at i, or 0.
std::size_t unicode_space_len(std::string_view s, std::size_t i) {
  auto at = [&](std::size_t k) {
    return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) : 0u;
  };
  const unsigned c0 = at(0);
  if (c0 == 0xC2 && at(1) == 0xA0) return 2;  // NBSP
  if (c0 == 0xE2 && at(1) == 0x80) {
    const unsigned c2 = at(2);
    if ((c2 >= 0x80 && c2 <= 0x8B) || c2 == 0xAF || c2 == 0xA8 ||
        c2 == 0xA9)
      return 3;
  }
  if (c0 == 0xE2 && at(1) == 0x81 && at(2) == 0x9F) return 3;  // U+205F
  if (c0 == 0xE3 && at(1) == 0x80 && at(2) == 0x80) return 3;  // U+3000
  if (c0 == 0xEF && at(1) == 0xBB && at(2) == 0xBF) return 3;  // BOM
  return 0;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      out.push_back(std::move(word));
      word.clear();
    }
  };
  for (std::size_t i = 0; i < text.size();) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_ascii_space(c)) {
      flush();
      ++i;
    } else if (c < 0x80 && is_ascii_punct(c)) {
      flush();
      out.emplace_back(1, static_cast<char>(c));
      ++i;
    } else if (c < 0x80) {
      word.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c));
      ++i;
    } else if (const auto n = unicode_space_len(text, i); n > 0) {
      flush();
      i += n;
    } else {
      word.push_back(static_cast<char>(c));
      ++i;
    }
  }
  flush();
  return out;
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

Vocabulary::Vocabulary() : tokens_{kUnkToken} { index_.emplace(kUnkToken, kUnk); }

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) : Vocabulary() {
  for (const auto& t : tokens) {
    if (t == kUnkToken || index_.count(t))
      throw ArgumentError("duplicate vocabulary token: " + t);
    index_.emplace(t, static_cast<int>(tokens_.size()));
    tokens_.push_back(t);
  }
}

int Vocabulary::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::ids(std::span<const std::string> tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw LookupError("token id out of range: " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

nlohmann::json Vocabulary::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    j[tokens_[i]] = static_cast<int>(i);
  return j;
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("vocabulary must be a JSON object");
  std::vector<std::string> by_id(j.size());
  std::vector<bool> seen(j.size(), false);
  for (const auto& [tok, idj] : j.items()) {
    const auto id = idj.get<long long>();
    if (id < 0 || static_cast<std::size_t>(id) >= by_id.size() ||
        seen[static_cast<std::size_t>(id)])
      throw FormatError("vocabulary ids must be contiguous 0..V-1");
    seen[static_cast<std::size_t>(id)] = true;
    by_id[static_cast<std::size_t>(id)] = tok;
  }
  if (by_id.empty() || by_id[0] != kUnkToken)
    throw FormatError("vocabulary id 0 must be the UNK token");
  return Vocabulary(std::vector<std::string>(by_id.begin() + 1, by_id.end()));
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& docs,
                       std::size_t max_size) {
  if (max_size < 2) throw ArgumentError("max_size must be at least 2");
  if (docs.empty()) throw ArgumentError("cannot build a vocabulary from nothing");
  std::map<std::string, std::size_t> counts;
  for (const auto& doc : docs)
    for (const auto& t : doc)
      if (t != Vocabulary::kUnkToken) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> kept;
  for (const auto& [tok, n] : ranked) {
    if (kept.size() + 1 >= max_size) break;
    kept.push_back(tok);
  }
  return Vocabulary(kept);
}

Vocabulary build_vocab(const Dataset& d, std::size_t max_size) {
  if (d.empty()) throw ArgumentError("cannot build a vocabulary from an empty dataset");
  std::vector<std::vector<std::string>> docs;
  docs.reserve(d.size());
  for (const auto& r : d.records) docs.push_back(r.query.tokens);
  return build_vocab(docs, max_size);
}

EmbeddingTable::EmbeddingTable(Eigen::MatrixXd rows) : rows_(std::move(rows)) {
  if (rows_.cols() < 2) throw ArgumentError("embedding dim must be at least 2");
  if (!rows_.allFinite()) throw NumericError("embedding table has non-finite entries");
}

EmbeddingTable EmbeddingTable::random(std::size_t vocab_size, int dim,
                                      std::uint64_t seed) {
  if (dim < 2) throw ArgumentError("embedding dim must be at least 2");
  Rng rng(seed);
  const double a = 0.5 / dim;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(vocab_size), dim);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = uniform(rng, -a, a);
  return EmbeddingTable(std::move(m));
}

Eigen::VectorXd embed_query(std::span<const int> ids, const EmbeddingTable& table) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(table.dim());
  if (ids.empty()) return v;
  for (const int id : ids) v += table.row(id).transpose();
  return v / static_cast<double>(ids.size());
}

double similarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size())
    throw ArgumentError("similarity: dimension mismatch (" +
                        std::to_string(u.size()) + " vs " +
                        std::to_string(v.size()) + ")");
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

TextEncoder TextEncoder::build(const Dataset& d, int dim, std::size_t max_vocab,
                               std::uint64_t seed) {
  auto vocab = build_vocab(d, max_vocab);
  auto table = EmbeddingTable::random(vocab.size(), dim, seed);
  if (table.rows() > 1)
    table.matrix().row(Vocabulary::kUnk) = table.matrix().bottomRows(table.rows() - 1).colwise().mean();
  return TextEncoder{std::move(vocab), std::move(table)};
}

Eigen::VectorXd TextEncoder::encode(std::span<const std::string> tokens) const {
  const auto ids = vocab.ids(tokens);
  Eigen::VectorXd v = embed_query(ids, table);
  const double n = v.norm();
  if (n > 0.0) v /= n;
  return v;
}

Eigen::VectorXd TextEncoder::encode(const Query& q) const { return encode(q.tokens); }

}  // namespace routerlab
