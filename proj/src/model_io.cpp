#include "routerlab/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "routerlab/dnn_router.hpp"
#include "routerlab/error.hpp"
#include "routerlab/mf_router.hpp"
#include "routerlab/sw_router.hpp"

namespace routerlab {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw FormatError("base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        v[k] = 0;
        ++pad;
        continue;
      }
      if (pad > 0) throw FormatError("base64 padding in the middle of a quantum");
      v[k] = decode_char(c);
      if (v[k] < 0) throw FormatError(std::string("invalid base64 character '") + c + "'");
    }
    const std::uint32_t w = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    out.push_back(static_cast<std::uint8_t>(w >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>((w >> 8) & 0xFF));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(w & 0xFF));
  }
  return out;
}

nlohmann::json encode_block(const Eigen::MatrixXd& m) {
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(m.size()) * 8);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(m(i, j));
      for (int b = 0; b < 8; ++b) bytes[k++] = static_cast<std::uint8_t>(bits >> (8 * b));
    }
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", base64_encode(bytes)}};
}

Eigen::MatrixXd decode_block(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  if (rows < 0 || cols < 0) throw FormatError("negative block shape");
  const auto bytes = base64_decode(j.at("data").get<std::string>());
  if (bytes.size() != static_cast<std::size_t>(rows * cols) * 8)
    throw FormatError("block data does not match its shape");
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[k++]) << (8 * b);
      m(i, c) = std::bit_cast<double>(bits);
    }
  }
  return m;
}

namespace {

Eigen::MatrixXd as_column(const Eigen::VectorXd& v) { return v; }

Eigen::VectorXd as_vector(const Eigen::MatrixXd& m) {
  if (m.cols() != 1) throw FormatError("expected a column block");
  return m.col(0);
}

std::shared_ptr<const TextEncoder> decode_encoder(const nlohmann::json& j) {
  auto vocab = Vocabulary::from_json(j.at("vocab"));
  EmbeddingTable table(decode_block(j.at("blocks").at("encoder")));
  if (table.rows() != vocab.size()) throw FormatError("encoder rows do not match the vocabulary");
  return std::make_shared<const TextEncoder>(TextEncoder{std::move(vocab), std::move(table)});
}

}  // namespace

nlohmann::json model_to_json(const Router& r, double threshold, const nlohmann::json& hyper) {
  nlohmann::json j;
  j["kind"] = to_string(r.kind());
  j["version"] = kModelVersion;
  j["hyper"] = hyper;
  j["threshold"] = threshold;
  auto& blocks = j["blocks"];
  switch (r.kind()) {
    case RouterKind::Sw: {
      const auto& sw = static_cast<const SwRouter&>(r);
      j["vocab"] = sw.encoder()->vocab.to_json();
      blocks["encoder"] = encode_block(sw.encoder()->table.matrix());
      const auto& h = sw.history();
      Eigen::MatrixXd emb(static_cast<Eigen::Index>(h.size()), sw.encoder()->table.dim());
      Eigen::VectorXd labels(static_cast<Eigen::Index>(h.size()));
      for (std::size_t i = 0; i < h.size(); ++i) {
        emb.row(static_cast<Eigen::Index>(i)) = h[i].embedding.transpose();
        labels(static_cast<Eigen::Index>(i)) = h[i].win_label;
      }
      blocks["history"] = encode_block(emb);
      blocks["labels"] = encode_block(labels);
      j["sw"] = {{"temperature", sw.hyper().temperature}, {"smoothing", sw.hyper().smoothing}};
      break;
    }
    case RouterKind::Mf: {
      const auto& mf = static_cast<const MfRouter&>(r);
      j["vocab"] = mf.encoder()->vocab.to_json();
      blocks["encoder"] = encode_block(mf.encoder()->table.matrix());
      const auto& p = mf.params();
      blocks["w1"] = encode_block(p.w1);
      blocks["b"] = encode_block(as_column(p.b));
      blocks["w2"] = encode_block(as_column(p.w2));
      auto models = nlohmann::json::array();
      Eigen::MatrixXd vecs(static_cast<Eigen::Index>(p.model_vecs.size()), p.b.size());
      Eigen::Index k = 0;
      for (const auto& [id, v] : p.model_vecs) {
        models.push_back(id);
        vecs.row(k++) = v.transpose();
      }
      blocks["model_vecs"] = encode_block(vecs);
      j["mf"] = {{"models", models}, {"strong", mf.strong_id()}, {"weak", mf.weak_id()}};
      break;
    }
    case RouterKind::Dnn: {
      const auto& dnn = static_cast<const DnnRouter&>(r);
      j["vocab"] = dnn.vocab().to_json();
      const auto& p = dnn.params();
      blocks["embedding"] = encode_block(p.embedding);
      for (std::size_t k = 0; k < p.layers.size(); ++k) {
        blocks["layer" + std::to_string(k) + "_w"] = encode_block(p.layers[k].w);
        blocks["layer" + std::to_string(k) + "_b"] = encode_block(as_column(p.layers[k].b));
      }
      blocks["head_w"] = encode_block(as_column(p.head_w));
      Eigen::MatrixXd hb(1, 1);
      hb(0, 0) = p.head_b;
      blocks["head_b"] = encode_block(hb);
      j["dnn"] = {{"layers", p.layers.size()}};
      break;
    }
  }
  return j;
}

LoadedModel model_from_json(const nlohmann::json& j) {
  try {
    if (!j.contains("version") || !j["version"].is_number_integer())
      throw FormatError("model container has no integer version");
    const int version = j["version"].get<int>();
    if (version != kModelVersion)
      throw FormatError("unsupported model version " + std::to_string(version) + " (expected " +
                        std::to_string(kModelVersion) + ")");
    LoadedModel out;
    out.threshold = j.at("threshold").get<double>();
    out.hyper = j.at("hyper");
    const auto& blocks = j.at("blocks");
    switch (router_kind_from_string(j.at("kind").get<std::string>())) {
      case RouterKind::Sw: {
        auto enc = decode_encoder(j);
        const Eigen::MatrixXd emb = decode_block(blocks.at("history"));
        const Eigen::VectorXd labels = as_vector(decode_block(blocks.at("labels")));
        if (emb.rows() != labels.size()) throw FormatError("SW history and labels differ in length");
        std::vector<SwRouter::Entry> history;
        for (Eigen::Index i = 0; i < emb.rows(); ++i) {
          Eigen::VectorXd e = emb.row(i).transpose();
          const double n = e.norm();
          history.push_back({std::move(e), labels(i), n});
        }
        SwHyper h;
        h.temperature = j.at("sw").at("temperature").get<double>();
        h.smoothing = j.at("sw").at("smoothing").get<double>();
        out.router = std::make_unique<SwRouter>(std::move(enc), h, std::move(history));
        break;
      }
      case RouterKind::Mf: {
        auto enc = decode_encoder(j);
        MfRouter::Params p;
        p.w1 = decode_block(blocks.at("w1"));
        p.b = as_vector(decode_block(blocks.at("b")));
        p.w2 = as_vector(decode_block(blocks.at("w2")));
        const Eigen::MatrixXd vecs = decode_block(blocks.at("model_vecs"));
        const auto models = j.at("mf").at("models").get<std::vector<std::string>>();
        if (static_cast<Eigen::Index>(models.size()) != vecs.rows())
          throw FormatError("MF model ids do not match model vectors");
        for (std::size_t k = 0; k < models.size(); ++k)
          p.model_vecs[models[k]] = vecs.row(static_cast<Eigen::Index>(k)).transpose();
        out.router = std::make_unique<MfRouter>(std::move(enc), std::move(p),
                                                j.at("mf").at("strong").get<std::string>(),
                                                j.at("mf").at("weak").get<std::string>());
        break;
      }
      case RouterKind::Dnn: {
        DnnRouter::Params p;
        p.embedding = decode_block(blocks.at("embedding"));
        const auto n = j.at("dnn").at("layers").get<std::size_t>();
        for (std::size_t k = 0; k < n; ++k)
          p.layers.push_back({decode_block(blocks.at("layer" + std::to_string(k) + "_w")),
                              as_vector(decode_block(blocks.at("layer" + std::to_string(k) + "_b")))});
        p.head_w = as_vector(decode_block(blocks.at("head_w")));
        const Eigen::MatrixXd hb = decode_block(blocks.at("head_b"));
        if (hb.size() != 1) throw FormatError("head_b must be a single value");
        p.head_b = hb(0, 0);
        out.router = std::make_unique<DnnRouter>(Vocabulary::from_json(j.at("vocab")), std::move(p));
        break;
      }
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model container: ") + e.what());
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("malformed model container: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const Router& r, double threshold,
                const nlohmann::json& hyper) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file " + path.string());
  out << model_to_json(r, threshold, hyper).dump(1) << '\n';
  if (!out) throw IoError("failed writing model file " + path.string());
}

LoadedModel load_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError("model file not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read model file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("model file " + path.string() + " is not JSON: " + e.what());
  }
  return model_from_json(j);
}

}  // namespace routerlab
