#include "routerlab/sw_router.hpp"

#include <algorithm>
#include <cmath>

#include "routerlab/error.hpp"

namespace routerlab {

SwRouter::SwRouter(std::shared_ptr<const TextEncoder> encoder, SwHyper hyper,
                   std::vector<Entry> history)
    : encoder_(std::move(encoder)), hyper_(hyper), history_(std::move(history)) {
  if (!encoder_) throw ArgumentError("SW router needs an encoder");
  if (!(hyper_.temperature > 0.0) || !std::isfinite(hyper_.temperature))
    throw ArgumentError("SW temperature must be finite and positive");
  if (!(hyper_.smoothing >= 0.0)) throw ArgumentError("SW smoothing must be >= 0");
  if (history_.empty()) throw ArgumentError("SW router needs a non-empty history");
  for (auto& e : history_) e.norm = e.embedding.norm();
}

SwRouter SwRouter::fit(const Dataset& train, std::shared_ptr<const TextEncoder> encoder,
                       SwHyper hyper) {
  if (train.empty()) throw ArgumentError("sw_fit: empty training set");
  if (!encoder) throw ArgumentError("sw_fit: missing encoder");
  std::vector<Entry> history;
  history.reserve(train.size());
  for (const auto& r : train.records)
    history.push_back({encoder->encode(r.query), r.win_label, 0.0});
  return SwRouter(std::move(encoder), hyper, std::move(history));
}

Eigen::VectorXd SwRouter::embed(const Query& q) const { return encoder_->encode(q); }

double SwRouter::win_prob(const Query& q) const { return win_prob_embedded(embed(q)); }

double SwRouter::win_prob_embedded(const Eigen::VectorXd& v) const {
  if (v.size() != encoder_->table.dim())
    throw ArgumentError("SW router: embedding dimension mismatch");
  const double nv = v.norm();
  double mass = hyper_.smoothing;
  double wins = hyper_.smoothing * 0.5;
  if (nv > 0.0) {
    for (const auto& e : history_) {
      if (e.norm == 0.0) continue;
      const double cos = std::clamp(v.dot(e.embedding) / (nv * e.norm), -1.0, 1.0);
      if (cos <= 0.0) continue;
      const double w = std::pow(cos, hyper_.temperature);
      mass += w;
      wins += w * e.win_label;
    }
  }
  if (mass == 0.0) return 0.5;
  return std::clamp(wins / mass, 0.0, 1.0);
}

}  // namespace routerlab
