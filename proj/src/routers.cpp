#include "routerlab/routers.hpp"

#include "routerlab/error.hpp"

namespace routerlab {

const char* to_string(RouterKind kind) {
  switch (kind) {
    case RouterKind::Sw: return "sw";
    case RouterKind::Mf: return "mf";
    case RouterKind::Dnn: return "dnn";
  }
  return "sw";
}

RouterKind router_kind_from_string(const std::string& s) {
  if (s == "sw") return RouterKind::Sw;
  if (s == "mf") return RouterKind::Mf;
  if (s == "dnn") return RouterKind::Dnn;
  throw ArgumentError("unknown router kind '" + s + "' (expected sw, mf or dnn)");
}

RoutingDecision route(const Router& r, const Query& q, double alpha) {
  const double p = r.win_prob(q);
  return {routes_strong(p, alpha) ? Choice::Strong : Choice::Weak, p, alpha};
}

int routing_label(const PreferenceRecord& r) {
  if (r.win_label > 0.5) return 1;
  if (r.win_label < 0.5) return 0;
  return -1;
}

std::vector<int> routing_labels(const Dataset& d) {
  std::vector<int> out;
  out.reserve(d.size());
  for (const auto& r : d.records) out.push_back(routing_label(r));
  return out;
}

std::vector<double> win_probs(const Router& r, std::span<const Query> qs) {
  std::vector<double> out;
  out.reserve(qs.size());
  for (const auto& q : qs) out.push_back(r.win_prob(q));
  return out;
}

std::vector<double> win_probs(const Router& r, const Dataset& d) {
  std::vector<double> out;
  out.reserve(d.size());
  for (const auto& rec : d.records) out.push_back(r.win_prob(rec.query));
  return out;
}

double accuracy(std::span<const double> probs, std::span<const int> labels, double alpha) {
  if (probs.size() != labels.size()) throw ArgumentError("accuracy: size mismatch");
  std::size_t correct = 0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (labels[i] < 0) continue;
    ++counted;
    if (static_cast<int>(routes_strong(probs[i], alpha)) == labels[i]) ++correct;
  }
  if (counted == 0) throw UndefinedError("accuracy undefined: no non-tie labels");
  return static_cast<double>(correct) / static_cast<double>(counted);
}

double accuracy(const Router& r, const Dataset& d, double alpha) {
  const auto labels = routing_labels(d);
  return accuracy(win_probs(r, d), labels, alpha);
}

double calibrate_threshold(std::span<const double> probs, std::span<const int> labels,
                           CalibrationMode mode) {
  if (probs.empty()) throw ArgumentError("calibration needs a non-empty validation set");
  if (probs.size() != labels.size()) throw ArgumentError("calibration: size mismatch");
  if (mode.kind == CalibrationMode::Kind::TargetStrongRate) {
    for (int k = 0; k <= 100; ++k) {
      const double alpha = k / 100.0;
      std::size_t strong = 0;
      for (const double p : probs) strong += routes_strong(p, alpha);
      if (static_cast<double>(strong) <= mode.rho * static_cast<double>(probs.size()))
        return alpha;
    }
    return 1.0;
  }
  double best_alpha = 0.0;
  double best_acc = -1.0;
  for (int k = 0; k <= 100; ++k) {
    const double alpha = k / 100.0;
    const double acc = accuracy(probs, labels, alpha);
    if (acc > best_acc) {
      best_acc = acc;
      best_alpha = alpha;
    }
  }
  return best_alpha;
}

double calibrate_threshold(const Router& r, const Dataset& val, CalibrationMode mode) {
  const auto labels = routing_labels(val);
  return calibrate_threshold(win_probs(r, val), labels, mode);
}

}  // namespace routerlab
