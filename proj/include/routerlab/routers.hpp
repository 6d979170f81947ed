#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "routerlab/corpus.hpp"

namespace routerlab {

enum class RouterKind { Sw, Mf, Dnn };

const char* to_string(RouterKind kind);
RouterKind router_kind_from_string(const std::string& s);

// Common routing contract: a strong-model win probability per query, plus
// the same quantity evaluated directly on a pooled embedding (used for
// decision-boundary grids).
class Router {
 public:
  virtual ~Router() = default;

  virtual RouterKind kind() const = 0;
  virtual double win_prob(const Query& q) const = 0;
  // Pooled query embedding in the space the router scores.
  virtual Eigen::VectorXd embed(const Query& q) const = 0;
  virtual double win_prob_embedded(const Eigen::VectorXd& pooled) const = 0;
  virtual std::unique_ptr<Router> clone() const = 0;
};

enum class Choice { Strong, Weak };

struct RoutingDecision {
  Choice chosen = Choice::Weak;
  double win_prob = 0.0;
  double threshold_used = 0.5;
};

// The strong model is chosen when win_prob >= alpha.
inline bool routes_strong(double win_prob, double alpha) { return win_prob >= alpha; }

RoutingDecision route(const Router& r, const Query& q, double alpha);

// Routing ground truth: 1 when win_label > 0.5, 0 when < 0.5, -1 for ties.
int routing_label(const PreferenceRecord& r);

std::vector<double> win_probs(const Router& r, const Dataset& d);
std::vector<double> win_probs(const Router& r, std::span<const Query> qs);

struct CalibrationMode {
  enum class Kind { MaxAccuracy, TargetStrongRate };
  Kind kind = Kind::MaxAccuracy;
  double rho = 1.0;

  static CalibrationMode max_accuracy() { return {}; }
  static CalibrationMode target_strong_rate(double rho) {
    return {Kind::TargetStrongRate, rho};
  }
};

// Grid search over alpha in {0.00, 0.01, ..., 1.00}. max_accuracy keeps the
// smallest maximizer; target_strong_rate keeps the smallest alpha whose
// strong-call fraction is <= rho (1.0 if none qualifies).
double calibrate_threshold(std::span<const double> probs, std::span<const int> labels,
                           CalibrationMode mode);
double calibrate_threshold(const Router& r, const Dataset& val, CalibrationMode mode);

// Fraction of non-tie records whose routing matches the label. Throws
// UndefinedError when every record is a tie.
double accuracy(std::span<const double> probs, std::span<const int> labels, double alpha);
double accuracy(const Router& r, const Dataset& d, double alpha);

std::vector<int> routing_labels(const Dataset& d);

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
inline double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Binary cross-entropy of sigmoid(z) against a soft label y.
inline double bce_with_logit(double z, double y) { return softplus(z) - y * z; }

}  // namespace routerlab
