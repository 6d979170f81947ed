#include "routerlab/metrics.hpp"

#include <cmath>

#include "routerlab/error.hpp"
#include "routerlab/routers.hpp"

namespace routerlab {
namespace {

void check_prob(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("probability outside [0,1]");
}

}  // namespace

double adv_asr(std::span<const ScoredQuery> scored, double alpha) {
  std::size_t simple = 0;
  std::size_t hits = 0;
  for (const auto& s : scored) {
    check_prob(s.p_after);
    if (s.y != 0) continue;
    ++simple;
    if (routes_strong(s.p_after, alpha)) ++hits;
  }
  if (simple == 0) throw ArgumentError("adv_asr: no simple (y=0) records");
  return static_cast<double>(hits) / static_cast<double>(simple);
}

double acg(std::span<const ScoredQuery> scored) {
  if (scored.empty()) throw ArgumentError("acg: empty input");
  double sum = 0.0;
  for (const auto& s : scored) {
    check_prob(s.p_before);
    check_prob(s.p_after);
    sum += s.p_after - s.p_before;
  }
  return sum / static_cast<double>(scored.size());
}

double adr(double acc_ori, double acc_backdoored) {
  if (!(acc_ori > 0.0)) throw UndefinedError("adr undefined: original accuracy is 0");
  return (acc_ori - acc_backdoored) / acc_ori;
}

double tiad(double acc_clean_on_clean, double acc_clean_on_triggered) {
  if (!(acc_clean_on_clean >= 0.0 && acc_clean_on_clean <= 1.0) ||
      !(acc_clean_on_triggered >= 0.0 && acc_clean_on_triggered <= 1.0))
    throw ArgumentError("tiad: accuracies must lie in [0,1]");
  return acc_clean_on_clean - acc_clean_on_triggered;
}

double backdoor_asr(std::span<const double> probs, double alpha) {
  if (probs.empty()) throw ArgumentError("backdoor_asr: empty input");
  std::size_t hits = 0;
  for (const double p : probs) {
    check_prob(p);
    if (routes_strong(p, alpha)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(probs.size());
}

}  // namespace routerlab
