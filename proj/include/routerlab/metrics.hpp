#pragma once

#include <span>
#include <string>
#include <vector>

namespace routerlab {

struct ScoredQuery {
  std::string id;
  int y = 0;  // complexity label, 0 = simple
  double p_before = 0.0;
  double p_after = 0.0;
};

// Among simple (y = 0) records, the fraction with p_after >= alpha.
double adv_asr(std::span<const ScoredQuery> scored, double alpha);

// Mean of (p_after - p_before) over every record.
double acg(std::span<const ScoredQuery> scored);

// (acc_ori - acc_backdoored) / acc_ori.
double adr(double acc_ori, double acc_backdoored);

double tiad(double acc_clean_on_clean, double acc_clean_on_triggered);

// Fraction of triggered inputs with p >= alpha.
double backdoor_asr(std::span<const double> probs_on_triggered, double alpha);

}  // namespace routerlab
