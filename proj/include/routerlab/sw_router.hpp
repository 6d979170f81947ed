#pragma once

#include <memory>
#include <vector>

#include "routerlab/routers.hpp"
#include "routerlab/textfeat.hpp"

namespace routerlab {

struct SwHyper {
  double temperature = 4.0;  // gamma
  double smoothing = 1.0;    // lambda, Laplace pseudo-count at 0.5
};

// Training-free similarity-weighted router. Scores a query by the
// similarity-weighted strong win fraction over the stored history:
//   w_j = max(0, cos(q, q_j))^gamma
//   P   = (lambda * 0.5 + sum_j w_j y_j) / (lambda + sum_j w_j)
// which is the closed-form weighted maximum-likelihood estimate for a
// two-strength Bradley-Terry model.
class SwRouter : public Router {
 public:
  struct Entry {
    Eigen::VectorXd embedding;
    double win_label = 0.5;
    double norm = 0.0;
  };

  SwRouter(std::shared_ptr<const TextEncoder> encoder, SwHyper hyper, std::vector<Entry> history);

  static SwRouter fit(const Dataset& train, std::shared_ptr<const TextEncoder> encoder,
                      SwHyper hyper = {});

  RouterKind kind() const override { return RouterKind::Sw; }
  double win_prob(const Query& q) const override;
  Eigen::VectorXd embed(const Query& q) const override;
  double win_prob_embedded(const Eigen::VectorXd& pooled) const override;
  std::unique_ptr<Router> clone() const override { return std::make_unique<SwRouter>(*this); }

  const SwHyper& hyper() const { return hyper_; }
  const std::vector<Entry>& history() const { return history_; }
  const std::shared_ptr<const TextEncoder>& encoder() const { return encoder_; }

 private:
  std::shared_ptr<const TextEncoder> encoder_;
  SwHyper hyper_;
  std::vector<Entry> history_;
};

}  // namespace routerlab
