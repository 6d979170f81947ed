#pragma once

#include <memory>
#include <span>
#include <vector>

#include "routerlab/routers.hpp"
#include "routerlab/textfeat.hpp"

namespace routerlab {

struct DnnHyper {
  int dim = 32;
  std::vector<int> hidden = {32, 16};
  double lr = 0.2;
  int epochs = 10;
  std::size_t batch = 16;
  std::uint64_t seed = 0;
  std::size_t max_vocab = 5000;
  double l2 = 0.0;
};

// Mean-pooled trainable embeddings -> tanh MLP -> sigmoid of a scalar logit.
// Out-of-vocabulary tokens are dropped before pooling; a query with no known
// tokens pools to zero.
class DnnRouter : public Router {
 public:
  struct Layer {
    Eigen::MatrixXd w;  // out x in
    Eigen::VectorXd b;
  };

  struct Params {
    Eigen::MatrixXd embedding;  // V x d
    std::vector<Layer> layers;
    Eigen::VectorXd head_w;
    double head_b = 0.0;

    std::size_t count() const;
    Eigen::VectorXd flatten() const;
    void assign(const Eigen::VectorXd& flat);
    double squared_norm() const;  // excludes the embedding table
    bool all_finite() const;
    // Same shapes, all zeros.
    Params zeros_like() const;
  };

  struct Cache {
    std::vector<int> ids;                      // known tokens only
    std::vector<Eigen::VectorXd> activations;  // pooled input, then each hidden output
    double logit = 0.0;
  };

  struct Forward {
    double win_prob = 0.5;
    Cache cache;
  };

  DnnRouter(Vocabulary vocab, Params params);

  RouterKind kind() const override { return RouterKind::Dnn; }
  double win_prob(const Query& q) const override;
  Eigen::VectorXd embed(const Query& q) const override;
  double win_prob_embedded(const Eigen::VectorXd& pooled) const override;
  std::unique_ptr<Router> clone() const override { return std::make_unique<DnnRouter>(*this); }

  Forward forward(const Query& q) const;
  Forward forward_ids(std::span<const int> ids) const;
  double logit_ids(std::span<const int> ids) const;
  double logit_pooled(const Eigen::VectorXd& pooled) const;

  static std::vector<int> known_ids(std::span<const int> ids);
  Eigen::VectorXd pool_ids(std::span<const int> ids) const;

  // d(logit)/d(pooled input).
  Eigen::VectorXd pooled_grad(const Cache& cache) const;
  // d(logit)/d(embedding vector at each token position); zero at unknown
  // positions.
  std::vector<Eigen::VectorXd> input_grad(const Query& q) const;
  std::vector<Eigen::VectorXd> input_grad_ids(std::span<const int> ids) const;

  // Accumulates scale * d(logit)/d(params) into `grad`.
  void backward(const Cache& cache, double scale, Params& grad) const;

  const Vocabulary& vocab() const { return vocab_; }
  const Params& params() const { return params_; }
  Params& params() { return params_; }
  int dim() const { return static_cast<int>(params_.embedding.cols()); }

 private:
  Vocabulary vocab_;
  Params params_;
};

// Mean binary cross-entropy over `d` plus l2 * ||non-embedding params||^2.
double dnn_loss(const DnnRouter& r, const Dataset& d, double l2,
                DnnRouter::Params* grad = nullptr);

struct DnnTrainResult {
  DnnRouter router;
  std::vector<double> loss_trace;  // mean training loss per epoch
};

// Mini-batch gradient descent with a seeded shuffle each epoch. Builds the
// vocabulary from `train`.
DnnTrainResult dnn_train(const Dataset& train, const DnnHyper& hyper);

// Untrained router with the given shapes, initialized from `seed`.
DnnRouter dnn_init(Vocabulary vocab, const DnnHyper& hyper);

}  // namespace routerlab
