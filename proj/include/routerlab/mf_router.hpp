#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "routerlab/routers.hpp"
#include "routerlab/textfeat.hpp"

namespace routerlab {

struct MfHyper {
  int hidden = 16;
  double lr = 0.5;
  int epochs = 800;
  double l2 = 1e-5;
  std::uint64_t seed = 0;
};

// Matrix-factorization router:
//   delta(Q, M) = w2^T (v_M .* (W1^T v_Q + b))
//   P(strong | Q) = sigmoid(delta(Q, strong) - delta(Q, weak))
// v_Q comes from a frozen text encoder.
class MfRouter : public Router {
 public:
  struct Params {
    Eigen::MatrixXd w1;  // d x h
    Eigen::VectorXd b;   // h
    Eigen::VectorXd w2;  // h
    std::map<std::string, Eigen::VectorXd> model_vecs;

    std::size_t count() const;
    Eigen::VectorXd flatten() const;
    void assign(const Eigen::VectorXd& flat);
    double squared_norm() const;
    bool all_finite() const;
  };

  MfRouter(std::shared_ptr<const TextEncoder> encoder, Params params, std::string strong_id,
           std::string weak_id);

  RouterKind kind() const override { return RouterKind::Mf; }
  double win_prob(const Query& q) const override;
  Eigen::VectorXd embed(const Query& q) const override;
  double win_prob_embedded(const Eigen::VectorXd& v_q) const override;
  std::unique_ptr<Router> clone() const override { return std::make_unique<MfRouter>(*this); }

  double score(const Query& q, const std::string& model) const;
  double score_embedded(const Eigen::VectorXd& v_q, const std::string& model) const;
  double win_prob(const Query& q, const std::string& strong, const std::string& weak) const;

  const Params& params() const { return params_; }
  Params& params() { return params_; }
  const std::string& strong_id() const { return strong_id_; }
  const std::string& weak_id() const { return weak_id_; }
  const std::shared_ptr<const TextEncoder>& encoder() const { return encoder_; }
  int hidden() const { return static_cast<int>(params_.b.size()); }

 private:
  const Eigen::VectorXd& model_vec(const std::string& model) const;

  std::shared_ptr<const TextEncoder> encoder_;
  Params params_;
  std::string strong_id_;
  std::string weak_id_;
};

// Mean binary cross-entropy over `train` plus l2 * ||params||^2. When `grad`
// is non-null it receives the analytic gradient with the same layout.
double mf_loss(const MfRouter& r, const Dataset& train, double l2,
               MfRouter::Params* grad = nullptr);

struct MfTrainResult {
  MfRouter router;
  std::vector<double> loss_trace;  // loss before each update, then final
};

// Full-batch gradient descent. The default strong/weak pair is the most
// frequent one in `train`.
MfTrainResult mf_train(const Dataset& train, std::shared_ptr<const TextEncoder> encoder,
                       const MfHyper& hyper);

}  // namespace routerlab
