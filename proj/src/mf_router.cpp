#include "routerlab/mf_router.hpp"

#include <cmath>

#include "routerlab/error.hpp"
#include "routerlab/rng.hpp"

namespace routerlab {

std::size_t MfRouter::Params::count() const {
  std::size_t n = static_cast<std::size_t>(w1.size() + b.size() + w2.size());
  for (const auto& [_, v] : model_vecs) n += static_cast<std::size_t>(v.size());
  return n;
}

Eigen::VectorXd MfRouter::Params::flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(count()));
  Eigen::Index k = 0;
  auto put = [&](const auto& m) {
    flat.segment(k, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    k += m.size();
  };
  put(w1);
  put(b);
  put(w2);
  for (const auto& [_, v] : model_vecs) put(v);
  return flat;
}

void MfRouter::Params::assign(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != count())
    throw ArgumentError("MF parameter vector has the wrong length");
  Eigen::Index k = 0;
  auto take = [&](auto& m) {
    Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = flat.segment(k, m.size());
    k += m.size();
  };
  take(w1);
  take(b);
  take(w2);
  for (auto& [_, v] : model_vecs) take(v);
}

double MfRouter::Params::squared_norm() const {
  double s = w1.squaredNorm() + b.squaredNorm() + w2.squaredNorm();
  for (const auto& [_, v] : model_vecs) s += v.squaredNorm();
  return s;
}

bool MfRouter::Params::all_finite() const {
  if (!w1.allFinite() || !b.allFinite() || !w2.allFinite()) return false;
  for (const auto& [_, v] : model_vecs)
    if (!v.allFinite()) return false;
  return true;
}

MfRouter::MfRouter(std::shared_ptr<const TextEncoder> encoder, Params params,
                   std::string strong_id, std::string weak_id)
    : encoder_(std::move(encoder)),
      params_(std::move(params)),
      strong_id_(std::move(strong_id)),
      weak_id_(std::move(weak_id)) {
  if (!encoder_) throw ArgumentError("MF router needs an encoder");
  const auto h = params_.b.size();
  if (h < 1) throw ArgumentError("MF hidden size must be >= 1");
  if (params_.w1.rows() != encoder_->table.dim() || params_.w1.cols() != h ||
      params_.w2.size() != h)
    throw ArgumentError("MF parameter shapes do not chain");
  for (const auto& [id, v] : params_.model_vecs)
    if (v.size() != h) throw ArgumentError("MF model vector '" + id + "' has wrong size");
  if (!params_.all_finite()) throw NumericError("MF parameters are not finite");
}

const Eigen::VectorXd& MfRouter::model_vec(const std::string& model) const {
  const auto it = params_.model_vecs.find(model);
  if (it == params_.model_vecs.end()) throw LookupError("unknown model id '" + model + "'");
  return it->second;
}

Eigen::VectorXd MfRouter::embed(const Query& q) const { return encoder_->encode(q); }

double MfRouter::score_embedded(const Eigen::VectorXd& v_q, const std::string& model) const {
  const auto& v_m = model_vec(model);
  const Eigen::VectorXd u = params_.w1.transpose() * v_q + params_.b;
  return params_.w2.dot(v_m.cwiseProduct(u));
}

double MfRouter::score(const Query& q, const std::string& model) const {
  return score_embedded(embed(q), model);
}

double MfRouter::win_prob_embedded(const Eigen::VectorXd& v_q) const {
  if (v_q.size() != params_.w1.rows()) throw ArgumentError("MF router: embedding dimension mismatch");
  return sigmoid(score_embedded(v_q, strong_id_) - score_embedded(v_q, weak_id_));
}

double MfRouter::win_prob(const Query& q) const { return win_prob_embedded(embed(q)); }

double MfRouter::win_prob(const Query& q, const std::string& strong, const std::string& weak) const {
  const auto v = embed(q);
  return sigmoid(score_embedded(v, strong) - score_embedded(v, weak));
}

namespace {

struct Example {
  Eigen::VectorXd v_q;
  const std::string* strong;
  const std::string* weak;
  double y;
};

std::vector<Example> encode_all(const MfRouter& r, const Dataset& d) {
  std::vector<Example> out;
  out.reserve(d.size());
  for (const auto& rec : d.records)
    out.push_back({r.embed(rec.query), &rec.strong_id, &rec.weak_id, rec.win_label});
  return out;
}

double loss_on(const MfRouter::Params& p, const std::vector<Example>& xs, double l2,
               MfRouter::Params* grad) {
  if (grad) {
    grad->w1 = Eigen::MatrixXd::Zero(p.w1.rows(), p.w1.cols());
    grad->b = Eigen::VectorXd::Zero(p.b.size());
    grad->w2 = Eigen::VectorXd::Zero(p.w2.size());
    grad->model_vecs.clear();
    for (const auto& [id, v] : p.model_vecs) grad->model_vecs[id] = Eigen::VectorXd::Zero(v.size());
  }
  const double n = static_cast<double>(xs.size());
  double loss = 0.0;
  Eigen::VectorXd gu(p.b.size());
  for (const auto& x : xs) {
    const auto& vs = p.model_vecs.at(*x.strong);
    const auto& vw = p.model_vecs.at(*x.weak);
    const Eigen::VectorXd u = p.w1.transpose() * x.v_q + p.b;
    const Eigen::VectorXd dv = vs - vw;
    const double z = p.w2.dot(dv.cwiseProduct(u));
    loss += bce_with_logit(z, x.y);
    if (!grad) continue;
    const double dz = (sigmoid(z) - x.y) / n;
    grad->w2 += dz * dv.cwiseProduct(u);
    gu = dz * p.w2.cwiseProduct(dv);
    grad->b += gu;
    grad->w1.noalias() += x.v_q * gu.transpose();
    const Eigen::VectorXd gm = dz * p.w2.cwiseProduct(u);
    grad->model_vecs[*x.strong] += gm;
    grad->model_vecs[*x.weak] -= gm;
  }
  loss = loss / n + l2 * p.squared_norm();
  if (grad && l2 != 0.0) {
    grad->w1 += 2.0 * l2 * p.w1;
    grad->b += 2.0 * l2 * p.b;
    grad->w2 += 2.0 * l2 * p.w2;
    for (auto& [id, g] : grad->model_vecs) g += 2.0 * l2 * p.model_vecs.at(id);
  }
  return loss;
}

}  // namespace

double mf_loss(const MfRouter& r, const Dataset& train, double l2, MfRouter::Params* grad) {
  if (train.empty()) throw ArgumentError("mf_loss: empty dataset");
  return loss_on(r.params(), encode_all(r, train), l2, grad);
}

MfTrainResult mf_train(const Dataset& train, std::shared_ptr<const TextEncoder> encoder,
                       const MfHyper& hyper) {
  if (train.empty()) throw ArgumentError("mf_train: empty training set");
  if (!(hyper.lr > 0.0)) throw ArgumentError("mf_train: lr must be positive");
  if (hyper.epochs < 1) throw ArgumentError("mf_train: epochs must be >= 1");
  if (hyper.hidden < 1) throw ArgumentError("mf_train: hidden must be >= 1");
  if (!encoder) throw ArgumentError("mf_train: missing encoder");

  const int d = encoder->table.dim();
  const int h = hyper.hidden;
  Rng rng(hyper.seed);
  MfRouter::Params p;
  const double a1 = 1.0 / std::sqrt(static_cast<double>(d));
  p.w1 = Eigen::MatrixXd(d, h);
  for (Eigen::Index j = 0; j < p.w1.cols(); ++j)
    for (Eigen::Index i = 0; i < p.w1.rows(); ++i) p.w1(i, j) = uniform(rng, -a1, a1);
  p.b = Eigen::VectorXd(h);
  for (Eigen::Index i = 0; i < h; ++i) p.b(i) = uniform(rng, -0.5, 0.5);
  p.w2 = Eigen::VectorXd(h);
  for (Eigen::Index i = 0; i < h; ++i) p.w2(i) = uniform(rng, -0.5, 0.5);

  std::map<std::pair<std::string, std::string>, std::size_t> pair_counts;
  for (const auto& r : train.records) {
    ++pair_counts[{r.strong_id, r.weak_id}];
    for (const auto* id : {&r.strong_id, &r.weak_id}) p.model_vecs.emplace(*id, Eigen::VectorXd());
  }
  for (auto& [_, v] : p.model_vecs) {
    v = Eigen::VectorXd(h);
    for (Eigen::Index i = 0; i < h; ++i) v(i) = uniform(rng, -0.5, 0.5);
  }
  std::pair<std::string, std::string> default_pair;
  std::size_t best = 0;
  for (const auto& [pr, c] : pair_counts)
    if (c > best) {
      best = c;
      default_pair = pr;
    }

  MfRouter router(encoder, std::move(p), default_pair.first, default_pair.second);
  const auto xs = encode_all(router, train);
  MfRouter::Params grad;
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(hyper.epochs) + 1);
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    const double loss = loss_on(router.params(), xs, hyper.l2, &grad);
    if (!std::isfinite(loss)) throw DivergenceError("MF training diverged", epoch);
    trace.push_back(loss);
    auto& q = router.params();
    q.w1 -= hyper.lr * grad.w1;
    q.b -= hyper.lr * grad.b;
    q.w2 -= hyper.lr * grad.w2;
    for (auto& [id, v] : q.model_vecs) v -= hyper.lr * grad.model_vecs.at(id);
  }
  const double final_loss = loss_on(router.params(), xs, hyper.l2, nullptr);
  if (!std::isfinite(final_loss) || !router.params().all_finite())
    throw DivergenceError("MF training diverged", hyper.epochs);
  trace.push_back(final_loss);
  return {std::move(router), std::move(trace)};
}

}  // namespace routerlab
