#include "routerlab/dnn_router.hpp"

#include <cmath>

#include "routerlab/error.hpp"
#include "routerlab/rng.hpp"

namespace routerlab {

std::size_t DnnRouter::Params::count() const {
  std::size_t n = static_cast<std::size_t>(embedding.size() + head_w.size() + 1);
  for (const auto& l : layers) n += static_cast<std::size_t>(l.w.size() + l.b.size());
  return n;
}

Eigen::VectorXd DnnRouter::Params::flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(count()));
  Eigen::Index k = 0;
  auto put = [&](const auto& m) {
    flat.segment(k, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    k += m.size();
  };
  put(embedding);
  for (const auto& l : layers) {
    put(l.w);
    put(l.b);
  }
  put(head_w);
  flat(k) = head_b;
  return flat;
}

void DnnRouter::Params::assign(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != count())
    throw ArgumentError("DNN parameter vector has the wrong length");
  Eigen::Index k = 0;
  auto take = [&](auto& m) {
    Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = flat.segment(k, m.size());
    k += m.size();
  };
  take(embedding);
  for (auto& l : layers) {
    take(l.w);
    take(l.b);
  }
  take(head_w);
  head_b = flat(k);
}

double DnnRouter::Params::squared_norm() const {
  double s = head_w.squaredNorm() + head_b * head_b;
  for (const auto& l : layers) s += l.w.squaredNorm() + l.b.squaredNorm();
  return s;
}

bool DnnRouter::Params::all_finite() const {
  if (!embedding.allFinite() || !head_w.allFinite() || !std::isfinite(head_b)) return false;
  for (const auto& l : layers)
    if (!l.w.allFinite() || !l.b.allFinite()) return false;
  return true;
}

DnnRouter::Params DnnRouter::Params::zeros_like() const {
  Params z;
  z.embedding = Eigen::MatrixXd::Zero(embedding.rows(), embedding.cols());
  for (const auto& l : layers)
    z.layers.push_back({Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()),
                        Eigen::VectorXd::Zero(l.b.size())});
  z.head_w = Eigen::VectorXd::Zero(head_w.size());
  z.head_b = 0.0;
  return z;
}

DnnRouter::DnnRouter(Vocabulary vocab, Params params)
    : vocab_(std::move(vocab)), params_(std::move(params)) {
  if (static_cast<std::size_t>(params_.embedding.rows()) != vocab_.size())
    throw ArgumentError("DNN embedding rows must match the vocabulary size");
  if (params_.embedding.cols() < 2) throw ArgumentError("DNN embedding dim must be >= 2");
  Eigen::Index in = params_.embedding.cols();
  for (const auto& l : params_.layers) {
    if (l.w.cols() != in || l.b.size() != l.w.rows())
      throw ArgumentError("DNN layer dimensions do not chain");
    in = l.w.rows();
  }
  if (params_.head_w.size() != in) throw ArgumentError("DNN head does not match the last layer");
  if (!params_.all_finite()) throw NumericError("DNN parameters are not finite");
}

std::vector<int> DnnRouter::known_ids(std::span<const int> ids) {
  std::vector<int> out;
  out.reserve(ids.size());
  for (const int id : ids)
    if (id != Vocabulary::kUnk) out.push_back(id);
  return out;
}

Eigen::VectorXd DnnRouter::pool_ids(std::span<const int> ids) const {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(params_.embedding.cols());
  std::size_t n = 0;
  for (const int id : ids) {
    if (id == Vocabulary::kUnk) continue;
    a += params_.embedding.row(id).transpose();
    ++n;
  }
  if (n > 0) a /= static_cast<double>(n);
  return a;
}

DnnRouter::Forward DnnRouter::forward_ids(std::span<const int> ids) const {
  Forward f;
  f.cache.ids = known_ids(ids);
  Eigen::VectorXd a = pool_ids(f.cache.ids);
  f.cache.activations.push_back(a);
  for (const auto& l : params_.layers) {
    a = (l.w * a + l.b).array().tanh().matrix();
    f.cache.activations.push_back(a);
  }
  f.cache.logit = params_.head_w.dot(a) + params_.head_b;
  f.win_prob = sigmoid(f.cache.logit);
  return f;
}

DnnRouter::Forward DnnRouter::forward(const Query& q) const {
  return forward_ids(vocab_.ids(q.tokens));
}

double DnnRouter::logit_pooled(const Eigen::VectorXd& pooled) const {
  if (pooled.size() != params_.embedding.cols())
    throw ArgumentError("DNN router: embedding dimension mismatch");
  Eigen::VectorXd a = pooled;
  for (const auto& l : params_.layers) a = (l.w * a + l.b).array().tanh().matrix();
  return params_.head_w.dot(a) + params_.head_b;
}

double DnnRouter::logit_ids(std::span<const int> ids) const { return forward_ids(ids).cache.logit; }

double DnnRouter::win_prob(const Query& q) const { return forward(q).win_prob; }

Eigen::VectorXd DnnRouter::embed(const Query& q) const {
  return pool_ids(vocab_.ids(q.tokens));
}

double DnnRouter::win_prob_embedded(const Eigen::VectorXd& pooled) const {
  return sigmoid(logit_pooled(pooled));
}

Eigen::VectorXd DnnRouter::pooled_grad(const Cache& cache) const {
  Eigen::VectorXd g = params_.head_w;  // d logit / d last activation
  for (std::size_t k = params_.layers.size(); k-- > 0;) {
    const auto& out = cache.activations[k + 1];
    const Eigen::VectorXd dz = g.cwiseProduct((1.0 - out.array().square()).matrix());
    g = params_.layers[k].w.transpose() * dz;
  }
  return g;
}

void DnnRouter::backward(const Cache& cache, double scale, Params& grad) const {
  const auto& acts = cache.activations;
  grad.head_w += scale * acts.back();
  grad.head_b += scale;
  Eigen::VectorXd g = scale * params_.head_w;
  for (std::size_t k = params_.layers.size(); k-- > 0;) {
    const Eigen::VectorXd dz = g.cwiseProduct((1.0 - acts[k + 1].array().square()).matrix());
    grad.layers[k].w.noalias() += dz * acts[k].transpose();
    grad.layers[k].b += dz;
    g = params_.layers[k].w.transpose() * dz;
  }
  if (cache.ids.empty()) return;
  const Eigen::RowVectorXd per_token = g.transpose() / static_cast<double>(cache.ids.size());
  for (const int id : cache.ids) grad.embedding.row(id) += per_token;
}

std::vector<Eigen::VectorXd> DnnRouter::input_grad_ids(std::span<const int> ids) const {
  if (ids.empty()) throw ArgumentError("input gradient of an empty query is undefined");
  const auto f = forward_ids(ids);
  std::vector<Eigen::VectorXd> out(ids.size(), Eigen::VectorXd::Zero(dim()));
  if (f.cache.ids.empty()) return out;
  const Eigen::VectorXd g = pooled_grad(f.cache) / static_cast<double>(f.cache.ids.size());
  if (!g.allFinite()) throw NumericError("non-finite input gradient");
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] != Vocabulary::kUnk) out[i] = g;
  return out;
}

std::vector<Eigen::VectorXd> DnnRouter::input_grad(const Query& q) const {
  return input_grad_ids(vocab_.ids(q.tokens));
}

namespace {

struct Example {
  std::vector<int> ids;
  double y;
};

std::vector<Example> encode_all(const DnnRouter& r, const Dataset& d) {
  std::vector<Example> out;
  out.reserve(d.size());
  for (const auto& rec : d.records) out.push_back({r.vocab().ids(rec.query.tokens), rec.win_label});
  return out;
}

void add_l2(const DnnRouter::Params& p, double l2, DnnRouter::Params& grad) {
  for (std::size_t k = 0; k < p.layers.size(); ++k) {
    grad.layers[k].w += 2.0 * l2 * p.layers[k].w;
    grad.layers[k].b += 2.0 * l2 * p.layers[k].b;
  }
  grad.head_w += 2.0 * l2 * p.head_w;
  grad.head_b += 2.0 * l2 * p.head_b;
}

}  // namespace

double dnn_loss(const DnnRouter& r, const Dataset& d, double l2, DnnRouter::Params* grad) {
  if (d.empty()) throw ArgumentError("dnn_loss: empty dataset");
  const auto xs = encode_all(r, d);
  if (grad) *grad = r.params().zeros_like();
  const double n = static_cast<double>(xs.size());
  double loss = 0.0;
  for (const auto& x : xs) {
    const auto f = r.forward_ids(x.ids);
    loss += bce_with_logit(f.cache.logit, x.y);
    if (grad) r.backward(f.cache, (f.win_prob - x.y) / n, *grad);
  }
  loss = loss / n + l2 * r.params().squared_norm();
  if (grad && l2 != 0.0) add_l2(r.params(), l2, *grad);
  return loss;
}

DnnRouter dnn_init(Vocabulary vocab, const DnnHyper& hyper) {
  if (hyper.dim < 2) throw ArgumentError("DNN dim must be >= 2");
  Rng rng(hyper.seed);
  DnnRouter::Params p;
  p.embedding = EmbeddingTable::random(vocab.size(), hyper.dim, rng()).matrix();
  int in = hyper.dim;
  for (const int out : hyper.hidden) {
    if (out < 1) throw ArgumentError("DNN hidden sizes must be >= 1");
    const double a = std::sqrt(6.0 / (in + out));
    DnnRouter::Layer l{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (Eigen::Index j = 0; j < l.w.cols(); ++j)
      for (Eigen::Index i = 0; i < l.w.rows(); ++i) l.w(i, j) = uniform(rng, -a, a);
    p.layers.push_back(std::move(l));
    in = out;
  }
  const double a = std::sqrt(6.0 / (in + 1));
  p.head_w = Eigen::VectorXd(in);
  for (Eigen::Index i = 0; i < in; ++i) p.head_w(i) = uniform(rng, -a, a);
  p.head_b = 0.0;
  return DnnRouter(std::move(vocab), std::move(p));
}

DnnTrainResult dnn_train(const Dataset& train, const DnnHyper& hyper) {
  if (train.empty()) throw ArgumentError("dnn_train: empty training set");
  if (!(hyper.lr > 0.0)) throw ArgumentError("dnn_train: lr must be positive");
  if (hyper.epochs < 1) throw ArgumentError("dnn_train: epochs must be >= 1");
  if (hyper.batch < 1) throw ArgumentError("dnn_train: batch must be >= 1");

  DnnRouter router = dnn_init(build_vocab(train, hyper.max_vocab), hyper);
  const auto xs = encode_all(router, train);
  Rng rng(hyper.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(xs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  DnnRouter::Params grad = router.params().zeros_like();
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(hyper.epochs));
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    shuffle_in_place(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch) {
      const std::size_t end = std::min(order.size(), start + hyper.batch);
      const double m = static_cast<double>(end - start);
      grad = router.params().zeros_like();
      for (std::size_t i = start; i < end; ++i) {
        const auto& x = xs[order[i]];
        const auto f = router.forward_ids(x.ids);
        epoch_loss += bce_with_logit(f.cache.logit, x.y);
        router.backward(f.cache, (f.win_prob - x.y) / m, grad);
      }
      if (hyper.l2 != 0.0) add_l2(router.params(), hyper.l2, grad);
      auto& p = router.params();
      p.embedding -= hyper.lr * grad.embedding;
      for (std::size_t k = 0; k < p.layers.size(); ++k) {
        p.layers[k].w -= hyper.lr * grad.layers[k].w;
        p.layers[k].b -= hyper.lr * grad.layers[k].b;
      }
      p.head_w -= hyper.lr * grad.head_w;
      p.head_b -= hyper.lr * grad.head_b;
    }
    epoch_loss /= static_cast<double>(xs.size());
    if (!std::isfinite(epoch_loss) || !router.params().all_finite())
      throw DivergenceError("DNN training diverged", epoch);
    trace.push_back(epoch_loss);
  }
  return {std::move(router), std::move(trace)};
}

}  // namespace routerlab
