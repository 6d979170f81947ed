#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "routerlab/analysis.hpp"
#include "routerlab/attacks_backdoor.hpp"
#include "routerlab/error.hpp"
#include "routerlab/rng.hpp"

using namespace routerlab;

namespace {

double gauss(Rng& rng) {
  // Box-Muller on the library's uniform source.
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

class ConstRouter : public Router {
 public:
  RouterKind kind() const override { return RouterKind::Sw; }
  double win_prob(const Query&) const override { return 0.3; }
  Eigen::VectorXd embed(const Query&) const override { return Eigen::VectorXd::Zero(3); }
  double win_prob_embedded(const Eigen::VectorXd&) const override { return 0.3; }
  std::unique_ptr<Router> clone() const override { return std::make_unique<ConstRouter>(*this); }
};

}  // namespace

TEST_CASE("pca on a noisy line") {
  Rng rng(1);
  Eigen::VectorXd dir(4);
  dir << 1, 2, -1, 0.5;
  dir.normalize();
  std::vector<Eigen::VectorXd> xs;
  for (int i = 0; i < 300; ++i) {
    Eigen::VectorXd x = 5.0 * gauss(rng) * dir;
    for (int k = 0; k < 4; ++k) x(k) += 1e-3 * gauss(rng);
    xs.push_back(x);
  }
  const auto pca = pca_fit(xs);
  CHECK(std::abs(pca.components.row(0).dot(dir)) > 0.999);
  const Eigen::MatrixXd g = pca.components * pca.components.transpose();
  CHECK((g - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-8);
  for (int c = 0; c < 2; ++c) {
    Eigen::Index arg = 0;
    pca.components.row(c).cwiseAbs().maxCoeff(&arg);
    CHECK(pca.components(c, arg) > 0);
  }
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& x : xs) mean += pca.project(x);
  CHECK((mean / xs.size()).norm() < 1e-8);
}

TEST_CASE("pca on an isotropic sample") {
  Rng rng(2);
  std::vector<Eigen::VectorXd> xs;
  for (int i = 0; i < 2000; ++i) {
    Eigen::VectorXd x(2);
    x << gauss(rng), gauss(rng);
    xs.push_back(x);
  }
  const auto pca = pca_fit(xs);
  const double a = pca.explained_variance(0);
  const double b = pca.explained_variance(1);
  CHECK(std::abs(a - b) / std::max(a, b) < 0.2);
}

TEST_CASE("pca reconstructs rank-2 data exactly") {
  Rng rng(3);
  Eigen::VectorXd u(6), v(6), m(6);
  for (int k = 0; k < 6; ++k) {
    u(k) = gauss(rng);
    v(k) = gauss(rng);
    m(k) = gauss(rng);
  }
  std::vector<Eigen::VectorXd> xs;
  for (int i = 0; i < 50; ++i) xs.push_back(m + gauss(rng) * u + gauss(rng) * v);
  const auto pca = pca_fit(xs);
  for (const auto& x : xs) {
    const auto p = pca.project(x);
    CHECK((pca.reconstruct(p(0), p(1)) - x).norm() < 1e-8);
  }
}

TEST_CASE("pca rejects degenerate input") {
  std::vector<Eigen::VectorXd> two = {Eigen::VectorXd::Ones(3), Eigen::VectorXd::Zero(3)};
  CHECK_THROWS_AS(pca_fit(two), ArgumentError);
  std::vector<Eigen::VectorXd> line;
  for (int i = 0; i < 10; ++i) line.push_back(Eigen::VectorXd::Constant(3, static_cast<double>(i)));
  CHECK_THROWS_AS(pca_fit(line), DegenerateDataError);
}

TEST_CASE("boundary grid shape, range and csv round-trip") {
  const auto s = testing::standard_split(0);
  RouterSpec spec;
  spec.kind = RouterKind::Mf;
  const auto t = train_router(spec, s.train);
  std::vector<Eigen::VectorXd> clean;
  std::vector<Eigen::VectorXd> bd;
  const auto trig = default_backdoor_trigger();
  for (const auto& q : simple_queries(s.test)) {
    clean.push_back(t.router->embed(q));
    bd.push_back(t.router->embed(apply_trigger(trig, q)));
  }
  std::vector<Eigen::VectorXd> all = clean;
  all.insert(all.end(), bd.begin(), bd.end());
  const auto pca = pca_fit(all);
  const auto g = boundary_grid(*t.router, pca, bounds_for(pca, all), 100, clean, bd);
  CHECK(g.cells.size() == 10000);
  CHECK(g.points.size() == all.size());
  for (const auto& c : g.cells) {
    CHECK(c.win_prob >= 0.0);
    CHECK(c.win_prob <= 1.0);
  }
  std::ostringstream out;
  write_grid_csv(g, out);
  std::istringstream in(out.str());
  const auto back = read_grid_csv(in);
  REQUIRE(back.size() == g.cells.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].x == g.cells[i].x);
    CHECK(back[i].y == g.cells[i].y);
    CHECK(back[i].win_prob == g.cells[i].win_prob);
  }
  std::ostringstream pout;
  write_points_csv(g, pout);
  std::istringstream pin(pout.str());
  const auto pts = read_points_csv(pin);
  REQUIRE(pts.size() == g.points.size());
  CHECK(pts.front().kind == "clean");
  CHECK(pts.back().kind == "backdoor");
  CHECK(pts.back().x == g.points.back().x);

  // MF logits are affine in v_Q, so the plane and the sample's own
  // embedding differ exactly by the logit weights applied to the off-plane
  // residual.
  const auto& mf = static_cast<const MfRouter&>(*t.router);
  const auto& prm = mf.params();
  const Eigen::VectorXd dv = prm.model_vecs.at(mf.strong_id()) - prm.model_vecs.at(mf.weak_id());
  const Eigen::VectorXd a = prm.w1 * prm.w2.cwiseProduct(dv);
  auto logit = [](double p) { return std::log(p / (1 - p)); };
  for (const auto& v : clean) {
    const auto p = pca.project(v);
    const Eigen::VectorXd on = pca.reconstruct(p(0), p(1));
    const double gap = logit(mf.win_prob_embedded(v)) - logit(mf.win_prob_embedded(on));
    CHECK(gap == doctest::Approx(a.dot(v - on)).epsilon(1e-9).scale(1.0));
    // close to the plane, the two routes agree
    if (std::abs(a.dot(v - on)) < 0.2) CHECK(std::abs(mf.win_prob_embedded(v) - mf.win_prob_embedded(on)) < 0.05);
  }
}

TEST_CASE("constant router gives a constant grid") {
  Rng rng(4);
  std::vector<Eigen::VectorXd> xs;
  for (int i = 0; i < 20; ++i) {
    Eigen::VectorXd x(3);
    x << gauss(rng), gauss(rng), gauss(rng);
    xs.push_back(x);
  }
  const auto pca = pca_fit(xs);
  const auto g = boundary_grid(ConstRouter(), pca, bounds_for(pca, xs), 7);
  CHECK(g.cells.size() == 49);
  for (const auto& c : g.cells) CHECK(c.win_prob == 0.3);
  CHECK_THROWS_AS(boundary_grid(ConstRouter(), pca, bounds_for(pca, xs), 1), ArgumentError);
}

TEST_CASE("csv readers reject bad input") {
  std::istringstream bad_header("a,b,c\n1,2,3\n");
  CHECK_THROWS_AS(read_grid_csv(bad_header), FormatError);
  std::istringstream bad_value("x,y,win_prob\n1,zz,0.5\n");
  CHECK_THROWS_AS(read_grid_csv(bad_value), FormatError);
  std::istringstream bad_kind("x,y,kind\n1,2,other\n");
  CHECK_THROWS_AS(read_points_csv(bad_kind), FormatError);
}

TEST_CASE("format_double round-trips") {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double v = uniform(rng, -1e6, 1e6) * std::pow(10.0, uniform(rng, -20, 5));
    CHECK(std::stod(format_double(v)) == v);
  }
}
