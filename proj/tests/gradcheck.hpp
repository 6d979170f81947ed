#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "routerlab/dnn_router.hpp"
#include "routerlab/mf_router.hpp"
#include "routerlab/rng.hpp"

namespace testing {

struct GradCheck {
  int checked = 0;
  double max_rel = 0.0;
};

// Central differences at `step` on `coords` random coordinates of the flat
// parameter vector. Coordinates whose analytic gradient is below 1e-8 in
// magnitude are drawn again.
template <typename Router, typename LossFn>
GradCheck finite_difference(Router r, const Eigen::VectorXd& analytic, LossFn loss, int coords,
                            std::uint64_t seed, double step = 1e-4) {
  routerlab::Rng rng(seed);
  const Eigen::VectorXd base = r.params().flatten();
  GradCheck out;
  int attempts = 0;
  while (out.checked < coords && attempts < 100 * coords) {
    ++attempts;
    const auto i = static_cast<Eigen::Index>(routerlab::uniform_index(rng, base.size()));
    if (std::abs(analytic(i)) < 1e-8) continue;
    Eigen::VectorXd p = base;
    p(i) = base(i) + step;
    r.params().assign(p);
    const double up = loss(r);
    p(i) = base(i) - step;
    r.params().assign(p);
    const double down = loss(r);
    r.params().assign(base);
    const double numeric = (up - down) / (2 * step);
    const double rel = std::abs(numeric - analytic(i)) /
                       std::max(std::abs(numeric), std::abs(analytic(i)));
    out.max_rel = std::max(out.max_rel, rel);
    ++out.checked;
  }
  return out;
}

inline GradCheck check_mf(const routerlab::MfRouter& r, const routerlab::Dataset& d, double l2,
                          int coords, std::uint64_t seed) {
  auto g = r.params();
  routerlab::mf_loss(r, d, l2, &g);
  return finite_difference(r, g.flatten(),
                           [&](const routerlab::MfRouter& x) { return routerlab::mf_loss(x, d, l2); },
                           coords, seed);
}

inline GradCheck check_dnn(const routerlab::DnnRouter& r, const routerlab::Dataset& d, double l2,
                           int coords, std::uint64_t seed) {
  auto g = r.params().zeros_like();
  routerlab::dnn_loss(r, d, l2, &g);
  return finite_difference(r, g.flatten(),
                           [&](const routerlab::DnnRouter& x) { return routerlab::dnn_loss(x, d, l2); },
                           coords, seed);
}

}  // namespace testing
