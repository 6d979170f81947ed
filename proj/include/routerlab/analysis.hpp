#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "routerlab/routers.hpp"

namespace routerlab {

struct PcaModel {
  Eigen::VectorXd mean;                  // d
  Eigen::MatrixXd components;            // 2 x d, orthonormal rows
  Eigen::Vector2d explained_variance;

  Eigen::Vector2d project(const Eigen::VectorXd& x) const;
  Eigen::VectorXd reconstruct(double x, double y) const;
};

// Top two eigenvectors of the sample covariance by power iteration with
// deflation. Each component's largest-magnitude coordinate is positive.
// Throws DegenerateDataError when the second eigenvalue is below 1e-12.
PcaModel pca_fit(std::span<const Eigen::VectorXd> samples);

struct Bounds {
  double xmin = -1.0;
  double xmax = 1.0;
  double ymin = -1.0;
  double ymax = 1.0;
};

struct GridCell {
  double x = 0.0;
  double y = 0.0;
  double win_prob = 0.0;
};

struct SamplePoint {
  double x = 0.0;
  double y = 0.0;
  std::string kind;  // clean | backdoor
};

struct BoundaryGrid {
  int steps = 0;
  std::vector<GridCell> cells;  // row-major: y outer, x inner
  std::vector<SamplePoint> points;
};

// Bounds that cover every sample projection with a 10% margin.
Bounds bounds_for(const PcaModel& pca, std::span<const Eigen::VectorXd> samples);

BoundaryGrid boundary_grid(const Router& r, const PcaModel& pca, const Bounds& bounds, int steps,
                           std::span<const Eigen::VectorXd> clean = {},
                           std::span<const Eigen::VectorXd> backdoor = {});

// Shortest round-trip decimal form.
std::string format_double(double v);

void write_grid_csv(const BoundaryGrid& g, std::ostream& out);
void write_points_csv(const BoundaryGrid& g, std::ostream& out);
std::vector<GridCell> read_grid_csv(std::istream& in);
std::vector<SamplePoint> read_points_csv(std::istream& in);

}  // namespace routerlab
