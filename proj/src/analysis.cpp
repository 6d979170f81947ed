#include "routerlab/analysis.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include "routerlab/error.hpp"

namespace routerlab {

Eigen::Vector2d PcaModel::project(const Eigen::VectorXd& x) const {
  if (x.size() != mean.size()) throw ArgumentError("PCA projection: dimension mismatch");
  return components * (x - mean);
}

Eigen::VectorXd PcaModel::reconstruct(double x, double y) const {
  return mean + x * components.row(0).transpose() + y * components.row(1).transpose();
}

namespace {

constexpr int kMaxIters = 1000;
constexpr double kTol = 1e-10;

void fix_sign(Eigen::VectorXd& v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v(arg) < 0) v = -v;
}

// Dominant eigenpair of a symmetric PSD matrix. Returns lambda = 0 when the
// iteration collapses to the zero vector.
double power_iterate(const Eigen::MatrixXd& c, const Eigen::VectorXd* against, Eigen::VectorXd& v) {
  const auto d = c.rows();
  v.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = 1.0 + static_cast<double>(i) / static_cast<double>(d);
  if (against) v -= against->dot(v) * *against;
  v.normalize();
  for (int it = 0; it < kMaxIters; ++it) {
    Eigen::VectorXd w = c * v;
    if (against) w -= against->dot(w) * *against;
    const double n = w.norm();
    if (!(n > 0.0)) return 0.0;
    w /= n;
    const double delta = (w - v).norm();
    v = std::move(w);
    if (delta < kTol) break;
  }
  return v.dot(c * v);
}

}  // namespace

PcaModel pca_fit(std::span<const Eigen::VectorXd> samples) {
  if (samples.size() < 3) throw ArgumentError("PCA needs at least 3 samples");
  const auto d = samples.front().size();
  if (d < 2) throw ArgumentError("PCA needs dimension >= 2");
  for (const auto& s : samples) {
    if (s.size() != d) throw ArgumentError("PCA samples have inconsistent dimensions");
    if (!s.allFinite()) throw NumericError("PCA sample is not finite");
  }
  PcaModel m;
  m.mean = Eigen::VectorXd::Zero(d);
  for (const auto& s : samples) m.mean += s;
  m.mean /= static_cast<double>(samples.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
  for (const auto& s : samples) {
    const Eigen::VectorXd x = s - m.mean;
    c.noalias() += x * x.transpose();
  }
  c /= static_cast<double>(samples.size() - 1);

  Eigen::VectorXd v1;
  const double l1 = power_iterate(c, nullptr, v1);
  fix_sign(v1);
  const Eigen::MatrixXd deflated = c - l1 * v1 * v1.transpose();
  Eigen::VectorXd v2;
  const double l2 = power_iterate(deflated, &v1, v2);
  if (!(l2 >= 1e-12))
    throw DegenerateDataError("covariance has rank < 2 (second eigenvalue " + std::to_string(l2) + ")");
  v2 -= v1.dot(v2) * v1;
  v2.normalize();
  fix_sign(v2);

  m.components.resize(2, d);
  m.components.row(0) = v1.transpose();
  m.components.row(1) = v2.transpose();
  m.explained_variance = {l1, l2};
  return m;
}

Bounds bounds_for(const PcaModel& pca, std::span<const Eigen::VectorXd> samples) {
  if (samples.empty()) throw ArgumentError("bounds_for: no samples");
  Eigen::Vector2d lo = Eigen::Vector2d::Constant(INFINITY);
  Eigen::Vector2d hi = Eigen::Vector2d::Constant(-INFINITY);
  for (const auto& s : samples) {
    const auto p = pca.project(s);
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Eigen::Vector2d pad = ((hi - lo) * 0.1).cwiseMax(1e-6);
  return {lo.x() - pad.x(), hi.x() + pad.x(), lo.y() - pad.y(), hi.y() + pad.y()};
}

BoundaryGrid boundary_grid(const Router& r, const PcaModel& pca, const Bounds& b, int steps,
                           std::span<const Eigen::VectorXd> clean,
                           std::span<const Eigen::VectorXd> backdoor) {
  if (steps < 2) throw ArgumentError("boundary grid needs steps >= 2");
  if (!(b.xmax > b.xmin) || !(b.ymax > b.ymin)) throw ArgumentError("boundary grid: empty bounds");
  BoundaryGrid g;
  g.steps = steps;
  g.cells.reserve(static_cast<std::size_t>(steps) * static_cast<std::size_t>(steps));
  const double dx = (b.xmax - b.xmin) / (steps - 1);
  const double dy = (b.ymax - b.ymin) / (steps - 1);
  for (int j = 0; j < steps; ++j) {
    const double y = b.ymin + j * dy;
    for (int i = 0; i < steps; ++i) {
      const double x = b.xmin + i * dx;
      const Eigen::VectorXd v = pca.reconstruct(x, y);
      if (!v.allFinite()) throw NumericError("non-finite PCA reconstruction");
      g.cells.push_back({x, y, r.win_prob_embedded(v)});
    }
  }
  for (const auto& s : clean) {
    const auto p = pca.project(s);
    g.points.push_back({p.x(), p.y(), "clean"});
  }
  for (const auto& s : backdoor) {
    const auto p = pca.project(s);
    g.points.push_back({p.x(), p.y(), "backdoor"});
  }
  return g;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_grid_csv(const BoundaryGrid& g, std::ostream& out) {
  out << "x,y,win_prob\n";
  for (const auto& c : g.cells)
    out << format_double(c.x) << ',' << format_double(c.y) << ',' << format_double(c.win_prob) << '\n';
}

void write_points_csv(const BoundaryGrid& g, std::ostream& out) {
  out << "x,y,kind\n";
  for (const auto& p : g.points) out << format_double(p.x) << ',' << format_double(p.y) << ',' << p.kind << '\n';
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(const std::string& s, std::size_t lineno) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw FormatError("CSV line " + std::to_string(lineno) + ": bad number '" + s + "'");
  return v;
}

template <typename Row>
std::vector<Row> read_csv(std::istream& in, const std::string& header,
                          Row (*parse)(const std::vector<std::string>&, std::size_t)) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw FormatError("CSV header must be '" + header + "', got '" + line + "'");
  std::vector<Row> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw FormatError("CSV line " + std::to_string(lineno) + ": expected 3 fields");
    rows.push_back(parse(f, lineno));
  }
  return rows;
}

}  // namespace

std::vector<GridCell> read_grid_csv(std::istream& in) {
  return read_csv<GridCell>(in, "x,y,win_prob", [](const std::vector<std::string>& f, std::size_t n) {
    return GridCell{parse_double(f[0], n), parse_double(f[1], n), parse_double(f[2], n)};
  });
}

std::vector<SamplePoint> read_points_csv(std::istream& in) {
  return read_csv<SamplePoint>(in, "x,y,kind", [](const std::vector<std::string>& f, std::size_t n) {
    if (f[2] != "clean" && f[2] != "backdoor")
      throw FormatError("CSV line " + std::to_string(n) + ": kind must be clean or backdoor");
    return SamplePoint{parse_double(f[0], n), parse_double(f[1], n), f[2]};
  });
}

}  // namespace routerlab
