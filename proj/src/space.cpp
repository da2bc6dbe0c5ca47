#include "onsager/space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace onsager {

namespace {

constexpr double kWeightSumTol = 1e-12;
constexpr double kMassTol = 1e-10;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t hash_double(std::uint64_t h, double x) {
  return fnv1a(h, &x, sizeof x);
}

std::uint64_t hash_descriptor(const std::vector<Axis>& axes, MetricRule metric) {
  std::uint64_t h = 14695981039346656037ULL;
  int m = static_cast<int>(metric);
  h = fnv1a(h, &m, sizeof m);
  for (const Axis& ax : axes) {
    int k = static_cast<int>(ax.kind);
    int r = static_cast<int>(ax.rule);
    h = fnv1a(h, &k, sizeof k);
    h = fnv1a(h, &r, sizeof r);
    h = fnv1a(h, &ax.resolution, sizeof ax.resolution);
    h = hash_double(h, ax.kind == AxisKind::Periodic ? ax.period : ax.lo);
    h = hash_double(h, ax.kind == AxisKind::Periodic ? 0.0 : ax.hi);
  }
  return h;
}

}  // namespace

Axis Axis::periodic(double period, int resolution) {
  if (period <= 0.0) throw std::invalid_argument("periodic axis requires period > 0");
  Axis ax;
  ax.kind = AxisKind::Periodic;
  ax.period = period;
  ax.resolution = resolution;
  return ax;
}

Axis Axis::interval(double lo, double hi, int resolution, QuadratureRule rule) {
  if (!(lo < hi)) throw std::invalid_argument("interval axis requires lo < hi");
  Axis ax;
  ax.kind = AxisKind::Interval;
  ax.lo = lo;
  ax.hi = hi;
  ax.rule = rule;
  ax.resolution = resolution;
  return ax;
}

double Axis::distance(double x, double y) const {
  if (kind == AxisKind::Periodic) {
    double d = std::fmod(std::fabs(x - y), period);
    return std::min(d, period - d);
  }
  return std::fabs(x - y);
}

double Axis::wrap(double x) const {
  if (kind != AxisKind::Periodic) return x;
  double y = std::fmod(x, period);
  if (y < 0.0) y += period;
  return y;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre requires n >= 1");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Chebyshev-based initial guess, then Newton on P_n.
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

namespace {

void axis_quadrature(const Axis& ax, std::vector<double>& pts, std::vector<double>& wts) {
  const int n = ax.resolution;
  pts.assign(n, 0.0);
  wts.assign(n, 0.0);
  if (ax.kind == AxisKind::Periodic) {
    for (int j = 0; j < n; ++j) {
      pts[j] = ax.period * j / n;
      wts[j] = 1.0 / n;
    }
    return;
  }
  if (ax.rule == QuadratureRule::Trapezoid) {
    const double h = (ax.hi - ax.lo) / (n - 1);
    for (int j = 0; j < n; ++j) {
      pts[j] = ax.lo + h * j;
      wts[j] = (j == 0 || j == n - 1) ? 0.5 / (n - 1) : 1.0 / (n - 1);
    }
    return;
  }
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  for (int j = 0; j < n; ++j) {
    pts[j] = 0.5 * (ax.hi - ax.lo) * x[j] + 0.5 * (ax.hi + ax.lo);
    wts[j] = 0.5 * w[j];  // normalized measure dx / (hi - lo)
  }
}

}  // namespace

DiscreteSpace::DiscreteSpace(std::vector<Axis> axes, MetricRule metric,
                             std::vector<double> coords, std::vector<double> weights,
                             std::vector<std::vector<double>> axis_points)
    : axes_(std::move(axes)),
      metric_(metric),
      n_(weights.size()),
      dim_(static_cast<int>(axes_.size())),
      coords_(std::move(coords)),
      weights_(std::move(weights)),
      axis_points_(std::move(axis_points)) {
  if (coords_.size() != n_ * static_cast<std::size_t>(dim_))
    throw std::invalid_argument("coordinate array size does not match point count");
  double sum = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (std::fabs(sum - 1.0) > kWeightSumTol)
    throw std::invalid_argument("quadrature weights must sum to 1");
  for (double w : weights_)
    if (w < 0.0) throw std::invalid_argument("quadrature weights must be nonnegative");
  hash_ = hash_descriptor(axes_, metric_);
}

double DiscreteSpace::distance(std::size_t i, std::size_t j) const {
  return distance_points(point(i), point(j));
}

double DiscreteSpace::distance_to(std::size_t i, std::span<const double> p) const {
  return distance_points(point(i), p);
}

double DiscreteSpace::distance_points(std::span<const double> p,
                                      std::span<const double> q) const {
  double acc = 0.0;
  for (int ax = 0; ax < dim_; ++ax) {
    double d = axes_[ax].distance(p[ax], q[ax]);
    if (metric_ == MetricRule::Max)
      acc = std::max(acc, d);
    else
      acc += d * d;
  }
  return metric_ == MetricRule::Max ? acc : std::sqrt(acc);
}

std::size_t DiscreteSpace::nearest_index(std::span<const double> p) const {
  std::size_t idx = 0;
  for (int ax = 0; ax < dim_; ++ax) {
    const std::vector<double>& grid = axis_points_[ax];
    double x = axes_[ax].wrap(p[ax]);
    std::size_t best = 0;
    if (axes_[ax].kind == AxisKind::Periodic) {
      // equispaced; direct rounding
      double h = axes_[ax].period / grid.size();
      auto j = static_cast<long long>(std::llround(x / h));
      j %= static_cast<long long>(grid.size());
      if (j < 0) j += static_cast<long long>(grid.size());
      best = static_cast<std::size_t>(j);
    } else {
      auto it = std::lower_bound(grid.begin(), grid.end(), x);
      std::size_t hi_c = std::min<std::size_t>(it - grid.begin(), grid.size() - 1);
      std::size_t lo_c = hi_c == 0 ? 0 : hi_c - 1;
      best = lo_c;
      if (axes_[ax].distance(grid[hi_c], x) < axes_[ax].distance(grid[lo_c], x)) best = hi_c;
    }
    idx = idx * grid.size() + best;
  }
  return idx;
}

std::vector<double> DiscreteSpace::wrap(std::span<const double> p) const {
  std::vector<double> out(p.begin(), p.end());
  for (int ax = 0; ax < dim_; ++ax) out[ax] = axes_[ax].wrap(out[ax]);
  return out;
}

std::string DiscreteSpace::describe() const {
  std::ostringstream os;
  os << (metric_ == MetricRule::Max ? "max" : "euclidean");
  for (const Axis& ax : axes_) {
    if (ax.kind == AxisKind::Periodic)
      os << " periodic(" << ax.period << "," << ax.resolution << ")";
    else
      os << " interval(" << ax.lo << "," << ax.hi << "," << ax.resolution << ","
         << (ax.rule == QuadratureRule::Trapezoid ? "trapezoid" : "gauss") << ")";
  }
  return os.str();
}

std::shared_ptr<const DiscreteSpace> DiscreteSpace::single_point(std::vector<double> coords) {
  std::vector<Axis> axes;
  std::vector<std::vector<double>> axis_points;
  for (double c : coords) {
    Axis ax;
    ax.kind = AxisKind::Interval;
    ax.lo = c;
    ax.hi = c + 1.0;  // unit extent; the single node sits at lo
    ax.resolution = 1;
    axes.push_back(ax);
    axis_points.push_back({c});
  }
  if (axes.empty()) {
    Axis ax;
    ax.kind = AxisKind::Interval;
    ax.lo = 0.0;
    ax.hi = 1.0;
    ax.resolution = 1;
    axes.push_back(ax);
    axis_points.push_back({0.0});
    coords.push_back(0.0);
  }
  return std::make_shared<DiscreteSpace>(std::move(axes), MetricRule::Max,
                                         std::move(coords), std::vector<double>{1.0},
                                         std::move(axis_points));
}

SpacePtr build_space(const std::vector<Axis>& axes, MetricRule metric) {
  if (axes.empty()) throw std::invalid_argument("build_space: axis list must not be empty");
  for (const Axis& ax : axes) {
    if (ax.resolution < 2)
      throw std::invalid_argument("build_space: resolution must be >= 2 per axis");
    if (ax.kind == AxisKind::Interval && !(ax.lo < ax.hi))
      throw std::invalid_argument("build_space: interval axis requires lo < hi");
    if (ax.kind == AxisKind::Periodic && !(ax.period > 0.0))
      throw std::invalid_argument("build_space: periodic axis requires period > 0");
  }
  const int dim = static_cast<int>(axes.size());
  std::vector<std::vector<double>> pts(dim), wts(dim);
  std::size_t n = 1;
  for (int ax = 0; ax < dim; ++ax) {
    axis_quadrature(axes[ax], pts[ax], wts[ax]);
    n *= pts[ax].size();
  }
  std::vector<double> coords(n * dim);
  std::vector<double> weights(n);
  std::vector<std::size_t> idx(dim, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double w = 1.0;
    for (int ax = 0; ax < dim; ++ax) {
      coords[i * dim + ax] = pts[ax][idx[ax]];
      w *= wts[ax][idx[ax]];
    }
    weights[i] = w;
    for (int ax = dim - 1; ax >= 0; --ax) {
      if (++idx[ax] < pts[ax].size()) break;
      idx[ax] = 0;
    }
  }
  return std::make_shared<DiscreteSpace>(axes, metric, std::move(coords),
                                         std::move(weights), std::move(pts));
}

SpacePtr product_space(const SpacePtr& a, const SpacePtr& b) {
  if (!a || !b) throw std::invalid_argument("product_space: null space");
  std::vector<Axis> axes = a->axes();
  axes.insert(axes.end(), b->axes().begin(), b->axes().end());
  std::vector<std::vector<double>> axis_points = a->axis_points();
  axis_points.insert(axis_points.end(), b->axis_points().begin(), b->axis_points().end());
  const int da = a->dim(), db = b->dim();
  const std::size_t na = a->size(), nb = b->size();
  std::vector<double> coords(na * nb * (da + db));
  std::vector<double> weights(na * nb);
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      std::size_t r = i * nb + j;
      for (int ax = 0; ax < da; ++ax) coords[r * (da + db) + ax] = a->coord(i, ax);
      for (int ax = 0; ax < db; ++ax) coords[r * (da + db) + da + ax] = b->coord(j, ax);
      weights[r] = a->weight(i) * b->weight(j);
    }
  }
  return std::make_shared<DiscreteSpace>(std::move(axes), a->metric_rule(),
                                         std::move(coords), std::move(weights),
                                         std::move(axis_points));
}

Density::Density(SpacePtr space, std::vector<double> values)
    : space_(std::move(space)), values_(std::move(values)) {
  if (!space_) throw std::invalid_argument("density requires a space");
  if (values_.size() != space_->size())
    throw std::invalid_argument("density size does not match space");
  for (double v : values_)
    if (v < 0.0) throw std::invalid_argument("density values must be nonnegative");
  double m = mass();
  if (std::fabs(m - 1.0) > kMassTol)
    throw std::invalid_argument("density must integrate to 1 (got " + std::to_string(m) + ")");
}

Density Density::uniform(SpacePtr space) {
  if (!space) throw std::invalid_argument("density requires a space");
  return Density(space, std::vector<double>(space->size(), 1.0));
}

Density Density::normalized(SpacePtr space, std::vector<double> raw) {
  if (!space) throw std::invalid_argument("density requires a space");
  if (raw.size() != space->size())
    throw std::invalid_argument("density size does not match space");
  double m = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] < 0.0) throw std::invalid_argument("density values must be nonnegative");
    m += raw[i] * space->weight(i);
  }
  if (!(m > 0.0)) throw std::invalid_argument("cannot normalize a zero density");
  for (double& v : raw) v /= m;
  return Density(std::move(space), std::move(raw));
}

double Density::mass() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) m += values_[i] * space_->weight(i);
  return m;
}

double Density::min_value() const {
  return *std::min_element(values_.begin(), values_.end());
}

double entropy(const Density& f) {
  const auto& w = f.space()->weights();
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    double v = f[i];
    if (v < 0.0) throw std::invalid_argument("entropy: density values must be nonnegative");
    if (v > 0.0) s += v * std::log(v) * w[i];
  }
  return s;
}

bool same_space(const Density& f, const Density& g) {
  if (f.space() == g.space()) return true;
  return f.space()->descriptor_hash() == g.space()->descriptor_hash() &&
         f.space()->size() == g.space()->size();
}

}  // namespace onsager
