#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace onsager {

/// Axis of a configuration space: a circle of given period or a closed
/// interval with a quadrature rule.
enum class AxisKind { Periodic, Interval };
enum class QuadratureRule { Trapezoid, GaussLegendre };

struct Axis {
  AxisKind kind = AxisKind::Periodic;
  double period = 6.283185307179586476925287;  // Periodic
  double lo = 0.0, hi = 1.0;                   // Interval
  QuadratureRule rule = QuadratureRule::Trapezoid;
  int resolution = 0;

  static Axis periodic(double period, int resolution);
  static Axis interval(double lo, double hi, int resolution,
                       QuadratureRule rule = QuadratureRule::Trapezoid);

  double length() const { return kind == AxisKind::Periodic ? period : hi - lo; }
  /// Distance between two coordinates on this axis.
  double distance(double x, double y) const;
  /// Map a coordinate into the fundamental domain (wraps periodic axes).
  double wrap(double x) const;
};

/// How per-axis distances combine into the space metric.
enum class MetricRule { Max, Euclidean };

/// A compact metric space (M, d, mu) discretized as a finite quadrature
/// grid: points, nonnegative weights summing to one, and a metric.
class DiscreteSpace {
 public:
  DiscreteSpace(std::vector<Axis> axes, MetricRule metric,
                std::vector<double> coords, std::vector<double> weights,
                std::vector<std::vector<double>> axis_points);

  std::size_t size() const { return n_; }
  int dim() const { return dim_; }
  MetricRule metric_rule() const { return metric_; }
  const std::vector<Axis>& axes() const { return axes_; }
  const std::vector<double>& weights() const { return weights_; }
  double weight(std::size_t i) const { return weights_[i]; }

  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dim_, static_cast<std::size_t>(dim_)};
  }
  double coord(std::size_t i, int axis) const { return coords_[i * dim_ + axis]; }

  /// Metric distance between grid points.
  double distance(std::size_t i, std::size_t j) const;
  /// Metric distance between a grid point and an arbitrary point.
  double distance_to(std::size_t i, std::span<const double> p) const;
  /// Metric distance between two arbitrary points.
  double distance_points(std::span<const double> p, std::span<const double> q) const;

  /// Per-axis grid coordinates (tensor structure of the grid).
  const std::vector<std::vector<double>>& axis_points() const { return axis_points_; }
  /// Index of the grid point nearest to p (per-axis nearest, tensor grids).
  std::size_t nearest_index(std::span<const double> p) const;
  /// Wrap an arbitrary point into the fundamental domain.
  std::vector<double> wrap(std::span<const double> p) const;

  /// Hash of the descriptor (axes, resolutions, metric); used to detect
  /// mismatched spaces and to stamp exported files.
  std::uint64_t descriptor_hash() const { return hash_; }
  std::string describe() const;

  /// Degenerate one-point space; useful as a product identity.
  static std::shared_ptr<const DiscreteSpace> single_point(std::vector<double> coords);

 private:
  std::vector<Axis> axes_;
  MetricRule metric_;
  std::size_t n_ = 0;
  int dim_ = 0;
  std::vector<double> coords_;   // n * dim, row-major
  std::vector<double> weights_;  // n, sums to 1
  std::vector<std::vector<double>> axis_points_;
  std::uint64_t hash_ = 0;
};

using SpacePtr = std::shared_ptr<const DiscreteSpace>;

/// Tensor-product quadrature grid over the given axes.
/// Periodic axes get equispaced points with uniform weights; interval axes
/// use the axis quadrature rule. Weights are normalized to sum to one.
SpacePtr build_space(const std::vector<Axis>& axes, MetricRule metric = MetricRule::Max);

/// Product of two spaces: points are pairs, weights multiply, per-axis
/// distances combine under the first factor's metric rule.
SpacePtr product_space(const SpacePtr& a, const SpacePtr& b);

/// Nonnegative density f with respect to mu: sum(values * weights) = 1.
class Density {
 public:
  Density(SpacePtr space, std::vector<double> values);

  static Density uniform(SpacePtr space);
  /// Scales raw nonnegative values so the result integrates to one.
  static Density normalized(SpacePtr space, std::vector<double> raw);

  const SpacePtr& space() const { return space_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  /// integral of f dmu (should be 1 for a valid density)
  double mass() const;
  double min_value() const;

 private:
  SpacePtr space_;
  std::vector<double> values_;
};

/// Entropy integral f log f dmu with the convention 0 log 0 = 0.
/// Nonnegative for every valid density. Throws on negative values.
double entropy(const Density& f);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// True when the two densities live on the same space (same object or
/// identical descriptor).
bool same_space(const Density& f, const Density& g);

}  // namespace onsager
