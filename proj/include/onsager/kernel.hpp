#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "onsager/space.hpp"

namespace onsager {

/// Interaction kernel between two unit two-rods, determined by the oriented
/// areas of the triangles they span: (sin(p1-p2) - sin(q1-q2))^2.
double two_rod_kernel(double p1, double p2, double q1, double q2);

/// Variable-length two-rods with segment lengths in [0, max_length]:
/// (x1 x2 sin(p1-p2) - y1 y2 sin(q1-q2))^2. Throws if a length is outside
/// [0, max_length].
double sized_two_rod_kernel(double x1, double x2, double p1, double p2,
                            double y1, double y2, double q1, double q2,
                            double max_length);

/// Area of the symmetric difference of two aligned unit-side rhombi with
/// smaller angles p, q in [0, pi/2] (closed form; 0 on the diagonal, with a
/// series branch near it to avoid cancellation). Throws outside [0, pi/2].
double rhombus_kernel(double p, double q);

enum class KernelKind { TwoRodArea, SizedTwoRodArea, RhombusSymdiff, Tabulated };

struct KernelSpec {
  KernelKind kind = KernelKind::TwoRodArea;
  double max_length = 1.0;      // SizedTwoRodArea only
  std::vector<double> table;    // Tabulated only, row-major n x n
  std::size_t table_size = 0;

  static KernelSpec two_rod();
  static KernelSpec sized_two_rod(double max_length);
  static KernelSpec rhombus();
  static KernelSpec tabulated(std::vector<double> entries, std::size_t n);

  /// True when the kernel can be evaluated at arbitrary (continuous) points.
  bool has_pointwise() const { return kind != KernelKind::Tabulated; }
  int expected_dim() const;
  /// Pointwise evaluation at arbitrary points of matching dimension.
  double evaluate(std::span<const double> p, std::span<const double> q) const;
  std::string name() const;
};

struct AssembleOptions {
  /// Largest point count for which a dense matrix is materialized; larger
  /// grids use the squared-difference or lazy pointwise backend.
  std::size_t dense_limit = 4096;
  int lipschitz_samples = 20000;
  unsigned seed = 0x5eed5u;
};

/// Symmetric nonnegative interaction matrix k(p_i, p_j) over a grid, with an
/// empirical Lipschitz constant and sup norm. Storage is dense, lazy
/// (pointwise re-evaluation), or a rank-structured squared-difference form
/// k(p,q) = (s(p) - s(q))^2, which both rod kernels admit exactly.
class KernelMatrix {
 public:
  enum class Backend { Dense, SquaredDiff, Lazy };

  std::size_t size() const { return n_; }
  Backend backend() const { return backend_; }
  const SpacePtr& space() const { return space_; }
  const std::optional<KernelSpec>& spec() const { return spec_; }

  double entry(std::size_t i, std::size_t j) const;
  /// Matrix-vector product sum_j k(i,j) x_j.
  std::vector<double> apply(std::span<const double> x) const;

  double sup_norm() const { return sup_norm_; }
  double lipschitz_estimate() const { return lipschitz_; }
  /// True when sup_norm is exact rather than a sampled estimate.
  bool sup_norm_exact() const { return sup_exact_; }

  /// Squared-difference feature s_i (empty unless that backend is active).
  const std::vector<double>& feature() const { return feature_; }

  static KernelMatrix dense(SpacePtr space, std::vector<double> entries,
                            std::optional<KernelSpec> spec, const AssembleOptions& opts);
  static KernelMatrix squared_diff(SpacePtr space, std::vector<double> feature,
                                   KernelSpec spec, const AssembleOptions& opts);
  static KernelMatrix lazy(SpacePtr space, KernelSpec spec, const AssembleOptions& opts);

 private:
  KernelMatrix() = default;
  void estimate_constants(const AssembleOptions& opts);

  SpacePtr space_;
  std::optional<KernelSpec> spec_;
  Backend backend_ = Backend::Dense;
  std::size_t n_ = 0;
  std::vector<double> entries_;  // dense
  std::vector<double> feature_;  // squared-diff
  double sup_norm_ = 0.0;
  double lipschitz_ = 0.0;
  bool sup_exact_ = true;
};

/// Builds the interaction matrix of `spec` over `space`, choosing the
/// backend: squared-difference for the rod kernels (exact at any size),
/// dense up to opts.dense_limit, lazy pointwise beyond.
KernelMatrix assemble(const KernelSpec& spec, const SpacePtr& space,
                      const AssembleOptions& opts = {});

struct KernelValidationReport {
  double max_symmetry_violation = 0.0;
  double max_diagonal = 0.0;
  double min_entry = 0.0;
  double sup_norm = 0.0;
  double lipschitz_estimate = 0.0;
  bool passed = false;
  bool exhaustive = true;       // full entry scan vs sampled
  std::size_t pairs_checked = 0;
  // witnesses (indices into the grid) for located failures
  std::size_t symmetry_i = 0, symmetry_j = 0;
  std::size_t negative_i = 0, negative_j = 0;
  std::string summary() const;
};

/// Checks symmetry, zero diagonal and nonnegativity; passes iff violations
/// are below 1e-10 and the minimum entry is >= 0.
KernelValidationReport validate(const KernelMatrix& matrix);

}  // namespace onsager
