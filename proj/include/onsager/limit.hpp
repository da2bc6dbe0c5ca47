#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "onsager/kernel.hpp"
#include "onsager/solver.hpp"
#include "onsager/space.hpp"

namespace onsager {

/// Candidate support of a zero-temperature limit: grid points on which the
/// kernel vanishes pairwise up to the stated threshold.
struct ZeroSet {
  std::vector<std::size_t> indices;
  double tolerance = 0.0;     // kernel threshold tau the set was built with
  double pairwise_max = 0.0;  // achieved max of k over the set squared
};

/// Validated constructor: computes pairwise_max and throws when it exceeds
/// tau.
ZeroSet make_zero_set(const KernelMatrix& k, std::vector<std::size_t> indices, double tau);

/// Grid indices satisfying a pointwise predicate.
std::vector<std::size_t> indices_where(
    const DiscreteSpace& space, const std::function<bool(std::span<const double>)>& pred);

struct ZeroPairGraph {
  double tau = 0.0;
  bool pairs_materialized = true;
  /// Pairs (i, j), i <= j, with k(p_i, p_j) <= tau (diagonal included).
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  std::vector<std::vector<std::size_t>> components;
};

/// The graph of near-zero kernel pairs; callers extract candidate sets from
/// its connected components. Pairs are materialized up to `max_pairs`.
ZeroPairGraph zero_pairs(const KernelMatrix& k, double tau,
                         std::size_t max_pairs = 20000000);

/// Connected components of the zero-pair graph packaged as candidate sets;
/// each carries its achieved pairwise maximum (which may exceed tau for
/// chained components).
std::vector<ZeroSet> zero_components(const KernelMatrix& k, double tau);

/// Distance from every grid point to the set, capped at `cap` (entries at
/// or above the cap are set to `cap`).
std::vector<double> distance_to_set(const DiscreteSpace& space,
                                    std::span<const std::size_t> set_indices, double cap);

/// mu-mass of the metric eps-neighborhood of the set, per eps.
std::vector<std::pair<double, double>> neighborhood_volume_profile(
    const ZeroSet& set, const DiscreteSpace& space, const std::vector<double>& eps_list);

struct ConcentrationEntry {
  double mass = 0.0;            // g dmu mass of the eps-neighborhood
  double bl_to_uniform = 0.0;   // distance to the normalized uniform measure on the set
  bool bl_exact = true;
};

struct ConcentrationReport {
  double b = 0.0;
  double eps = 0.0;
  double two_over_b_energy = 0.0;
  std::vector<ConcentrationEntry> entries;  // one per candidate set
};

/// Concentration diagnostics of a solved state against candidate limit sets.
ConcentrationReport concentration(const OnsagerState& state,
                                  const std::vector<ZeroSet>& candidates, double eps);

/// One affine piece of a comparison map T, acting on point coordinates.
struct AffinePiece {
  std::vector<double> matrix;  // dim x dim, row-major
  std::vector<double> offset;  // dim
};

/// Inputs of the zero-set selection test: a candidate set A1 that the test
/// tries to rule out, a target set A0, a kernel-non-increasing map T from a
/// neighborhood of A1 into a neighborhood of A0, and the expansion constant
/// c > 1 the map must achieve in measure.
struct SelectionSpec {
  ZeroSet set1;  // A1
  ZeroSet set0;  // A0
  /// One piece per metric component of A1 (or a single shared piece).
  std::vector<AffinePiece> pieces;
  double c = 0.0;
  double eps1 = 0.0, eps0 = 0.0;
};

struct SelectionOptions {
  int samples = 2000;
  unsigned seed = 0xc0ffee;
  /// Tolerated relative shortfall of the snapped pushforward mass ratios
  /// (grid discretization of boundaries).
  double pushforward_slack = 0.15;
  double jacobian_slack = 0.02;
  /// Absolute slack for the kernel-non-increase comparisons.
  double kernel_slack = 1e-9;
  int ball_sets = 24;
  int union_sets = 16;
};

struct ConditionReport {
  std::string name;
  bool passed = false;
  double margin = 0.0;  // how comfortably the condition held (context-specific)
  std::string detail;
};

struct SelectionVerdict {
  bool passed = false;
  std::vector<ConditionReport> conditions;
  std::string note;
  std::string summary() const;
};

/// Numerically checks, on sampled grid data, the hypotheses under which the
/// set A1 cannot carry full limiting mass: injectivity of T (modulo grid
/// snapping), kernel non-increase k(Tp, Tq) <= k(p, q), measure expansion
/// mu(T(B)) >= c mu(B) on test families (component bands, metric balls,
/// random unions via a finite-difference Jacobian), separation k(p, q) > 0
/// for p in A1 and q outside the neighborhood, and that T lands inside the
/// target neighborhood. A passing verdict is a sampled check, not a proof.
SelectionVerdict selection_test(const SelectionSpec& spec, const KernelMatrix& k,
                                const DiscreteSpace& space,
                                const SelectionOptions& opts = {});
SelectionVerdict selection_test(const SelectionSpec& spec, const KernelMatrix& k,
                                const DiscreteSpace& space, int samples);

/// The two-rod comparison map: A1 = {sin(p1-p2) = 0}, A0 = {sin(p1-p2) = 1},
/// with the piecewise-affine map carrying each A1 band to the A0 band.
/// eps_delta is the angular half-width of the source bands.
SelectionSpec make_two_rod_selection(const KernelMatrix& k, double c, double eps_delta);

/// The rhombus comparison map: A1 = {q}, A0 = {pi/2}, T(p) = pi/2 - c(q+eps-p).
SelectionSpec make_rhombus_selection(const KernelMatrix& k, double q, double c, double eps);

/// Identity map on a neighborhood of the set; fails measure expansion for
/// any claimed c > 1.
SelectionSpec make_identity_selection(const KernelMatrix& k, ZeroSet set1, double c,
                                      double eps);

}  // namespace onsager
