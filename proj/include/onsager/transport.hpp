#pragma once

#include "onsager/space.hpp"

namespace onsager {

struct BlOptions {
  /// Largest excess+deficit support solved exactly; above this the measures
  /// are aggregated onto a coarser grid first.
  std::size_t exact_node_limit = 1200;
  /// Bounded-Lipschitz cap: transport cost is min(d, cost_cap). For
  /// probability measures this reproduces the dual with |phi| <= 1, Lip <= 1.
  double cost_cap = 2.0;
};

struct BlResult {
  double value = 0.0;
  /// False when the coarsened upper-bounding surrogate was used.
  bool exact = true;
  /// Additive slack included in `value` when not exact (2 * snap radius).
  double coarsen_slack = 0.0;
};

/// Bounded-Lipschitz (Kantorovich-Rubinstein with bounded 1-Lipschitz test
/// functions) distance between f dmu and g dmu. Equals the optimal transport
/// cost with ground cost min(d, 2). Exact for supports up to
/// `exact_node_limit`; beyond that, returns the exact distance between
/// cell-aggregated measures plus twice the snap radius, an upper bound.
double bl_distance(const Density& f, const Density& g, const BlOptions& opts = {});

BlResult bl_distance_detailed(const Density& f, const Density& g,
                              const BlOptions& opts = {});

}  // namespace onsager
