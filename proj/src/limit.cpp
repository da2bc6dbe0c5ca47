#include "onsager/limit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "onsager/transport.hpp"

namespace onsager {

namespace {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

bool axis_is_uniform(const Axis& ax, const std::vector<double>& pts) {
  if (ax.kind == AxisKind::Periodic) return true;
  if (pts.size() < 2) return true;
  double h = pts[1] - pts[0];
  for (std::size_t i = 2; i < pts.size(); ++i)
    if (std::fabs((pts[i] - pts[i - 1]) - h) > 1e-9 * std::max(1.0, std::fabs(h)))
      return false;
  return true;
}

std::vector<std::size_t> decompose(std::size_t idx, const std::vector<std::size_t>& sizes) {
  std::vector<std::size_t> multi(sizes.size());
  for (std::size_t ax = sizes.size(); ax-- > 0;) {
    multi[ax] = idx % sizes[ax];
    idx /= sizes[ax];
  }
  return multi;
}

}  // namespace

std::vector<double> distance_to_set(const DiscreteSpace& sp,
                                    std::span<const std::size_t> set_indices, double cap) {
  if (set_indices.empty())
    throw std::invalid_argument("distance_to_set: empty candidate set");
  const std::size_t n = sp.size();
  std::vector<double> dist(n, cap);

  const int dim = sp.dim();
  std::vector<std::size_t> sizes(dim);
  bool windowed = true;
  std::vector<double> step(dim, 0.0);
  for (int ax = 0; ax < dim; ++ax) {
    const auto& pts = sp.axis_points()[ax];
    sizes[ax] = pts.size();
    if (!axis_is_uniform(sp.axes()[ax], pts) || pts.size() < 2) windowed = false;
    if (pts.size() >= 2)
      step[ax] = sp.axes()[ax].kind == AxisKind::Periodic
                     ? sp.axes()[ax].period / pts.size()
                     : pts[1] - pts[0];
  }
  // windowed scan only pays off while windows are smaller than the grid
  if (windowed) {
    std::size_t window = 1;
    for (int ax = 0; ax < dim; ++ax) {
      std::size_t r = static_cast<std::size_t>(std::ceil(cap / step[ax])) + 1;
      window *= std::min(2 * r + 1, sizes[ax]);
    }
    if (window >= n) windowed = false;
  }

  if (!windowed) {
    for (std::size_t i = 0; i < n; ++i) {
      double best = cap;
      for (std::size_t a : set_indices) {
        double d = sp.distance(i, a);
        if (d < best) best = d;
      }
      dist[i] = best;
    }
    return dist;
  }

  std::vector<long long> radius(dim);
  for (int ax = 0; ax < dim; ++ax)
    radius[ax] = static_cast<long long>(std::ceil(cap / step[ax])) + 1;

  std::vector<long long> off(dim);
  for (std::size_t a : set_indices) {
    std::vector<std::size_t> base = decompose(a, sizes);
    for (int ax = 0; ax < dim; ++ax) off[ax] = -radius[ax];
    for (;;) {
      bool in_range = true;
      std::size_t idx = 0;
      for (int ax = 0; ax < dim && in_range; ++ax) {
        long long j = static_cast<long long>(base[ax]) + off[ax];
        if (sp.axes()[ax].kind == AxisKind::Periodic) {
          long long nn = static_cast<long long>(sizes[ax]);
          j %= nn;
          if (j < 0) j += nn;
        } else if (j < 0 || j >= static_cast<long long>(sizes[ax])) {
          in_range = false;
          break;
        }
        idx = idx * sizes[ax] + static_cast<std::size_t>(j);
      }
      if (in_range) {
        double d = sp.distance(idx, a);
        if (d < dist[idx]) dist[idx] = d;
      }
      int ax = dim - 1;
      for (; ax >= 0; --ax) {
        if (++off[ax] <= radius[ax]) break;
        off[ax] = -radius[ax];
      }
      if (ax < 0) break;
    }
  }
  return dist;
}

ZeroSet make_zero_set(const KernelMatrix& k, std::vector<std::size_t> indices, double tau) {
  if (indices.empty()) throw std::invalid_argument("make_zero_set: empty index set");
  if (tau < 0.0) throw std::invalid_argument("make_zero_set: tau must be nonnegative");
  double mx = 0.0;
  const std::size_t m = indices.size();
  if (m * m > 50000000ull)
    throw std::invalid_argument("make_zero_set: candidate set too large for pairwise check");
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j)
      mx = std::max(mx, k.entry(indices[i], indices[j]));
  if (mx > tau)
    throw std::invalid_argument("make_zero_set: pairwise kernel maximum exceeds tau");
  return ZeroSet{std::move(indices), tau, mx};
}

std::vector<std::size_t> indices_where(
    const DiscreteSpace& space, const std::function<bool(std::span<const double>)>& pred) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (pred(space.point(i))) out.push_back(i);
  return out;
}

ZeroPairGraph zero_pairs(const KernelMatrix& k, double tau, std::size_t max_pairs) {
  if (tau < 0.0) throw std::invalid_argument("zero_pairs: tau must be nonnegative");
  const std::size_t n = k.size();
  ZeroPairGraph g;
  g.tau = tau;
  UnionFind uf(n);

  auto push_pair = [&](std::size_t i, std::size_t j) {
    if (g.pairs_materialized) {
      if (g.pairs.size() < max_pairs)
        g.pairs.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
      else
        g.pairs_materialized = false;
    }
  };

  if (k.backend() == KernelMatrix::Backend::SquaredDiff) {
    const auto& s = k.feature();
    const double gap = std::sqrt(tau);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return s[a] < s[b]; });
    for (std::size_t i = 0; i < n; ++i) push_pair(i, i);
    std::size_t lo = 0;
    for (std::size_t hi = 0; hi < n; ++hi) {
      while (s[order[hi]] - s[order[lo]] > gap) ++lo;
      for (std::size_t t = lo; t < hi; ++t) {
        std::size_t a = order[t], b = order[hi];
        push_pair(std::min(a, b), std::max(a, b));
        uf.unite(a, b);
      }
    }
  } else {
    if (n > 16384)
      throw std::invalid_argument("zero_pairs: grid too large for a full pair scan");
    for (std::size_t i = 0; i < n; ++i) {
      push_pair(i, i);
      for (std::size_t j = i + 1; j < n; ++j) {
        if (k.entry(i, j) <= tau) {
          push_pair(i, j);
          uf.unite(i, j);
        }
      }
    }
  }

  std::unordered_map<std::size_t, std::size_t> root_to_comp;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = uf.find(i);
    auto [it, fresh] = root_to_comp.try_emplace(r, g.components.size());
    if (fresh) g.components.emplace_back();
    g.components[it->second].push_back(i);
  }
  return g;
}

std::vector<ZeroSet> zero_components(const KernelMatrix& k, double tau) {
  ZeroPairGraph g = zero_pairs(k, tau);
  std::vector<ZeroSet> out;
  std::mt19937 rng(0x5e75u);
  for (auto& comp : g.components) {
    ZeroSet z;
    z.indices = comp;
    const std::size_t m = comp.size();
    double mx = 0.0;
    if (m * m <= 4000000ull) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i; j < m; ++j) mx = std::max(mx, k.entry(comp[i], comp[j]));
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, m - 1);
      for (int t = 0; t < 2000000; ++t) mx = std::max(mx, k.entry(comp[pick(rng)], comp[pick(rng)]));
    }
    z.pairwise_max = mx;
    z.tolerance = std::max(tau, mx);
    out.push_back(std::move(z));
  }
  return out;
}

std::vector<std::pair<double, double>> neighborhood_volume_profile(
    const ZeroSet& set, const DiscreteSpace& space, const std::vector<double>& eps_list) {
  if (set.indices.empty())
    throw std::invalid_argument("neighborhood_volume_profile: empty set");
  double cap = 0.0;
  for (double e : eps_list) cap = std::max(cap, e);
  std::vector<double> dist = distance_to_set(space, set.indices, cap * 1.0000001 + 1e-12);
  std::vector<std::pair<double, double>> out;
  for (double e : eps_list) {
    double mass = 0.0;
    for (std::size_t i = 0; i < space.size(); ++i)
      if (dist[i] <= e) mass += space.weight(i);
    out.emplace_back(e, mass);
  }
  return out;
}

ConcentrationReport concentration(const OnsagerState& state,
                                  const std::vector<ZeroSet>& candidates, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("concentration: eps must be positive");
  if (candidates.empty()) throw std::invalid_argument("concentration: no candidate sets");
  const Density& g = state.density;
  const DiscreteSpace& sp = *g.space();
  ConcentrationReport rep;
  rep.b = state.b;
  rep.eps = eps;
  rep.two_over_b_energy = state.b > 0.0 ? 2.0 * state.energy / state.b : 0.0;
  for (const ZeroSet& a : candidates) {
    if (a.indices.empty()) throw std::invalid_argument("concentration: empty candidate set");
    std::vector<double> dist = distance_to_set(sp, a.indices, eps * 1.0000001 + 1e-12);
    ConcentrationEntry e;
    for (std::size_t i = 0; i < sp.size(); ++i)
      if (dist[i] <= eps) e.mass += g[i] * sp.weight(i);
    std::vector<double> ind(sp.size(), 0.0);
    for (std::size_t i : a.indices) ind[i] = 1.0;
    Density uniform_on_a = Density::normalized(g.space(), std::move(ind));
    BlResult bl = bl_distance_detailed(g, uniform_on_a);
    e.bl_to_uniform = bl.value;
    e.bl_exact = bl.exact;
    rep.entries.push_back(e);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// selection test

namespace {

struct MapContext {
  const DiscreteSpace* sp = nullptr;
  const SelectionSpec* spec = nullptr;
  std::vector<std::size_t> band;       // grid indices of B1(eps1)
  std::vector<int> band_component;     // component id per band entry
  std::vector<std::vector<std::size_t>> set1_components;
};

/// Metric components of a set of grid indices (union of pairs closer than
/// 2.1 typical grid steps).
std::vector<std::vector<std::size_t>> set_components(const DiscreteSpace& sp,
                                                     const std::vector<std::size_t>& idx) {
  double h = 0.0;
  for (int ax = 0; ax < sp.dim(); ++ax) {
    const auto& pts = sp.axis_points()[ax];
    if (pts.size() >= 2)
      h = std::max(h, sp.axes()[ax].kind == AxisKind::Periodic
                          ? sp.axes()[ax].period / pts.size()
                          : pts[1] - pts[0]);
  }
  const double thresh = 2.1 * h;
  const std::size_t m = idx.size();
  UnionFind uf(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (sp.distance(idx[i], idx[j]) <= thresh) uf.unite(i, j);
  std::unordered_map<std::size_t, std::size_t> root_to_comp;
  std::vector<std::vector<std::size_t>> comps;
  for (std::size_t i = 0; i < m; ++i) {
    auto [it, fresh] = root_to_comp.try_emplace(uf.find(i), comps.size());
    if (fresh) comps.emplace_back();
    comps[it->second].push_back(idx[i]);
  }
  // deterministic order: by smallest member
  std::sort(comps.begin(), comps.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return comps;
}

std::vector<double> apply_piece(const AffinePiece& piece, std::span<const double> p) {
  const std::size_t d = piece.offset.size();
  std::vector<double> y(d, 0.0);
  for (std::size_t r = 0; r < d; ++r) {
    double acc = piece.offset[r];
    for (std::size_t c = 0; c < d; ++c) acc += piece.matrix[r * d + c] * p[c];
    y[r] = acc;
  }
  return y;
}

double kernel_at(const KernelMatrix& k, const DiscreteSpace& sp,
                 std::span<const double> p, std::span<const double> q, bool pointwise) {
  if (pointwise) return k.spec()->evaluate(p, q);
  return k.entry(sp.nearest_index(p), sp.nearest_index(q));
}

double det_small(std::vector<double> m, std::size_t d) {
  double det = 1.0;
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < d; ++r)
      if (std::fabs(m[r * d + col]) > std::fabs(m[piv * d + col])) piv = r;
    if (piv != col) {
      for (std::size_t c = 0; c < d; ++c) std::swap(m[col * d + c], m[piv * d + c]);
      det = -det;
    }
    double p = m[col * d + col];
    if (p == 0.0) return 0.0;
    det *= p;
    for (std::size_t r = col + 1; r < d; ++r) {
      double f = m[r * d + col] / p;
      for (std::size_t c = col; c < d; ++c) m[r * d + c] -= f * m[col * d + c];
    }
  }
  return det;
}

}  // namespace

std::string SelectionVerdict::summary() const {
  std::ostringstream os;
  os << (passed ? "pass" : "fail");
  for (const auto& c : conditions)
    os << "; " << c.name << "=" << (c.passed ? "ok" : "VIOLATED") << " (margin " << c.margin
       << (c.detail.empty() ? "" : ", " + c.detail) << ")";
  return os.str();
}

SelectionVerdict selection_test(const SelectionSpec& spec, const KernelMatrix& k,
                                const DiscreteSpace& space, int samples) {
  SelectionOptions o;
  o.samples = samples;
  return selection_test(spec, k, space, o);
}

SelectionVerdict selection_test(const SelectionSpec& spec, const KernelMatrix& k,
                                const DiscreteSpace& space, const SelectionOptions& opts) {
  if (!(spec.c > 1.0))
    throw std::invalid_argument("selection_test: expansion constant c must exceed 1");
  if (!(spec.eps0 > 0.0) || !(spec.eps1 > 0.0))
    throw std::invalid_argument("selection_test: neighborhood radii must be positive");
  if (spec.set0.indices.empty() || spec.set1.indices.empty())
    throw std::invalid_argument("selection_test: candidate sets must be nonempty");
  if (k.size() != space.size())
    throw std::invalid_argument("selection_test: kernel and space sizes differ");

  const bool pointwise = k.spec().has_value() && k.spec()->has_pointwise();
  const std::size_t n = space.size();
  const int dim = space.dim();
  std::mt19937 rng(opts.seed);

  SelectionVerdict verdict;
  verdict.note =
      "sampled numerical check of the selection hypotheses on grid data; "
      "injectivity verified modulo grid snapping; a pass is evidence, not a proof";
  if (!pointwise)
    verdict.note += "; tabulated kernel: comparisons use snapped grid entries";

  // B1 band and component assignment
  std::vector<std::vector<std::size_t>> comps = set_components(space, spec.set1.indices);
  if (spec.pieces.empty())
    throw std::invalid_argument("selection_test: the map needs at least one piece");
  if (spec.pieces.size() != 1 && spec.pieces.size() != comps.size())
    throw std::invalid_argument(
        "selection_test: piece count must be 1 or match the component count of A1");
  for (const auto& piece : spec.pieces)
    if (piece.offset.size() != static_cast<std::size_t>(dim) ||
        piece.matrix.size() != static_cast<std::size_t>(dim) * dim)
      throw std::invalid_argument("selection_test: piece dimensions do not match the space");

  std::vector<double> d1 = distance_to_set(space, spec.set1.indices, spec.eps1 + 1e-12);
  // component of the nearest A1 member, per band point
  std::vector<std::size_t> band;
  std::vector<int> band_comp;
  {
    // map each A1 index to its component id
    std::unordered_map<std::size_t, int> comp_of;
    for (std::size_t ci = 0; ci < comps.size(); ++ci)
      for (std::size_t a : comps[ci]) comp_of[a] = static_cast<int>(ci);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(d1[i] < spec.eps1)) continue;
      band.push_back(i);
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = spec.set1.indices.front();
      for (std::size_t a : spec.set1.indices) {
        double d = space.distance(i, a);
        if (d < best) {
          best = d;
          arg = a;
        }
      }
      band_comp.push_back(comp_of[arg]);
    }
  }
  if (band.empty())
    throw std::invalid_argument("selection_test: B1(eps1) contains no grid points");

  auto piece_for = [&](int comp) -> const AffinePiece& {
    return spec.pieces.size() == 1 ? spec.pieces[0]
                                   : spec.pieces[static_cast<std::size_t>(comp)];
  };
  auto map_point = [&](std::size_t band_pos) {
    std::vector<double> y =
        apply_piece(piece_for(band_comp[band_pos]), space.point(band[band_pos]));
    return space.wrap(y);
  };

  // cache images of all band points
  std::vector<std::vector<double>> images(band.size());
  for (std::size_t t = 0; t < band.size(); ++t) images[t] = map_point(t);

  // --- condition: T lands inside B0(eps0) and inside the space -------------
  {
    ConditionReport cr;
    cr.name = "maps_into_target";
    double worst = 0.0;
    std::size_t witness = 0;
    bool outside_space = false;
    for (std::size_t t = 0; t < band.size(); ++t) {
      const auto& y = images[t];
      for (int ax = 0; ax < dim; ++ax) {
        const Axis& a = space.axes()[ax];
        if (a.kind == AxisKind::Interval &&
            (y[ax] < a.lo - 1e-9 || y[ax] > a.hi + 1e-9)) {
          outside_space = true;
          witness = band[t];
        }
      }
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t a0 : spec.set0.indices)
        d = std::min(d, space.distance_points(y, space.point(a0)));
      if (d > worst) {
        worst = d;
        if (d >= spec.eps0) witness = band[t];
      }
    }
    cr.passed = !outside_space && worst < spec.eps0;
    cr.margin = spec.eps0 - worst;
    if (outside_space)
      cr.detail = "image leaves the space at grid index " + std::to_string(witness);
    else if (!cr.passed)
      cr.detail = "image at distance " + std::to_string(worst) + " from A0 (grid index " +
                  std::to_string(witness) + ")";
    verdict.conditions.push_back(std::move(cr));
  }

  // --- condition: injectivity (modulo snapping) ----------------------------
  {
    ConditionReport cr;
    cr.name = "injectivity";
    cr.passed = true;
    std::unordered_map<std::size_t, std::size_t> cell_to_pos;
    std::size_t benign = 0;
    double closest = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < band.size(); ++t) {
      std::size_t cell = space.nearest_index(images[t]);
      auto [it, fresh] = cell_to_pos.try_emplace(cell, t);
      if (!fresh) {
        double d = space.distance_points(images[t], images[it->second]);
        closest = std::min(closest, d);
        if (d < 1e-9) {
          cr.passed = false;
          cr.detail = "distinct points " + std::to_string(band[t]) + " and " +
                      std::to_string(band[it->second]) + " map to the same image";
        } else {
          ++benign;
        }
      }
    }
    cr.margin = std::isfinite(closest) ? closest : 1.0;
    if (cr.passed && benign > 0)
      cr.detail = std::to_string(benign) + " same-cell collisions of distinct images";
    verdict.conditions.push_back(std::move(cr));
  }

  // --- condition: kernel non-increase --------------------------------------
  {
    ConditionReport cr;
    cr.name = "kernel_non_increase";
    double slack = opts.kernel_slack;
    if (!pointwise) {
      double h = 0.0;
      for (int ax = 0; ax < dim; ++ax) {
        const auto& pts = space.axis_points()[ax];
        if (pts.size() >= 2)
          h = std::max(h, space.axes()[ax].kind == AxisKind::Periodic
                              ? space.axes()[ax].period / pts.size()
                              : pts[1] - pts[0]);
      }
      slack += 2.0 * k.lipschitz_estimate() * h;
      cr.detail = "snapped entries, slack " + std::to_string(slack);
    }
    std::vector<std::size_t> sample(band.size());
    for (std::size_t i = 0; i < band.size(); ++i) sample[i] = i;
    std::shuffle(sample.begin(), sample.end(), rng);
    std::size_t m = std::min<std::size_t>(opts.samples, sample.size());
    double worst = -std::numeric_limits<double>::infinity();
    std::size_t wi = 0, wj = 0;
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b2 = a; b2 < m; ++b2) {
        std::size_t ta = sample[a], tb = sample[b2];
        double before = kernel_at(k, space, space.point(band[ta]), space.point(band[tb]),
                                  pointwise);
        double after = kernel_at(k, space, images[ta], images[tb], pointwise);
        double excess = after - before;
        if (excess > worst) {
          worst = excess;
          wi = band[ta];
          wj = band[tb];
        }
      }
    }
    cr.passed = worst <= slack;
    cr.margin = slack - worst;
    if (!cr.passed)
      cr.detail = "k(T p, T q) exceeds k(p, q) by " + std::to_string(worst) + " at (" +
                  std::to_string(wi) + "," + std::to_string(wj) + ")";
    verdict.conditions.push_back(std::move(cr));
  }

  // --- condition: measure expansion ----------------------------------------
  {
    ConditionReport cr;
    cr.name = "measure_expansion";
    cr.passed = true;
    double min_ratio = std::numeric_limits<double>::infinity();
    std::string worst_set;

    // Each source cell is subsampled at half-cell granularity before
    // mapping, so the snapped image cells rasterize the image region rather
    // than the image points (expansion would be invisible otherwise: n
    // sample points can never hit more than n cells). Exact for per-axis
    // stretches up to 2.
    std::vector<double> substep(dim, 0.0);
    for (int ax = 0; ax < dim; ++ax) {
      const auto& pts = space.axis_points()[ax];
      substep[ax] = pts.size() >= 2
                        ? 0.25 * (space.axes()[ax].kind == AxisKind::Periodic
                                      ? space.axes()[ax].period / pts.size()
                                      : pts[1] - pts[0])
                        : 0.0;
    }
    auto pushforward_ratio = [&](const std::vector<std::size_t>& positions) {
      double mass = 0.0;
      std::unordered_map<std::size_t, double> cells;
      std::vector<double> shifted(dim);
      for (std::size_t t : positions) {
        mass += space.weight(band[t]);
        std::span<const double> p = space.point(band[t]);
        const AffinePiece& piece = piece_for(band_comp[t]);
        for (unsigned corner = 0; corner < (1u << dim); ++corner) {
          for (int ax = 0; ax < dim; ++ax)
            shifted[ax] = p[ax] + ((corner >> ax) & 1u ? substep[ax] : -substep[ax]);
          std::vector<double> y = space.wrap(apply_piece(piece, shifted));
          cells.try_emplace(space.nearest_index(y), 0.0);
        }
      }
      double image_mass = 0.0;
      for (const auto& kv : cells) image_mass += space.weight(kv.first);
      return mass > 0.0 ? image_mass / mass : 0.0;
    };

    // full component bands
    std::vector<std::vector<std::size_t>> band_by_comp(comps.size());
    for (std::size_t t = 0; t < band.size(); ++t)
      band_by_comp[static_cast<std::size_t>(band_comp[t])].push_back(t);
    for (std::size_t ci = 0; ci < band_by_comp.size(); ++ci) {
      if (band_by_comp[ci].empty()) continue;
      double r = pushforward_ratio(band_by_comp[ci]);
      if (r < min_ratio) {
        min_ratio = r;
        worst_set = "component band " + std::to_string(ci);
      }
      if (r < spec.c * (1.0 - opts.pushforward_slack)) cr.passed = false;
    }
    // metric balls inside the band
    std::uniform_int_distribution<std::size_t> pick(0, band.size() - 1);
    for (int s = 0; s < opts.ball_sets; ++s) {
      std::size_t center = pick(rng);
      std::vector<std::size_t> positions;
      for (std::size_t t = 0; t < band.size(); ++t)
        if (band_comp[t] == band_comp[center] &&
            space.distance(band[t], band[center]) <= 0.5 * spec.eps1)
          positions.push_back(t);
      if (positions.size() < 8) continue;
      double r = pushforward_ratio(positions);
      if (r < min_ratio) {
        min_ratio = r;
        worst_set = "ball at grid index " + std::to_string(band[center]);
      }
      if (r < spec.c * (1.0 - opts.pushforward_slack)) cr.passed = false;
    }
    // Jacobian route: random unions of band points, mass scaled by |det J|
    double min_det = std::numeric_limits<double>::infinity();
    {
      std::vector<double> dets(band.size(), 0.0);
      std::vector<double> hstep(dim, 0.0);
      for (int ax = 0; ax < dim; ++ax) {
        const auto& pts = space.axis_points()[ax];
        hstep[ax] = pts.size() >= 2 ? 0.25 * std::fabs(pts[1] - pts[0]) : 1e-4;
        if (hstep[ax] <= 0.0) hstep[ax] = 1e-4;
      }
      std::size_t jac_samples = std::min<std::size_t>(band.size(), 4000);
      std::vector<std::size_t> order(band.size());
      for (std::size_t i = 0; i < band.size(); ++i) order[i] = i;
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<double> jac(dim * dim);
      for (std::size_t s = 0; s < jac_samples; ++s) {
        std::size_t t = order[s];
        const AffinePiece& piece = piece_for(band_comp[t]);
        std::span<const double> p = space.point(band[t]);
        std::vector<double> pp(p.begin(), p.end());
        for (int ax = 0; ax < dim; ++ax) {
          pp[ax] = p[ax] + hstep[ax];
          std::vector<double> yp = apply_piece(piece, pp);
          pp[ax] = p[ax] - hstep[ax];
          std::vector<double> ym = apply_piece(piece, pp);
          pp[ax] = p[ax];
          for (int r = 0; r < dim; ++r)
            jac[r * dim + ax] = (yp[r] - ym[r]) / (2.0 * hstep[ax]);
        }
        double dj = std::fabs(det_small(jac, dim));
        dets[t] = dj;
        min_det = std::min(min_det, dj);
      }
      if (min_det < spec.c * (1.0 - opts.jacobian_slack)) {
        cr.passed = false;
        if (min_det < min_ratio) {
          min_ratio = min_det;
          worst_set = "pointwise jacobian";
        }
      }
      // random unions reuse the sampled determinants
      std::size_t union_size = std::max<std::size_t>(8, band.size() / 16);
      for (int s = 0; s < opts.union_sets; ++s) {
        double mass = 0.0, expanded = 0.0;
        for (std::size_t j = 0; j < union_size; ++j) {
          std::size_t t = order[(s * union_size + j) % jac_samples];
          mass += space.weight(band[t]);
          expanded += dets[t] * space.weight(band[t]);
        }
        if (mass <= 0.0) continue;
        double r = expanded / mass;
        if (r < min_ratio) {
          min_ratio = r;
          worst_set = "random union " + std::to_string(s);
        }
        if (r < spec.c * (1.0 - opts.jacobian_slack)) cr.passed = false;
      }
    }
    cr.margin = min_ratio / spec.c;
    cr.detail = "min ratio " + std::to_string(min_ratio) + " vs c = " + std::to_string(spec.c) +
                (worst_set.empty() ? "" : " (" + worst_set + ")");
    verdict.conditions.push_back(std::move(cr));
  }

  // --- condition: separation ------------------------------------------------
  {
    ConditionReport cr;
    cr.name = "separation";
    std::vector<std::size_t> outside;
    for (std::size_t i = 0; i < n; ++i)
      if (!(d1[i] < spec.eps1)) outside.push_back(i);
    std::shuffle(outside.begin(), outside.end(), rng);
    std::size_t m = std::min<std::size_t>(opts.samples, outside.size());
    double mn = std::numeric_limits<double>::infinity();
    std::size_t wi = 0, wj = 0;
    for (std::size_t a : spec.set1.indices) {
      for (std::size_t t = 0; t < m; ++t) {
        double v = k.entry(a, outside[t]);
        if (v < mn) {
          mn = v;
          wi = a;
          wj = outside[t];
        }
      }
    }
    if (m == 0) mn = std::numeric_limits<double>::infinity();
    cr.passed = mn > std::max(2.0 * spec.set1.pairwise_max, 1e-12);
    cr.margin = mn;
    if (!cr.passed)
      cr.detail = "k = " + std::to_string(mn) + " at (" + std::to_string(wi) + "," +
                  std::to_string(wj) + ")";
    verdict.conditions.push_back(std::move(cr));
  }

  verdict.passed = true;
  for (const auto& c : verdict.conditions) verdict.passed = verdict.passed && c.passed;
  return verdict;
}

namespace {

constexpr double kHalfPi = 1.57079632679489661923;

}  // namespace

SelectionSpec make_two_rod_selection(const KernelMatrix& k, double c, double eps_delta) {
  const DiscreteSpace& sp = *k.space();
  if (sp.dim() != 2)
    throw std::invalid_argument("make_two_rod_selection: need a two-angle space");
  auto sin_delta = [&](std::span<const double> p) { return std::sin(p[0] - p[1]); };
  std::vector<std::size_t> a1 = indices_where(
      sp, [&](std::span<const double> p) { return std::fabs(sin_delta(p)) <= 1e-9; });
  std::vector<std::size_t> a0 = indices_where(
      sp, [&](std::span<const double> p) { return std::fabs(sin_delta(p) - 1.0) <= 1e-9; });
  SelectionSpec spec;
  spec.set1 = make_zero_set(k, std::move(a1), 1e-12);
  spec.set0 = make_zero_set(k, std::move(a0), 1e-12);
  spec.c = c;
  spec.eps1 = 0.5 * eps_delta;       // metric distance to the band axis is |delta|/2
  spec.eps0 = c * eps_delta * 1.01;  // image band has angular half-width 2 c eps_delta
  // piece for the delta ~ 0 band, then the delta ~ pi band
  AffinePiece p0, p1;
  p0.matrix = {c, 1.0 - c, 0.0, 1.0};
  p0.offset = {kHalfPi - c * eps_delta, 0.0};
  p1.matrix = {c, 1.0 - c, 0.0, 1.0};
  p1.offset = {kHalfPi - c * (2.0 * kHalfPi - eps_delta), 0.0};
  spec.pieces = {p0, p1};
  return spec;
}

SelectionSpec make_rhombus_selection(const KernelMatrix& k, double q, double c, double eps) {
  const DiscreteSpace& sp = *k.space();
  if (sp.dim() != 1)
    throw std::invalid_argument("make_rhombus_selection: need a one-dimensional space");
  if (!(q + eps < kHalfPi))
    throw std::invalid_argument("make_rhombus_selection: q + eps must stay below pi/2");
  std::size_t iq = sp.nearest_index(std::vector<double>{q});
  std::size_t itop = sp.nearest_index(std::vector<double>{kHalfPi});
  SelectionSpec spec;
  spec.set1 = make_zero_set(k, {iq}, 1e-12);
  spec.set0 = make_zero_set(k, {itop}, 1e-12);
  spec.c = c;
  spec.eps1 = eps;
  spec.eps0 = 2.0 * c * eps * 1.01;
  AffinePiece piece;
  piece.matrix = {c};
  piece.offset = {kHalfPi - c * (q + eps)};
  spec.pieces = {piece};
  return spec;
}

SelectionSpec make_identity_selection(const KernelMatrix& k, ZeroSet set1, double c,
                                      double eps) {
  const DiscreteSpace& sp = *k.space();
  const int dim = sp.dim();
  SelectionSpec spec;
  spec.set0 = set1;
  spec.set1 = std::move(set1);
  spec.c = c;
  spec.eps1 = eps;
  spec.eps0 = 1.5 * eps;
  AffinePiece piece;
  piece.matrix.assign(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int i = 0; i < dim; ++i) piece.matrix[static_cast<std::size_t>(i) * dim + i] = 1.0;
  piece.offset.assign(dim, 0.0);
  spec.pieces = {piece};
  return spec;
}

}  // namespace onsager
