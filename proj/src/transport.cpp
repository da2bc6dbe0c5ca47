#include "onsager/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace onsager {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMassEps = 1e-15;

/// Min-cost transport of `supply` at source points to `demand` at sink
/// points with dense costs, by successive shortest paths with potentials.
double ssp_transport(const std::vector<double>& supply, const std::vector<double>& demand,
                     const std::vector<std::vector<double>>& cost) {
  const std::size_t ns = supply.size(), nt = demand.size();
  if (ns == 0 || nt == 0) return 0.0;
  std::vector<double> rem_s = supply, rem_t = demand;
  std::vector<std::vector<double>> flow(ns, std::vector<double>(nt, 0.0));
  // node ids: sources [0, ns), sinks [ns, ns+nt)
  const std::size_t nv = ns + nt;
  std::vector<double> pot(nv, 0.0), dist(nv);
  std::vector<int> prev(nv);
  std::vector<char> done(nv);

  double total_remaining = 0.0;
  for (double s : rem_s) total_remaining += s;

  std::size_t guard = 200 * (nv + 4);
  while (total_remaining > kMassEps && guard-- > 0) {
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(prev.begin(), prev.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (std::size_t i = 0; i < ns; ++i)
      if (rem_s[i] > kMassEps) dist[i] = 0.0;
    // dense Dijkstra
    for (std::size_t round = 0; round < nv; ++round) {
      std::size_t u = nv;
      double best = kInf;
      for (std::size_t v = 0; v < nv; ++v)
        if (!done[v] && dist[v] < best) {
          best = dist[v];
          u = v;
        }
      if (u == nv) break;
      done[u] = 1;
      if (u < ns) {
        for (std::size_t j = 0; j < nt; ++j) {
          double rc = cost[u][j] + pot[u] - pot[ns + j];
          if (rc < 0.0) rc = 0.0;  // floating-point guard
          if (dist[u] + rc < dist[ns + j]) {
            dist[ns + j] = dist[u] + rc;
            prev[ns + j] = static_cast<int>(u);
          }
        }
      } else {
        std::size_t j = u - ns;
        for (std::size_t i = 0; i < ns; ++i) {
          if (flow[i][j] <= kMassEps) continue;
          double rc = -cost[i][j] + pot[ns + j] - pot[i];
          if (rc < 0.0) rc = 0.0;
          if (dist[u] + rc < dist[i]) {
            dist[i] = dist[u] + rc;
            prev[i] = static_cast<int>(u);
          }
        }
      }
    }
    // closest reachable unsaturated sink
    std::size_t tgt = nv;
    double bestd = kInf;
    for (std::size_t j = 0; j < nt; ++j)
      if (rem_t[j] > kMassEps && dist[ns + j] < bestd) {
        bestd = dist[ns + j];
        tgt = ns + j;
      }
    if (tgt == nv) throw std::runtime_error("transport: no augmenting path (unbalanced?)");
    // bottleneck along the path
    double delta = rem_t[tgt - ns];
    for (std::size_t v = tgt; prev[v] != -1;) {
      std::size_t u = static_cast<std::size_t>(prev[v]);
      if (v >= ns)
        /* forward arc u(source) -> v(sink): uncapped */;
      else
        delta = std::min(delta, flow[v][u - ns]);
      v = u;
      if (prev[v] == -1 && v < ns) delta = std::min(delta, rem_s[v]);
    }
    // apply
    for (std::size_t v = tgt; prev[v] != -1;) {
      std::size_t u = static_cast<std::size_t>(prev[v]);
      if (v >= ns)
        flow[u][v - ns] += delta;
      else
        flow[v][u - ns] -= delta;
      v = u;
      if (prev[v] == -1 && v < ns) rem_s[v] -= delta;
    }
    rem_t[tgt - ns] -= delta;
    total_remaining -= delta;
    // update potentials (Johnson), preserving nonnegative reduced costs
    for (std::size_t v = 0; v < nv; ++v) pot[v] += std::min(dist[v], bestd);
  }
  if (total_remaining > 1e-9)
    throw std::runtime_error("transport: failed to route all mass");
  double c = 0.0;
  for (std::size_t i = 0; i < ns; ++i)
    for (std::size_t j = 0; j < nt; ++j) c += flow[i][j] * cost[i][j];
  return c;
}

/// Exact 1-D optimal transport via cumulative distributions; valid when the
/// metric is the plain coordinate distance and the diameter fits under the
/// cost cap.
double transport_1d(const DiscreteSpace& sp, const std::vector<double>& a,
                    const std::vector<double>& b) {
  const std::size_t n = sp.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return sp.coord(i, 0) < sp.coord(j, 0); });
  double acc = 0.0, total = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    acc += a[order[k]] - b[order[k]];
    total += std::fabs(acc) * (sp.coord(order[k + 1], 0) - sp.coord(order[k], 0));
  }
  return total;
}

bool is_plain_interval_1d(const DiscreteSpace& sp, double cost_cap) {
  if (sp.dim() != 1) return false;
  if (sp.axes()[0].kind != AxisKind::Interval) return false;
  return sp.axes()[0].length() <= cost_cap;
}

struct Aggregated {
  SpacePtr space;          // coarse representative points live on the fine space's axes
  std::vector<double> fa;  // aggregated point masses of f
  std::vector<double> ga;
  double snap_radius = 0.0;
};

/// Aggregate both measures onto a coarse per-axis tensor grid; the metric
/// displacement of any mass unit is at most snap_radius.
Aggregated aggregate(const Density& f, const Density& g, std::size_t node_limit) {
  const DiscreteSpace& sp = *f.space();
  const int dim = sp.dim();
  // pick per-axis coarse resolutions with product <= node_limit, always
  // refining the axis with the currently largest cell
  std::vector<std::size_t> coarse(dim);
  for (int ax = 0; ax < dim; ++ax)
    coarse[ax] = std::min<std::size_t>(2, sp.axis_points()[ax].size());
  for (;;) {
    std::size_t prod = 1;
    for (int ax = 0; ax < dim; ++ax) prod *= coarse[ax];
    int grow_ax = -1;
    double worst = -1.0;
    for (int ax = 0; ax < dim; ++ax) {
      if (coarse[ax] >= sp.axis_points()[ax].size()) continue;
      if (prod / coarse[ax] * (coarse[ax] + 1) > node_limit) continue;
      double cell = sp.axes()[ax].length() / coarse[ax];
      if (cell > worst) {
        worst = cell;
        grow_ax = ax;
      }
    }
    if (grow_ax < 0) break;
    coarse[grow_ax] += 1;
  }
  std::vector<std::vector<double>> centers(dim);
  double snap = 0.0;
  std::vector<double> half(dim);
  for (int ax = 0; ax < dim; ++ax) {
    const Axis& a = sp.axes()[ax];
    std::size_t m = coarse[ax];
    double h = a.length() / m;
    centers[ax].resize(m);
    for (std::size_t j = 0; j < m; ++j)
      centers[ax][j] =
          a.kind == AxisKind::Periodic ? h * j : a.lo + h * (j + 0.5);
    half[ax] = 0.5 * h;
  }
  if (sp.metric_rule() == MetricRule::Max) {
    for (int ax = 0; ax < dim; ++ax) snap = std::max(snap, half[ax]);
  } else {
    double s = 0.0;
    for (int ax = 0; ax < dim; ++ax) s += half[ax] * half[ax];
    snap = std::sqrt(s);
  }
  std::size_t total = 1;
  for (int ax = 0; ax < dim; ++ax) total *= coarse[ax];
  std::vector<double> fa(total, 0.0), ga(total, 0.0);
  std::vector<double> coords(total * dim);
  std::vector<std::size_t> idx(dim, 0);
  for (std::size_t c = 0; c < total; ++c) {
    for (int ax = 0; ax < dim; ++ax) coords[c * dim + ax] = centers[ax][idx[ax]];
    for (int ax = dim - 1; ax >= 0; --ax) {
      if (++idx[ax] < coarse[ax]) break;
      idx[ax] = 0;
    }
  }
  for (std::size_t i = 0; i < sp.size(); ++i) {
    std::size_t cell = 0;
    for (int ax = 0; ax < dim; ++ax) {
      const Axis& a = sp.axes()[ax];
      double x = sp.coord(i, ax);
      std::size_t j;
      if (a.kind == AxisKind::Periodic) {
        double h = a.length() / coarse[ax];
        auto jj = static_cast<long long>(std::llround(x / h));
        jj %= static_cast<long long>(coarse[ax]);
        if (jj < 0) jj += static_cast<long long>(coarse[ax]);
        j = static_cast<std::size_t>(jj);
      } else {
        double h = a.length() / coarse[ax];
        double t = (x - a.lo) / h - 0.5;
        long long jj = std::llround(t);
        jj = std::max(0LL, std::min<long long>(jj, static_cast<long long>(coarse[ax]) - 1));
        j = static_cast<std::size_t>(jj);
      }
      cell = cell * coarse[ax] + j;
    }
    fa[cell] += f[i] * sp.weight(i);
    ga[cell] += g[i] * sp.weight(i);
  }
  // coarse points reuse the fine axes' metric; weights equal f-masses so the
  // DiscreteSpace invariant (weights sum to 1) holds
  std::vector<std::vector<double>> axis_points = centers;
  double fsum = 0.0;
  for (double v : fa) fsum += v;
  std::vector<double> wts(total, 0.0);
  for (std::size_t c = 0; c < total; ++c) wts[c] = fa[c] / fsum;
  auto coarse_space = std::make_shared<DiscreteSpace>(sp.axes(), sp.metric_rule(),
                                                      std::move(coords), std::move(wts),
                                                      std::move(axis_points));
  return Aggregated{coarse_space, std::move(fa), std::move(ga), snap};
}

double exact_bl(const DiscreteSpace& sp, const std::vector<double>& fmass,
                const std::vector<double>& gmass, double cost_cap) {
  std::vector<std::size_t> src, snk;
  std::vector<double> supply, demand;
  for (std::size_t i = 0; i < fmass.size(); ++i) {
    double d = fmass[i] - gmass[i];
    if (d > kMassEps) {
      src.push_back(i);
      supply.push_back(d);
    } else if (d < -kMassEps) {
      snk.push_back(i);
      demand.push_back(-d);
    }
  }
  if (src.empty() || snk.empty()) return 0.0;
  std::vector<std::vector<double>> cost(src.size(), std::vector<double>(snk.size()));
  for (std::size_t i = 0; i < src.size(); ++i)
    for (std::size_t j = 0; j < snk.size(); ++j)
      cost[i][j] = std::min(sp.distance(src[i], snk[j]), cost_cap);
  return ssp_transport(supply, demand, cost);
}

}  // namespace

BlResult bl_distance_detailed(const Density& f, const Density& g, const BlOptions& opts) {
  if (!same_space(f, g))
    throw std::invalid_argument("bl_distance: densities live on different spaces");
  const DiscreteSpace& sp = *f.space();
  const std::size_t n = sp.size();

  if (is_plain_interval_1d(sp, opts.cost_cap)) {
    std::vector<double> fm(n), gm(n);
    for (std::size_t i = 0; i < n; ++i) {
      fm[i] = f[i] * sp.weight(i);
      gm[i] = g[i] * sp.weight(i);
    }
    return BlResult{transport_1d(sp, fm, gm), true, 0.0};
  }

  // count excess/deficit support
  std::size_t nodes = 0;
  std::vector<double> fm(n), gm(n);
  for (std::size_t i = 0; i < n; ++i) {
    fm[i] = f[i] * sp.weight(i);
    gm[i] = g[i] * sp.weight(i);
    if (std::fabs(fm[i] - gm[i]) > kMassEps) ++nodes;
  }
  if (nodes <= opts.exact_node_limit)
    return BlResult{exact_bl(sp, fm, gm, opts.cost_cap), true, 0.0};

  Aggregated agg = aggregate(f, g, opts.exact_node_limit);
  double coarse = exact_bl(*agg.space, agg.fa, agg.ga, opts.cost_cap);
  double slack = 2.0 * agg.snap_radius;
  return BlResult{coarse + slack, false, slack};
}

double bl_distance(const Density& f, const Density& g, const BlOptions& opts) {
  return bl_distance_detailed(f, g, opts).value;
}

}  // namespace onsager
