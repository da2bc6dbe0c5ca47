#include "onsager/branch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace onsager {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 6.28318530717958647692;

/// sin values on the equispaced circle grid with the mirror symmetry
/// sin(theta_{n-j}) = -sin(theta_j) holding exactly in floating point.
std::vector<double> mirrored_sin_table(int n) {
  if (n < 4 || n % 2 != 0)
    throw std::invalid_argument("circle quadrature needs an even point count >= 4");
  std::vector<double> s(n);
  s[0] = 0.0;
  s[n / 2] = 0.0;
  for (int j = 1; j < n / 2; ++j) {
    s[j] = std::sin(kTwoPi * j / n);
    s[n - j] = -s[j];
  }
  return s;
}

/// Sum of term(j) over the circle grid, accumulated in mirror pairs so that
/// exactly antisymmetric integrands cancel to zero.
template <class Term>
double paired_circle_sum(int n, Term&& term) {
  double total = term(0) + term(n / 2);
  for (int j = 1; j < n / 2; ++j) total += term(j) + term(n - j);
  return total;
}

void check_range(double a, double bound, const char* what) {
  if (std::fabs(a) > bound + 1e-12)
    throw std::invalid_argument(std::string(what) + ": |a| exceeds the admissible bound");
}

double h_circle(double a, double b, int n) {
  check_range(a, 1.0, "h (example 1)");
  std::vector<double> s = mirrored_sin_table(n);
  double sum = paired_circle_sum(n, [&](int j) {
    double u = s[j] - a;
    return u * std::exp(-b * u * u);
  });
  return sum * (kTwoPi / n);
}

struct RodGrid {
  std::vector<double> x, wx;  // Gauss-Legendre on [0, L], weights sum to L
  std::vector<double> s;      // mirrored sin table
  int nt;
};

RodGrid rod_grid(double L, int nx, int nt) {
  RodGrid g;
  std::vector<double> nodes, wts;
  gauss_legendre(nx, nodes, wts);
  g.x.resize(nx);
  g.wx.resize(nx);
  for (int i = 0; i < nx; ++i) {
    g.x[i] = 0.5 * L * (nodes[i] + 1.0);
    g.wx[i] = 0.5 * L * wts[i];
  }
  g.s = mirrored_sin_table(nt);
  g.nt = nt;
  return g;
}

double h_rods_direct(double a, double b, double L, int nx, int nt) {
  check_range(a, L * L, "h (example 2)");
  RodGrid g = rod_grid(L, nx, nt);
  const double dth = kTwoPi / nt;
  double total = 0.0;
  for (int ix = 0; ix < nx; ++ix) {
    for (int iy = 0; iy < nx; ++iy) {
      double c = g.x[ix] * g.x[iy];
      double inner = paired_circle_sum(g.nt, [&](int j) {
        double u = c * g.s[j] - a;
        return u * std::exp(-b * u * u);
      });
      total += g.wx[ix] * g.wx[iy] * inner * dth;
    }
  }
  return total / (kTwoPi * L * L);
}

}  // namespace

double weighted_average_circle(const std::function<double(double)>& phi, double a,
                               double b, int n) {
  if (b < 0.0) throw std::invalid_argument("weighted_average: b must be nonnegative");
  std::vector<double> s = mirrored_sin_table(n);
  double m = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    double u = s[j] - a;
    m = std::min(m, u * u);
  }
  double num = 0.0, den = 0.0;
  for (int j = 0; j < n; ++j) {
    double u = s[j] - a;
    double w = std::exp(-b * (u * u - m));
    num += phi(kTwoPi * j / n) * w;
    den += w;
  }
  return num / den;
}

double weighted_average_rods(const std::function<double(double, double, double)>& phi,
                             double a, double b, double max_length, int nx, int nt) {
  if (b < 0.0) throw std::invalid_argument("weighted_average: b must be nonnegative");
  RodGrid g = rod_grid(max_length, nx, nt);
  // minimum of (x1 x2 sin - a)^2 over the grid, for max subtraction
  double m = std::numeric_limits<double>::infinity();
  for (int ix = 0; ix < nx; ++ix)
    for (int iy = 0; iy < nx; ++iy)
      for (int j = 0; j < nt; ++j) {
        double u = g.x[ix] * g.x[iy] * g.s[j] - a;
        m = std::min(m, u * u);
      }
  double num = 0.0, den = 0.0;
  for (int ix = 0; ix < nx; ++ix)
    for (int iy = 0; iy < nx; ++iy)
      for (int j = 0; j < nt; ++j) {
        double u = g.x[ix] * g.x[iy] * g.s[j] - a;
        double w = g.wx[ix] * g.wx[iy] * std::exp(-b * (u * u - m));
        num += phi(g.x[ix], g.x[iy], kTwoPi * j / nt) * w;
        den += w;
      }
  return num / den;
}

double h(double a, double b, int example, const BranchOptions& opts) {
  if (b < 0.0) throw std::invalid_argument("h: b must be nonnegative");
  if (example == 1) return h_circle(a, b, opts.circle_points);
  if (example == 2)
    return h_rods_direct(a, b, opts.max_length, opts.rod_gauss_points, opts.rod_theta_points);
  throw std::invalid_argument("h: example must be 1 or 2");
}

double h_reduced_rods(double a, double b, const BranchOptions& opts) {
  const double L = opts.max_length;
  check_range(a, L * L, "h_reduced_rods");
  if (b < 0.0) throw std::invalid_argument("h_reduced_rods: b must be nonnegative");
  if (b == 0.0) return -a;  // integral of u over the normalized measure
  const int nx = opts.reduced_gauss_points, nt = opts.reduced_theta_points;
  RodGrid g = rod_grid(L, nx, nt);
  const double dth = kTwoPi / nt;
  const double ea2 = std::exp(-b * a * a);
  double total = 0.0;
  for (int ix = 0; ix < nx; ++ix) {
    double x = g.x[ix];
    for (int j = 0; j < nt; ++j) {
      double sth = g.s[j];
      double s = L * x * sth;
      double z = b * s * (s - 2.0 * a);
      double psi;
      if (std::fabs(z) < 1e-4) {
        // (1 - exp(-z)) / (x sin) = b L (s - 2a) (1 - z/2 + z^2/6 - ...)
        psi = ea2 * b * L * (s - 2.0 * a) * (1.0 - z / 2.0 + z * z / 6.0);
      } else {
        double u = s - a;
        psi = (ea2 - std::exp(-b * u * u)) / (x * sth);
      }
      total += g.wx[ix] * psi * dth;
    }
  }
  return total / (4.0 * kPi * b * L * L);
}

namespace {

double root_bound(int example, const BranchOptions& opts) {
  if (example == 1) return 1.0;
  if (example == 2) return opts.max_length * opts.max_length;
  throw std::invalid_argument("example must be 1 or 2");
}

double gamma_of(double a, double b, int example, const BranchOptions& opts) {
  if (example == 1)
    return weighted_average_circle([](double t) { double s = std::sin(t); return s * s; }, a,
                                   b, opts.circle_points);
  return weighted_average_rods(
      [](double x1, double x2, double t) {
        double s = x1 * x2 * std::sin(t);
        return s * s;
      },
      a, b, opts.max_length, opts.rod_gauss_points, opts.rod_theta_points);
}

}  // namespace

std::vector<BranchPoint> find_branches(double b, int example, const BranchOptions& opts) {
  if (b < 0.0) throw std::invalid_argument("find_branches: b must be nonnegative");
  const double A = root_bound(example, opts);
  const int m = std::max(opts.scan_resolution, 3);

  // fast evaluator for scanning, accurate evaluator for refinement
  auto refine_eval = [&](double a) { return h(a, b, example, opts); };
  auto scan_eval = [&](double a) {
    return example == 2 ? h_reduced_rods(a, b, opts) : h(a, b, example, opts);
  };

  std::vector<double> grid(m), val(m);
  for (int k = 0; k < m; ++k) {
    grid[k] = -A + 2.0 * A * k / (m - 1);
    if (2 * k == m - 1) grid[k] = 0.0;
    val[k] = scan_eval(grid[k]);
  }

  std::vector<double> roots;
  for (int k = 0; k < m; ++k) {
    if (val[k] == 0.0) {
      roots.push_back(grid[k]);
      continue;
    }
    if (k + 1 < m && val[k] * val[k + 1] < 0.0) {
      double lo = grid[k], hi = grid[k + 1], flo = refine_eval(lo);
      if (flo == 0.0) {
        roots.push_back(lo);
        continue;
      }
      double fhi = refine_eval(hi);
      if (flo * fhi > 0.0) {
        // scan and refine evaluators disagree on the bracket; trust the scan
        flo = val[k];
        fhi = val[k + 1];
        for (int it = 0; it < 100 && hi - lo > opts.bisection_tol; ++it) {
          double mid = 0.5 * (lo + hi), fm = scan_eval(mid);
          if (flo * fm <= 0.0) { hi = mid; } else { lo = mid; flo = fm; }
        }
      } else {
        for (int it = 0; it < 100 && hi - lo > opts.bisection_tol; ++it) {
          double mid = 0.5 * (lo + hi), fm = refine_eval(mid);
          if (flo * fm <= 0.0) { hi = mid; } else { lo = mid; flo = fm; }
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
  }

  // merge near-zero roots into the exact a = 0 root, dedupe the rest
  std::vector<double> merged;
  for (double r : roots)
    if (std::fabs(r) >= opts.zero_merge_tol) merged.push_back(r);
  merged.push_back(0.0);  // a = 0 is always a root
  std::sort(merged.begin(), merged.end());
  std::vector<double> unique_roots;
  for (double r : merged)
    if (unique_roots.empty() || std::fabs(r - unique_roots.back()) > opts.dedupe_tol)
      unique_roots.push_back(r);

  const double step = 2.0 * A / (m - 1);
  std::vector<BranchPoint> out;
  for (double r : unique_roots) {
    BranchPoint bp;
    bp.b = b;
    bp.a = r;
    bp.h_value = std::fabs(refine_eval(r));
    bp.gamma = gamma_of(r, b, example, opts);
    double left = std::max(r - step, -A), right = std::min(r + step, A);
    double hl = refine_eval(left), hr = refine_eval(right);
    bp.sign_left = hl > 0.0 ? 1 : (hl < 0.0 ? -1 : 0);
    bp.sign_right = hr > 0.0 ? 1 : (hr < 0.0 ? -1 : 0);
    out.push_back(bp);
  }
  return out;
}

std::vector<BranchSweepRow> branch_sweep(const std::vector<double>& b_schedule,
                                         int example, const BranchOptions& opts) {
  for (std::size_t i = 1; i < b_schedule.size(); ++i)
    if (!(b_schedule[i] > b_schedule[i - 1]))
      throw std::invalid_argument("branch_sweep: schedule must be strictly increasing");
  std::vector<BranchSweepRow> rows;
  for (double b : b_schedule) rows.push_back({b, find_branches(b, example, opts)});
  return rows;
}

namespace {

std::vector<double> gibbs_from_field(const std::vector<double>& u, double b) {
  double m = std::numeric_limits<double>::infinity();
  for (double x : u) m = std::min(m, x * x);
  std::vector<double> v(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) v[i] = std::exp(-b * (u[i] * u[i] - m));
  return v;
}

}  // namespace

Density example1_density(const SpacePtr& space, double a, double b) {
  if (!space || space->dim() != 2)
    throw std::invalid_argument("example1_density: need a two-angle space");
  std::vector<double> u(space->size());
  for (std::size_t i = 0; i < space->size(); ++i)
    u[i] = std::sin(space->coord(i, 0) - space->coord(i, 1)) - a;
  return Density::normalized(space, gibbs_from_field(u, b));
}

Density example2_density(const SpacePtr& space, double a, double b) {
  if (!space || space->dim() != 4)
    throw std::invalid_argument("example2_density: need a (length^2 x angle^2) space");
  std::vector<double> u(space->size());
  for (std::size_t i = 0; i < space->size(); ++i)
    u[i] = space->coord(i, 0) * space->coord(i, 1) *
               std::sin(space->coord(i, 2) - space->coord(i, 3)) -
           a;
  return Density::normalized(space, gibbs_from_field(u, b));
}

double order_parameter(const Density& f, int example) {
  const DiscreteSpace& sp = *f.space();
  double acc = 0.0;
  if (example == 1) {
    if (sp.dim() != 2) throw std::invalid_argument("order_parameter: need a two-angle space");
    for (std::size_t i = 0; i < sp.size(); ++i)
      acc += std::sin(sp.coord(i, 0) - sp.coord(i, 1)) * f[i] * sp.weight(i);
  } else if (example == 2) {
    if (sp.dim() != 4)
      throw std::invalid_argument("order_parameter: need a (length^2 x angle^2) space");
    for (std::size_t i = 0; i < sp.size(); ++i)
      acc += sp.coord(i, 0) * sp.coord(i, 1) *
             std::sin(sp.coord(i, 2) - sp.coord(i, 3)) * f[i] * sp.weight(i);
  } else {
    throw std::invalid_argument("order_parameter: example must be 1 or 2");
  }
  return acc;
}

}  // namespace onsager
