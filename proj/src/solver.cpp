#include "onsager/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>

#include "onsager/transport.hpp"

namespace onsager {

namespace {

void require_same_space(const KernelMatrix& k, const Density& f, const char* where) {
  if (k.space() == f.space()) return;
  if (k.space()->descriptor_hash() == f.space()->descriptor_hash() &&
      k.space()->size() == f.space()->size())
    return;
  throw std::invalid_argument(std::string(where) + ": density space does not match kernel space");
}

double energy_of(const std::vector<double>& f, const std::vector<double>& U,
                 const std::vector<double>& w, double b) {
  double e = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    double v = f[i];
    double ent = v > 0.0 ? v * std::log(v) : 0.0;
    e += (ent + 0.5 * b * U[i] * v) * w[i];
  }
  return e;
}

std::vector<double> potential_of(const KernelMatrix& k, const std::vector<double>& f,
                                 const std::vector<double>& w) {
  std::vector<double> fw(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) fw[i] = f[i] * w[i];
  return k.apply(fw);
}

}  // namespace

std::vector<double> potential(const KernelMatrix& k, const Density& f) {
  require_same_space(k, f, "potential");
  return potential_of(k, f.values(), f.space()->weights());
}

double free_energy(const KernelMatrix& k, const Density& f, double b) {
  require_same_space(k, f, "free_energy");
  if (b < 0.0) throw std::invalid_argument("free_energy: b must be nonnegative");
  std::vector<double> U = potential(k, f);
  return energy_of(f.values(), U, f.space()->weights(), b);
}

double OnsagerImage::partition() const { return std::exp(log_partition); }
double OnsagerState::partition() const { return std::exp(log_partition); }

namespace {

/// Gibbs step from a potential: g = exp(-b U) / Z, via max subtraction.
/// Returns log Z alongside the normalized values.
std::pair<std::vector<double>, double> gibbs_of(const std::vector<double>& U,
                                                const std::vector<double>& w, double b) {
  const std::size_t n = U.size();
  std::vector<double> g(n);
  double vmax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) vmax = std::max(vmax, -b * U[i]);
  double zs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = std::exp(-b * U[i] - vmax);
    zs += g[i] * w[i];
  }
  for (std::size_t i = 0; i < n; ++i) g[i] /= zs;
  return {std::move(g), std::log(zs) + vmax};
}

}  // namespace

OnsagerImage onsager_map(const KernelMatrix& k, const Density& f, double b) {
  require_same_space(k, f, "onsager_map");
  if (b < 0.0) throw std::invalid_argument("onsager_map: b must be nonnegative");
  const auto& w = f.space()->weights();
  std::vector<double> U = potential(k, f);
  auto [g, logz] = gibbs_of(U, w, b);
  return OnsagerImage{Density(f.space(), std::move(g)), logz};
}

Density make_init(const SpacePtr& space, const InitSpec& init) {
  if (!space) throw std::invalid_argument("make_init: null space");
  const std::size_t n = space->size();
  switch (init.kind) {
    case InitSpec::Kind::Uniform:
      return Density::uniform(space);
    case InitSpec::Kind::Perturbed: {
      std::vector<double> v(n);
      const double a = init.amplitude;
      if (space->dim() >= 2) {
        for (std::size_t i = 0; i < n; ++i) {
          int ax0 = space->dim() - 2, ax1 = space->dim() - 1;
          v[i] = 1.0 + a * std::sin(space->coord(i, ax0) - space->coord(i, ax1));
        }
      } else {
        const Axis& ax = space->axes()[0];
        const double two_pi = 6.283185307179586476925287;
        for (std::size_t i = 0; i < n; ++i) {
          double t = ax.kind == AxisKind::Periodic
                         ? space->coord(i, 0) * (two_pi / ax.period)
                         : (space->coord(i, 0) - ax.lo) / ax.length() * two_pi;
          v[i] = 1.0 + a * std::sin(t);
        }
      }
      for (double& x : v) x = std::max(x, 1e-12);
      return Density::normalized(space, std::move(v));
    }
    case InitSpec::Kind::Random: {
      std::mt19937 rng(init.seed);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = std::max(1.0 + init.amplitude * u(rng), 1e-12);
      return Density::normalized(space, std::move(v));
    }
    case InitSpec::Kind::Tabulated:
      return Density::normalized(space, init.values);
  }
  throw std::invalid_argument("make_init: unknown init kind");
}

void SolverConfig::check() const {
  if (!(damping > 0.0) || damping > 1.0)
    throw std::invalid_argument("solver config: damping must lie in (0, 1]");
  if (!(tolerance > 0.0)) throw std::invalid_argument("solver config: tolerance must be positive");
  if (max_iterations < 1)
    throw std::invalid_argument("solver config: max_iterations must be >= 1");
  for (std::size_t i = 0; i < b_schedule.size(); ++i) {
    if (b_schedule[i] < 0.0)
      throw std::invalid_argument("solver config: b_schedule entries must be >= 0");
    if (i > 0 && !(b_schedule[i] > b_schedule[i - 1]))
      throw std::invalid_argument("solver config: b_schedule must be strictly increasing");
  }
}

OnsagerState solve(const KernelMatrix& k, const SolverConfig& cfg, double b,
                   const Density& init, std::vector<SolveTracePoint>* trace) {
  cfg.check();
  require_same_space(k, init, "solve");
  if (b < 0.0) throw std::invalid_argument("solve: b must be nonnegative");
  const auto& w = init.space()->weights();
  const std::size_t n = init.size();

  std::vector<double> f = init.values();
  std::vector<double> U = potential_of(k, f, w);
  double energy = energy_of(f, U, w, b);
  double logz = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  SolveStatus status = SolveStatus::MaxIterations;

  for (it = 0; it < cfg.max_iterations; ++it) {
    auto [g, lz] = gibbs_of(U, w, b);
    logz = lz;
    residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) residual += std::fabs(f[i] - g[i]) * w[i];
    if (trace) trace->push_back({it, energy, residual, 0.0});
    if (residual < cfg.tolerance) {
      f = std::move(g);  // report the Gibbs image: exactly normalized, positive
      U = potential_of(k, f, w);
      energy = energy_of(f, U, w, b);
      status = SolveStatus::Converged;
      ++it;
      break;
    }
    // damped step with energy-descent safeguard
    double theta = cfg.damping;
    std::vector<double> trial(n);
    double trial_energy = 0.0;
    std::vector<double> trial_U;
    for (;;) {
      double mass = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        trial[i] = (1.0 - theta) * f[i] + theta * g[i];
        mass += trial[i] * w[i];
      }
      for (std::size_t i = 0; i < n; ++i) trial[i] /= mass;
      trial_U = potential_of(k, trial, w);
      trial_energy = energy_of(trial, trial_U, w, b);
      if (trial_energy <= energy + 1e-14 * std::max(1.0, std::fabs(energy))) break;
      theta *= 0.5;
      if (theta < cfg.min_damping) break;  // numerical stagnation; accept
    }
    if (trace) trace->back().damping_used = theta;
    f = std::move(trial);
    U = std::move(trial_U);
    energy = trial_energy;
  }

  OnsagerState st{Density(init.space(), std::move(f)), std::move(U), b,
                  logz,  energy, residual, it, status};
  return st;
}

double gateaux_check(const KernelMatrix& k, const Density& f, double b,
                     int directions, double step, unsigned seed) {
  require_same_space(k, f, "gateaux_check");
  if (f.min_value() <= 0.0)
    throw std::invalid_argument("gateaux_check: density must be strictly positive");
  const auto& w = f.space()->weights();
  const std::size_t n = f.size();
  std::vector<double> U = potential(k, f);

  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int d = 0; d < directions; ++d) {
    std::vector<double> h(n);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = u(rng);
      mean += h[i] * w[i];
    }
    for (std::size_t i = 0; i < n; ++i) h[i] -= mean;  // mean-zero direction
    // keep f +- step*h strictly positive
    double hmax = 0.0;
    for (double x : h) hmax = std::max(hmax, std::fabs(x));
    double cap = 0.45 * f.min_value() / (step * std::max(hmax, 1e-300));
    if (cap < 1.0)
      for (double& x : h) x *= cap;

    double analytic = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      analytic += (std::log(f[i]) + 1.0 + b * U[i]) * h[i] * w[i];

    auto shifted = [&](double sgn) {
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = f[i] + sgn * step * h[i];
      Density d2(f.space(), std::move(v));
      return free_energy(k, d2, b);
    };
    double fd = (shifted(+1.0) - shifted(-1.0)) / (2.0 * step);
    double dev = std::fabs(analytic - fd) / std::max(1.0, std::fabs(analytic));
    worst = std::max(worst, dev);
  }
  return worst;
}

double projected_variation_sup(const KernelMatrix& k, const OnsagerState& state) {
  const Density& f = state.density;
  require_same_space(k, f, "projected_variation_sup");
  const auto& w = f.space()->weights();
  const std::size_t n = f.size();
  std::vector<double> v(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (f[i] <= 0.0)
      throw std::invalid_argument("projected_variation_sup: density must be strictly positive");
    v[i] = std::log(f[i]) + 1.0 + state.b * state.potential[i];
    mean += v[i] * w[i];
  }
  double sup = 0.0;
  for (std::size_t i = 0; i < n; ++i) sup = std::max(sup, std::fabs(v[i] - mean));
  return sup;
}

ContinuationResult continue_in_b(const KernelMatrix& k, const SolverConfig& cfg,
                                 bool compute_bl,
                                 std::vector<std::vector<SolveTracePoint>>* traces) {
  cfg.check();
  if (cfg.b_schedule.empty())
    throw std::invalid_argument("continue_in_b: b_schedule must not be empty");
  ContinuationResult out;
  Density current = make_init(k.space(), cfg.init);
  bool have_prev = false;
  for (double b : cfg.b_schedule) {
    std::vector<SolveTracePoint>* tr = nullptr;
    if (traces) {
      traces->emplace_back();
      tr = &traces->back();
    }
    OnsagerState st = solve(k, cfg, b, current, tr);
    double two_over_b = b > 0.0 ? 2.0 * st.energy / b : 0.0;
    double bl_prev = -1.0;
    if (compute_bl && have_prev) bl_prev = bl_distance(current, st.density);
    if (!st.converged()) out.all_converged = false;
    current = st.density;
    have_prev = true;
    out.steps.push_back(ContinuationStep{std::move(st), two_over_b, bl_prev});
  }
  return out;
}

}  // namespace onsager
