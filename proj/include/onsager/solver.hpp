#pragma once

#include <span>
#include <string>
#include <vector>

#include "onsager/kernel.hpp"
#include "onsager/space.hpp"

namespace onsager {

/// Mean-field potential U[f](p_i) = sum_j k(p_i, p_j) f_j w_j.
/// Entries lie in [0, sup_norm] and inherit the kernel's Lipschitz bound.
std::vector<double> potential(const KernelMatrix& k, const Density& f);

/// Free energy  E_b[f] = integral (log f + (b/2) U[f]) f dmu,  b >= 0.
/// Nonnegative for every valid density.
double free_energy(const KernelMatrix& k, const Density& f, double b);

struct OnsagerImage {
  Density density;
  double log_partition = 0.0;
  double partition() const;
};

/// One application of the fixed-point map f -> Z^-1 exp(-b U[f]), evaluated
/// in the log domain with max subtraction so large b cannot overflow.
OnsagerImage onsager_map(const KernelMatrix& k, const Density& f, double b);

enum class SolveStatus { Converged, MaxIterations };

struct OnsagerState {
  Density density;
  std::vector<double> potential;  // U[density]
  double b = 0.0;
  double log_partition = 0.0;
  double energy = 0.0;
  double residual = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::Converged;
  double partition() const;
  bool converged() const { return status == SolveStatus::Converged; }
};

struct InitSpec {
  enum class Kind { Uniform, Perturbed, Random, Tabulated };
  Kind kind = Kind::Uniform;
  /// Perturbed: f = 1 + amplitude * sin(delta of the two leading angles)
  /// (1-D spaces: sine of the scaled coordinate). Random: seeded jitter.
  double amplitude = 0.1;
  unsigned seed = 0;
  std::vector<double> values;  // Tabulated
};

Density make_init(const SpacePtr& space, const InitSpec& init);

struct SolverConfig {
  double damping = 0.5;       // mixing factor theta in (0, 1]
  double tolerance = 1e-10;   // L1 fixed-point residual target
  int max_iterations = 10000;
  std::vector<double> b_schedule;
  InitSpec init;
  /// Safeguard floor: theta halving stops here and the step is accepted.
  double min_damping = 1e-6;
  void check() const;  // throws std::invalid_argument on bad settings
};

struct SolveTracePoint {
  int iteration;
  double energy;
  double residual;
  double damping_used;
};

/// Damped fixed-point iteration f <- (1-theta) f + theta T(f) with an
/// energy-descent safeguard (theta halves within a step whenever the mixed
/// iterate would raise the free energy). Terminates on the L1 residual
/// ||f - T(f)||_{L1(dmu)} or at max_iterations; never throws on
/// non-convergence (the returned status says which).
OnsagerState solve(const KernelMatrix& k, const SolverConfig& cfg, double b,
                   const Density& init, std::vector<SolveTracePoint>* trace = nullptr);

/// Compares the analytic first variation log f + 1 + b U[f] (projected onto
/// mean-zero directions) against central finite differences of free_energy
/// along seeded random mean-zero directions; returns the max relative
/// deviation. Requires a strictly positive density.
double gateaux_check(const KernelMatrix& k, const Density& f, double b,
                     int directions = 8, double step = 1e-5, unsigned seed = 99);

/// Sup-norm deviation of the first variation from a constant at a state;
/// zero at an exact solution of the fixed-point equation.
double projected_variation_sup(const KernelMatrix& k, const OnsagerState& state);

struct ContinuationStep {
  OnsagerState state;
  double two_over_b_energy = 0.0;
  double bl_to_previous = -1.0;  // negative when not computed
};

struct ContinuationResult {
  std::vector<ContinuationStep> steps;
  bool all_converged = true;
};

/// Solves along cfg.b_schedule, warm-starting each b from the previous
/// solution; non-converged steps are flagged and the schedule continues.
/// When `traces` is given, one per-iteration trace is appended per b.
ContinuationResult continue_in_b(const KernelMatrix& k, const SolverConfig& cfg,
                                 bool compute_bl = false,
                                 std::vector<std::vector<SolveTracePoint>>* traces = nullptr);

}  // namespace onsager
