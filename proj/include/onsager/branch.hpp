#pragma once

#include <functional>
#include <vector>

#include "onsager/space.hpp"

namespace onsager {

/// Scalar self-consistency machinery for the two rod models: the order
/// parameter a solves h_b(a) = 0, where h integrates u e^{-b u^2} with
/// u = sin(theta) - a          (example 1, over the circle), or
/// u = x1 x2 sin(theta) - a    (example 2, over [0,L]^2 x circle).

struct BranchOptions {
  int scan_resolution = 2001;   // sign-change scan points on [-A, A]
  double bisection_tol = 1e-12;
  double dedupe_tol = 1e-9;
  double zero_merge_tol = 1e-4;  // roots this close to 0 merge into a = 0
  int circle_points = 2048;      // theta quadrature (example 1)
  int rod_gauss_points = 64;     // Gauss-Legendre per length axis (example 2)
  int rod_theta_points = 256;    // theta points (example 2, direct form)
  int reduced_gauss_points = 128;  // reduced-form quadrature (example 2)
  int reduced_theta_points = 512;
  double max_length = 1.0;  // L
};

/// Gibbs-weighted average [phi]_b(a) over the circle with weight
/// exp(-b (sin theta - a)^2).
double weighted_average_circle(const std::function<double(double)>& phi, double a,
                               double b, int n = 2048);

/// Gibbs-weighted average over (x1, x2, theta) with weight
/// exp(-b (x1 x2 sin theta - a)^2).
double weighted_average_rods(const std::function<double(double, double, double)>& phi,
                             double a, double b, double max_length, int nx = 64,
                             int nt = 256);

/// Self-consistency residual. Example 1 uses the raw d(theta) measure;
/// example 2 integrates over the normalized measure on [0,L]^2 x circle.
/// Odd integrand pairs are summed mirrored so h(0, b) is exactly zero.
/// Throws when |a| exceeds 1 (example 1) or L^2 (example 2).
double h(double a, double b, int example, const BranchOptions& opts = {});

/// Independent second evaluator for example 2: the length integration done
/// analytically, leaving a 2-D integral with a removable singularity that is
/// handled by a guarded series. Must agree with the direct form to 1e-6.
double h_reduced_rods(double a, double b, const BranchOptions& opts = {});

struct BranchPoint {
  double b = 0.0;
  double a = 0.0;        // order parameter at the root
  double h_value = 0.0;  // residual |h| at the root
  double gamma = 0.0;    // Gibbs average of u+a squared (partition constant)
  int sign_left = 0;     // sign of h just left / right of the root
  int sign_right = 0;
};

/// All roots of h_b on the admissible interval: sign-change scan plus
/// bisection, deduplicated; a = 0 is always present.
std::vector<BranchPoint> find_branches(double b, int example,
                                       const BranchOptions& opts = {});

struct BranchSweepRow {
  double b = 0.0;
  std::vector<BranchPoint> roots;
};

/// Roots traced along an increasing schedule of b values.
std::vector<BranchSweepRow> branch_sweep(const std::vector<double>& b_schedule,
                                         int example, const BranchOptions& opts = {});

/// Closed-form solution density on a full grid built from a root of h.
Density example1_density(const SpacePtr& space, double a, double b);
Density example2_density(const SpacePtr& space, double a, double b);

/// Order parameter integral of a full-grid density: the weighted mean of
/// sin(p1-p2) (example 1) or x1 x2 sin(p1-p2) (example 2).
double order_parameter(const Density& f, int example);

}  // namespace onsager
