#include "onsager/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace onsager {

namespace {
constexpr double kHalfPi = 1.57079632679489661923;
constexpr double kValidationTol = 1e-10;
}  // namespace

double two_rod_kernel(double p1, double p2, double q1, double q2) {
  double d = std::sin(p1 - p2) - std::sin(q1 - q2);
  return d * d;
}

double sized_two_rod_kernel(double x1, double x2, double p1, double p2,
                            double y1, double y2, double q1, double q2,
                            double max_length) {
  const double slack = 1e-12 * std::max(1.0, max_length);
  for (double len : {x1, x2, y1, y2})
    if (len < -slack || len > max_length + slack)
      throw std::invalid_argument("sized_two_rod_kernel: length outside [0, L]");
  double d = x1 * x2 * std::sin(p1 - p2) - y1 * y2 * std::sin(q1 - q2);
  return d * d;
}

double rhombus_kernel(double p, double q) {
  const double slack = 1e-12;
  if (p < -slack || p > kHalfPi + slack || q < -slack || q > kHalfPi + slack)
    throw std::invalid_argument("rhombus_kernel: angles must lie in [0, pi/2]");
  const double d = std::fabs(p - q);
  if (d < 1e-8) return 0.0;
  const double bracket =
      std::sin(0.25 * (p + q)) * std::sin(0.25 * (p + q)) * std::sin(0.5 * p) * std::sin(0.5 * q) +
      std::cos(0.25 * (p + q)) * std::cos(0.25 * (p + q)) * std::cos(0.5 * p) * std::cos(0.5 * q);
  double prefactor;
  if (d < 1e-4) {
    // series of 8 sin^2(d/4)/sin(d/2) about the diagonal
    prefactor = d * (1.0 + d * d / 48.0);
  } else {
    double s4 = std::sin(0.25 * d);
    prefactor = 8.0 * s4 * s4 / std::sin(0.5 * d);
  }
  return prefactor * bracket;
}

KernelSpec KernelSpec::two_rod() { return KernelSpec{KernelKind::TwoRodArea, 1.0, {}, 0}; }

KernelSpec KernelSpec::sized_two_rod(double max_length) {
  if (!(max_length > 0.0))
    throw std::invalid_argument("sized_two_rod: max_length must be positive");
  return KernelSpec{KernelKind::SizedTwoRodArea, max_length, {}, 0};
}

KernelSpec KernelSpec::rhombus() { return KernelSpec{KernelKind::RhombusSymdiff, 1.0, {}, 0}; }

KernelSpec KernelSpec::tabulated(std::vector<double> entries, std::size_t n) {
  if (entries.size() != n * n)
    throw std::invalid_argument("tabulated kernel: need n*n entries");
  return KernelSpec{KernelKind::Tabulated, 1.0, std::move(entries), n};
}

int KernelSpec::expected_dim() const {
  switch (kind) {
    case KernelKind::TwoRodArea: return 2;
    case KernelKind::SizedTwoRodArea: return 4;
    case KernelKind::RhombusSymdiff: return 1;
    case KernelKind::Tabulated: return -1;
  }
  return -1;
}

double KernelSpec::evaluate(std::span<const double> p, std::span<const double> q) const {
  switch (kind) {
    case KernelKind::TwoRodArea:
      return two_rod_kernel(p[0], p[1], q[0], q[1]);
    case KernelKind::SizedTwoRodArea:
      return sized_two_rod_kernel(p[0], p[1], p[2], p[3], q[0], q[1], q[2], q[3], max_length);
    case KernelKind::RhombusSymdiff:
      return rhombus_kernel(p[0], q[0]);
    case KernelKind::Tabulated:
      throw std::invalid_argument("tabulated kernels have no pointwise form");
  }
  return 0.0;
}

std::string KernelSpec::name() const {
  switch (kind) {
    case KernelKind::TwoRodArea: return "two_rod_area";
    case KernelKind::SizedTwoRodArea: return "sized_two_rod_area";
    case KernelKind::RhombusSymdiff: return "rhombus_symdiff";
    case KernelKind::Tabulated: return "tabulated";
  }
  return "unknown";
}

double KernelMatrix::entry(std::size_t i, std::size_t j) const {
  switch (backend_) {
    case Backend::Dense:
      return entries_[i * n_ + j];
    case Backend::SquaredDiff: {
      double d = feature_[i] - feature_[j];
      return d * d;
    }
    case Backend::Lazy:
      return spec_->evaluate(space_->point(i), space_->point(j));
  }
  return 0.0;
}

std::vector<double> KernelMatrix::apply(std::span<const double> x) const {
  std::vector<double> out(n_, 0.0);
  switch (backend_) {
    case Backend::Dense: {
      for (std::size_t i = 0; i < n_; ++i) {
        const double* row = entries_.data() + i * n_;
        double acc = 0.0;
        for (std::size_t j = 0; j < n_; ++j) acc += row[j] * x[j];
        out[i] = acc;
      }
      break;
    }
    case Backend::SquaredDiff: {
      // sum_j (s_i - s_j)^2 x_j = s_i^2 m0 - 2 s_i m1 + m2
      double m0 = 0.0, m1 = 0.0, m2 = 0.0;
      for (std::size_t j = 0; j < n_; ++j) {
        m0 += x[j];
        m1 += feature_[j] * x[j];
        m2 += feature_[j] * feature_[j] * x[j];
      }
      for (std::size_t i = 0; i < n_; ++i) {
        double s = feature_[i];
        out[i] = s * s * m0 - 2.0 * s * m1 + m2;
      }
      break;
    }
    case Backend::Lazy: {
      for (std::size_t i = 0; i < n_; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n_; ++j) acc += entry(i, j) * x[j];
        out[i] = acc;
      }
      break;
    }
  }
  return out;
}

void KernelMatrix::estimate_constants(const AssembleOptions& opts) {
  // sup norm
  if (backend_ == Backend::Dense) {
    sup_norm_ = *std::max_element(entries_.begin(), entries_.end());
    sup_exact_ = true;
  } else if (backend_ == Backend::SquaredDiff) {
    auto [mn, mx] = std::minmax_element(feature_.begin(), feature_.end());
    double d = *mx - *mn;
    sup_norm_ = d * d;
    sup_exact_ = true;
  } else {
    std::mt19937 rng(opts.seed ^ 0xa5a5a5a5u);
    std::uniform_int_distribution<std::size_t> pick(0, n_ - 1);
    double mx = 0.0;
    int samples = std::max(1000, opts.lipschitz_samples);
    for (int s = 0; s < samples; ++s)
      mx = std::max(mx, entry(pick(rng), pick(rng)));
    // include extreme grid corners, where 1-D kernels typically peak
    mx = std::max(mx, entry(0, n_ - 1));
    sup_norm_ = mx;
    sup_exact_ = false;
  }
  // empirical Lipschitz constant over sampled triples, including
  // consecutive-index pairs to capture local slopes
  std::mt19937 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n_ - 1);
  double lip = 0.0;
  auto consider = [&](std::size_t i, std::size_t j, std::size_t s) {
    double d = space_->distance(i, j);
    if (d < 1e-14) return;
    lip = std::max(lip, std::fabs(entry(i, s) - entry(j, s)) / d);
  };
  for (int t = 0; t < opts.lipschitz_samples; ++t)
    consider(pick(rng), pick(rng), pick(rng));
  std::size_t stride = std::max<std::size_t>(1, n_ / 4096);
  for (std::size_t i = 0; i + 1 < n_; i += stride) consider(i, i + 1, pick(rng));
  lipschitz_ = lip;
}

KernelMatrix KernelMatrix::dense(SpacePtr space, std::vector<double> entries,
                                 std::optional<KernelSpec> spec, const AssembleOptions& opts) {
  KernelMatrix m;
  m.space_ = std::move(space);
  m.spec_ = std::move(spec);
  m.backend_ = Backend::Dense;
  m.n_ = m.space_->size();
  if (entries.size() != m.n_ * m.n_)
    throw std::invalid_argument("dense kernel matrix: entry count mismatch");
  m.entries_ = std::move(entries);
  m.estimate_constants(opts);
  return m;
}

KernelMatrix KernelMatrix::squared_diff(SpacePtr space, std::vector<double> feature,
                                        KernelSpec spec, const AssembleOptions& opts) {
  KernelMatrix m;
  m.space_ = std::move(space);
  m.spec_ = std::move(spec);
  m.backend_ = Backend::SquaredDiff;
  m.n_ = m.space_->size();
  if (feature.size() != m.n_)
    throw std::invalid_argument("squared-diff kernel matrix: feature size mismatch");
  m.feature_ = std::move(feature);
  m.estimate_constants(opts);
  return m;
}

KernelMatrix KernelMatrix::lazy(SpacePtr space, KernelSpec spec, const AssembleOptions& opts) {
  if (!spec.has_pointwise())
    throw std::invalid_argument("lazy kernel matrix requires a pointwise kernel");
  KernelMatrix m;
  m.space_ = std::move(space);
  m.spec_ = std::move(spec);
  m.backend_ = Backend::Lazy;
  m.n_ = m.space_->size();
  m.estimate_constants(opts);
  return m;
}

namespace {

void require_axes(const KernelSpec& spec, const DiscreteSpace& sp) {
  switch (spec.kind) {
    case KernelKind::TwoRodArea:
      if (sp.dim() != 2 || sp.axes()[0].kind != AxisKind::Periodic ||
          sp.axes()[1].kind != AxisKind::Periodic)
        throw std::invalid_argument("two_rod_area kernel requires two periodic axes");
      break;
    case KernelKind::SizedTwoRodArea: {
      if (sp.dim() != 4)
        throw std::invalid_argument(
            "sized_two_rod_area kernel requires axes (length, length, angle, angle)");
      const double L = spec.max_length, slack = 1e-12 * std::max(1.0, L);
      for (int ax : {0, 1}) {
        const Axis& a = sp.axes()[ax];
        if (a.kind != AxisKind::Interval || a.lo < -slack || a.hi > L + slack)
          throw std::invalid_argument(
              "sized_two_rod_area kernel: length axes must be intervals within [0, L]");
      }
      for (int ax : {2, 3})
        if (sp.axes()[ax].kind != AxisKind::Periodic)
          throw std::invalid_argument("sized_two_rod_area kernel: angle axes must be periodic");
      break;
    }
    case KernelKind::RhombusSymdiff: {
      if (sp.dim() != 1 || sp.axes()[0].kind != AxisKind::Interval)
        throw std::invalid_argument("rhombus_symdiff kernel requires one interval axis");
      const Axis& a = sp.axes()[0];
      if (a.lo < -1e-12 || a.hi > kHalfPi + 1e-12)
        throw std::invalid_argument("rhombus_symdiff kernel: axis must lie within [0, pi/2]");
      break;
    }
    case KernelKind::Tabulated:
      if (spec.table_size != sp.size())
        throw std::invalid_argument("tabulated kernel dimension does not match space size");
      break;
  }
}

}  // namespace

KernelMatrix assemble(const KernelSpec& spec, const SpacePtr& space,
                      const AssembleOptions& opts) {
  if (!space) throw std::invalid_argument("assemble: null space");
  require_axes(spec, *space);
  const std::size_t n = space->size();
  switch (spec.kind) {
    case KernelKind::TwoRodArea: {
      std::vector<double> s(n);
      for (std::size_t i = 0; i < n; ++i)
        s[i] = std::sin(space->coord(i, 0) - space->coord(i, 1));
      return KernelMatrix::squared_diff(space, std::move(s), spec, opts);
    }
    case KernelKind::SizedTwoRodArea: {
      std::vector<double> s(n);
      for (std::size_t i = 0; i < n; ++i)
        s[i] = space->coord(i, 0) * space->coord(i, 1) *
               std::sin(space->coord(i, 2) - space->coord(i, 3));
      return KernelMatrix::squared_diff(space, std::move(s), spec, opts);
    }
    case KernelKind::RhombusSymdiff: {
      if (n > opts.dense_limit) return KernelMatrix::lazy(space, spec, opts);
      std::vector<double> e(n * n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          double v = rhombus_kernel(space->coord(i, 0), space->coord(j, 0));
          e[i * n + j] = v;
          e[j * n + i] = v;
        }
      }
      return KernelMatrix::dense(space, std::move(e), spec, opts);
    }
    case KernelKind::Tabulated: {
      if (n > opts.dense_limit)
        throw std::invalid_argument("tabulated kernel too large for the dense backend");
      return KernelMatrix::dense(space, spec.table, spec, opts);
    }
  }
  throw std::invalid_argument("assemble: unknown kernel kind");
}

KernelValidationReport validate(const KernelMatrix& m) {
  KernelValidationReport r;
  r.sup_norm = m.sup_norm();
  r.lipschitz_estimate = m.lipschitz_estimate();
  const std::size_t n = m.size();
  r.min_entry = n > 0 ? m.entry(0, 0) : 0.0;

  const bool exhaustive = n <= 2048 || m.backend() == KernelMatrix::Backend::Dense;
  r.exhaustive = exhaustive;
  auto check_pair = [&](std::size_t i, std::size_t j) {
    double a = m.entry(i, j), b = m.entry(j, i);
    double viol = std::fabs(a - b);
    if (viol > r.max_symmetry_violation) {
      r.max_symmetry_violation = viol;
      r.symmetry_i = i;
      r.symmetry_j = j;
    }
    double mn = std::min(a, b);
    if (mn < r.min_entry) {
      r.min_entry = mn;
      r.negative_i = a < b ? i : j;
      r.negative_j = a < b ? j : i;
    }
    ++r.pairs_checked;
  };
  if (exhaustive) {
    for (std::size_t i = 0; i < n; ++i) {
      r.max_diagonal = std::max(r.max_diagonal, std::fabs(m.entry(i, i)));
      for (std::size_t j = i + 1; j < n; ++j) check_pair(i, j);
    }
  } else {
    std::mt19937 rng(0x7a11e7u);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (int t = 0; t < 200000; ++t) check_pair(pick(rng), pick(rng));
    for (std::size_t i = 0; i < n; i += std::max<std::size_t>(1, n / 4096))
      r.max_diagonal = std::max(r.max_diagonal, std::fabs(m.entry(i, i)));
  }
  r.passed = r.max_symmetry_violation < kValidationTol && r.max_diagonal < kValidationTol &&
             r.min_entry >= 0.0;
  return r;
}

std::string KernelValidationReport::summary() const {
  std::ostringstream os;
  os << (passed ? "pass" : "fail") << " (sym=" << max_symmetry_violation
     << ", diag=" << max_diagonal << ", min=" << min_entry << ", sup=" << sup_norm
     << ", lip=" << lipschitz_estimate << (exhaustive ? ", exhaustive" : ", sampled") << ")";
  if (!passed) {
    if (max_symmetry_violation >= kValidationTol)
      os << " symmetry witness (" << symmetry_i << "," << symmetry_j << ")";
    if (min_entry < 0.0) os << " negative entry at (" << negative_i << "," << negative_j << ")";
  }
  return os.str();
}

}  // namespace onsager
