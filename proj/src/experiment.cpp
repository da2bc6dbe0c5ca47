#include "onsager/experiment.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "onsager/branch.hpp"
#include "onsager/io.hpp"
#include "onsager/limit.hpp"
#include "onsager/transport.hpp"

namespace onsager {

using nlohmann::json;

namespace {

constexpr double kTwoPi = 6.28318530717958647692;
constexpr double kHalfPi = 1.57079632679489661923;

ZeroSet candidate_to_zero_set(const CandidateConfig& cc, const KernelMatrix& k) {
  const DiscreteSpace& sp = *k.space();
  std::vector<std::size_t> idx;
  switch (cc.type) {
    case CandidateConfig::Type::SinDeltaLevel: {
      if (sp.dim() < 2)
        throw std::invalid_argument("sin_delta_level candidate needs two angle axes");
      idx = indices_where(sp, [&](std::span<const double> p) {
        return std::fabs(std::sin(p[0] - p[1]) - cc.value) <= cc.tol;
      });
      break;
    }
    case CandidateConfig::Type::CoordinateLevel: {
      if (cc.axis < 0 || cc.axis >= sp.dim())
        throw std::invalid_argument("coordinate_level candidate axis out of range");
      idx = indices_where(sp, [&](std::span<const double> p) {
        return std::fabs(p[cc.axis] - cc.value) <= cc.tol;
      });
      break;
    }
    case CandidateConfig::Type::Points: {
      for (const auto& pt : cc.points) {
        if (pt.size() != static_cast<std::size_t>(sp.dim()))
          throw std::invalid_argument("candidate point dimension mismatch");
        idx.push_back(sp.nearest_index(pt));
      }
      std::sort(idx.begin(), idx.end());
      idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
      break;
    }
    case CandidateConfig::Type::Auto:
      throw std::invalid_argument("auto candidates expand before this point");
  }
  if (idx.empty())
    throw std::invalid_argument("candidate '" + cc.name + "' matches no grid points");
  ZeroSet z;
  z.indices = std::move(idx);
  double mx = 0.0;
  const std::size_t m = z.indices.size();
  if (m * m <= 50000000ull) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i; j < m; ++j)
        mx = std::max(mx, k.entry(z.indices[i], z.indices[j]));
  }
  z.pairwise_max = mx;
  z.tolerance = std::max(mx, 1e-12);
  return z;
}

json verdict_to_json(const SelectionVerdict& v) {
  json j;
  j["passed"] = v.passed;
  j["note"] = v.note;
  json conds = json::array();
  for (const auto& c : v.conditions)
    conds.push_back({{"condition", c.name},
                     {"passed", c.passed},
                     {"margin", c.margin},
                     {"detail", c.detail}});
  j["conditions"] = conds;
  return j;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

struct SelectionTarget {
  SpacePtr space;
  KernelMatrix kernel;
};

/// Space+kernel a selection analysis runs on (its own resolution, or the
/// experiment's when resolution == 0).
SelectionTarget selection_target(const SelectionAnalysisConfig& sc,
                                 const ExperimentConfig& cfg, const SpacePtr& run_space,
                                 const KernelMatrix& run_kernel) {
  if (sc.resolution == 0) return {run_space, run_kernel};
  switch (cfg.kernel.kind) {
    case KernelKind::TwoRodArea: {
      auto sp = build_space({Axis::periodic(kTwoPi, sc.resolution),
                             Axis::periodic(kTwoPi, sc.resolution)},
                            cfg.space.metric);
      return {sp, assemble(KernelSpec::two_rod(), sp)};
    }
    case KernelKind::RhombusSymdiff: {
      auto sp = build_space({Axis::interval(0.0, kHalfPi, sc.resolution)}, cfg.space.metric);
      return {sp, assemble(KernelSpec::rhombus(), sp)};
    }
    default:
      throw std::invalid_argument(
          "selection analyses with a custom resolution need the two_rod_area or "
          "rhombus_symdiff kernel");
  }
}

ZeroSet canonical_set1(const KernelMatrix& k, const SelectionAnalysisConfig& sc) {
  const DiscreteSpace& sp = *k.space();
  if (k.spec() && k.spec()->kind == KernelKind::TwoRodArea) {
    auto idx = indices_where(sp, [&](std::span<const double> p) {
      return std::fabs(std::sin(p[0] - p[1])) <= 1e-9;
    });
    return make_zero_set(k, std::move(idx), 1e-12);
  }
  if (k.spec() && k.spec()->kind == KernelKind::RhombusSymdiff) {
    std::size_t iq = sp.nearest_index(std::vector<double>{sc.q});
    return make_zero_set(k, {iq}, 1e-12);
  }
  throw std::invalid_argument("identity selection control needs a built-in kernel");
}

}  // namespace

std::string resolve_output_dir(const std::string& configured) {
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv("ONSAGER_OUT"); env && *env) return env;
  return "onsager_out";
}

RunResult run_experiment(const ExperimentConfig& cfg, std::ostream& log, bool quiet) {
  namespace fs = std::filesystem;
  const std::string out_dir = resolve_output_dir(cfg.output_dir);
  fs::create_directories(out_dir);
  auto path = [&](const std::string& name) { return out_dir + "/" + name; };

  write_json(path("config_echo.json"), config_to_json(cfg));

  SpacePtr space = build_space(cfg.space.axes, cfg.space.metric);
  if (!quiet) log << "space: " << space->describe() << " (" << space->size() << " points)\n";

  KernelSpec spec;
  switch (cfg.kernel.kind) {
    case KernelKind::TwoRodArea: spec = KernelSpec::two_rod(); break;
    case KernelKind::SizedTwoRodArea:
      spec = KernelSpec::sized_two_rod(cfg.kernel.max_length);
      break;
    case KernelKind::RhombusSymdiff: spec = KernelSpec::rhombus(); break;
    case KernelKind::Tabulated: {
      auto [entries, n] = read_matrix(cfg.kernel.matrix_path);
      spec = KernelSpec::tabulated(std::move(entries), n);
      break;
    }
  }
  KernelMatrix kernel = assemble(spec, space);

  KernelValidationReport vrep = validate(kernel);
  {
    json j = {{"passed", vrep.passed},
              {"max_symmetry_violation", vrep.max_symmetry_violation},
              {"max_diagonal", vrep.max_diagonal},
              {"min_entry", vrep.min_entry},
              {"sup_norm", vrep.sup_norm},
              {"sup_norm_exact", kernel.sup_norm_exact()},
              {"lipschitz_estimate", vrep.lipschitz_estimate},
              {"exhaustive", vrep.exhaustive},
              {"pairs_checked", vrep.pairs_checked},
              {"summary", vrep.summary()}};
    write_json(path("kernel_validation.json"), j);
  }
  if (!quiet) log << "kernel " << spec.name() << ": " << vrep.summary() << "\n";
  if (!vrep.passed) {
    write_json(path("run_summary.json"),
               json{{"exit_code", 4}, {"reason", "kernel validation failed"}});
    return {4, "kernel validation failed: " + vrep.summary()};
  }

  // continuation along the schedule
  std::vector<std::vector<SolveTracePoint>> traces;
  ContinuationResult cont = continue_in_b(kernel, cfg.solver, true, &traces);

  {
    CsvWriter csv(path("continuation.csv"),
                  {"b", "iterations", "converged", "energy", "residual", "two_e_over_b",
                   "bl_to_previous"});
    for (const auto& step : cont.steps) {
      csv.field(step.state.b);
      csv.field(static_cast<long long>(step.state.iterations));
      csv.field(std::string(step.state.converged() ? "1" : "0"));
      csv.field(step.state.energy);
      csv.field(step.state.residual);
      csv.field(step.two_over_b_energy);
      csv.field(step.bl_to_previous);
      csv.end_row();
    }
  }
  {
    CsvWriter csv(path("trace.csv"), {"b", "iteration", "energy", "residual", "damping_used"});
    for (std::size_t s = 0; s < traces.size(); ++s) {
      for (const auto& t : traces[s]) {
        csv.field(cfg.solver.b_schedule[s]);
        csv.field(static_cast<long long>(t.iteration));
        csv.field(t.energy);
        csv.field(t.residual);
        csv.field(t.damping_used);
        csv.end_row();
      }
    }
  }
  for (std::size_t s = 0; s < cont.steps.size(); ++s) {
    char name[64];
    std::snprintf(name, sizeof name, "density_%02zu_b%g.dat", s, cont.steps[s].state.b);
    write_density(path(name), cont.steps[s].state.density);
  }
  if (!quiet)
    for (const auto& step : cont.steps)
      log << "b = " << step.state.b << ": " << (step.state.converged() ? "converged" : "NOT CONVERGED")
          << " in " << step.state.iterations << " iterations, energy " << step.state.energy
          << ", 2E/b " << step.two_over_b_energy << "\n";

  // analyses
  if (cfg.branches) {
    const BranchAnalysisConfig& bc = *cfg.branches;
    BranchOptions bo;
    bo.scan_resolution = bc.scan_resolution;
    bo.max_length = bc.max_length;
    const bool energy_on_space =
        (bc.example == 1 && cfg.kernel.kind == KernelKind::TwoRodArea) ||
        (bc.example == 2 && cfg.kernel.kind == KernelKind::SizedTwoRodArea);
    CsvWriter csv(path("branches.csv"),
                  {"b", "root", "h_residual", "gamma", "sign_left", "sign_right", "energy"});
    for (double b : bc.b_values) {
      for (const BranchPoint& bp : find_branches(b, bc.example, bo)) {
        csv.field(bp.b);
        csv.field(bp.a);
        csv.field(bp.h_value);
        csv.field(bp.gamma);
        csv.field(static_cast<long long>(bp.sign_left));
        csv.field(static_cast<long long>(bp.sign_right));
        if (energy_on_space) {
          Density d = bc.example == 1 ? example1_density(space, bp.a, b)
                                      : example2_density(space, bp.a, b);
          csv.field(free_energy(kernel, d, b));
        } else {
          csv.field(std::string("nan"));
        }
        csv.end_row();
      }
    }
    if (!quiet) log << "branch tables written for example " << bc.example << "\n";
  }

  if (cfg.concentration) {
    const auto& cc = *cfg.concentration;
    std::vector<ZeroSet> sets;
    std::vector<std::string> names;
    for (const CandidateConfig& cand : cc.candidates) {
      if (cand.type == CandidateConfig::Type::Auto) {
        std::vector<ZeroSet> comps = zero_components(kernel, cand.tau);
        for (std::size_t i = 0; i < comps.size(); ++i) {
          sets.push_back(std::move(comps[i]));
          names.push_back(cand.name + "_" + std::to_string(i));
        }
      } else {
        sets.push_back(candidate_to_zero_set(cand, kernel));
        names.push_back(cand.name);
      }
    }
    ConcentrationReport rep = concentration(cont.steps.back().state, sets, cc.eps);
    CsvWriter csv(path("concentration.csv"),
                  {"candidate", "b", "eps", "mass", "bl_to_uniform", "bl_exact",
                   "two_e_over_b"});
    for (std::size_t i = 0; i < rep.entries.size(); ++i) {
      csv.field(names[i]);
      csv.field(rep.b);
      csv.field(rep.eps);
      csv.field(rep.entries[i].mass);
      csv.field(rep.entries[i].bl_to_uniform);
      csv.field(std::string(rep.entries[i].bl_exact ? "1" : "0"));
      csv.field(rep.two_over_b_energy);
      csv.end_row();
    }
    if (!quiet)
      for (std::size_t i = 0; i < rep.entries.size(); ++i)
        log << "concentration '" << names[i] << "': mass " << rep.entries[i].mass
            << ", bl " << rep.entries[i].bl_to_uniform << "\n";
  }

  for (const SelectionAnalysisConfig& sc : cfg.selections) {
    SelectionTarget target = selection_target(sc, cfg, space, kernel);
    SelectionSpec sspec;
    switch (sc.map) {
      case SelectionAnalysisConfig::Map::TwoRod:
        sspec = make_two_rod_selection(target.kernel, sc.c, sc.eps);
        break;
      case SelectionAnalysisConfig::Map::Rhombus:
        sspec = make_rhombus_selection(target.kernel, sc.q, sc.c, sc.eps);
        break;
      case SelectionAnalysisConfig::Map::Identity: {
        ZeroSet a1 = canonical_set1(target.kernel, sc);
        double eps1 = cfg.kernel.kind == KernelKind::TwoRodArea ? 0.5 * sc.eps : sc.eps;
        sspec = make_identity_selection(target.kernel, std::move(a1), sc.c, eps1);
        break;
      }
    }
    SelectionOptions so;
    so.samples = sc.samples;
    so.seed = cfg.seed ^ 0x9e3779b9u;
    SelectionVerdict v = selection_test(sspec, target.kernel, *target.space, so);
    json j = verdict_to_json(v);
    j["name"] = sc.name;
    j["c"] = sc.c;
    j["eps"] = sc.eps;
    write_json(path("selection_" + sc.name + ".json"), j);
    if (!quiet) log << "selection '" << sc.name << "': " << v.summary() << "\n";
  }

  if (cfg.zero_pairs_analysis) {
    const auto& zc = *cfg.zero_pairs_analysis;
    double tau = zc.tau >= 0.0 ? zc.tau : zc.tau_rel * kernel.sup_norm();
    ZeroPairGraph g = zero_pairs(kernel, tau);
    bool diagonal_only = true;
    for (const auto& pr : g.pairs)
      if (pr.first != pr.second) {
        diagonal_only = false;
        break;
      }
    json sizes = json::array();
    for (std::size_t i = 0; i < g.components.size() && i < 32; ++i)
      sizes.push_back(g.components[i].size());
    json j = {{"tau", tau},
              {"pair_count", g.pairs.size()},
              {"pairs_materialized", g.pairs_materialized},
              {"diagonal_only", diagonal_only},
              {"component_count", g.components.size()},
              {"component_sizes_head", sizes}};
    write_json(path("zero_pairs.json"), j);
    if (!quiet)
      log << "zero pairs at tau " << tau << ": " << g.pairs.size() << " pairs, "
          << g.components.size() << " components"
          << (diagonal_only ? " (diagonal only)" : "") << "\n";
  }

  json summary = {{"exit_code", cont.all_converged ? 0 : 3},
                  {"all_converged", cont.all_converged}};
  json steps = json::array();
  for (const auto& step : cont.steps)
    steps.push_back({{"b", step.state.b},
                     {"converged", step.state.converged()},
                     {"iterations", step.state.iterations},
                     {"energy", step.state.energy},
                     {"residual", step.state.residual},
                     {"two_e_over_b", step.two_over_b_energy},
                     {"bl_to_previous", step.bl_to_previous}});
  summary["steps"] = steps;
  write_json(path("run_summary.json"), summary);

  if (!cont.all_converged) return {3, "schedule contains non-converged steps"};
  return {0, "ok"};
}

}  // namespace onsager
