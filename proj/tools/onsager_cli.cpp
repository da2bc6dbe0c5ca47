#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "onsager/branch.hpp"
#include "onsager/config.hpp"
#include "onsager/experiment.hpp"
#include "onsager/io.hpp"
#include "onsager/limit.hpp"
#include "onsager/solver.hpp"
#include "onsager/transport.hpp"

namespace {

using namespace onsager;
using nlohmann::json;

constexpr double kTwoPi = 6.28318530717958647692;
constexpr double kHalfPi = 1.57079632679489661923;

constexpr int kExitOk = 0;
constexpr int kExitSchema = 2;
constexpr int kExitNonConverged = 3;
constexpr int kExitValidation = 4;

int default_resolution(int example) {
  switch (example) {
    case 1: return 256;
    case 2: return 16;
    case 3: return 64;
  }
  return 64;
}

SpacePtr example_space(int example, int resolution) {
  int res = resolution > 0 ? resolution : default_resolution(example);
  switch (example) {
    case 1:
      return build_space({Axis::periodic(kTwoPi, res), Axis::periodic(kTwoPi, res)});
    case 2:
      return build_space({Axis::interval(0.0, 1.0, res), Axis::interval(0.0, 1.0, res),
                          Axis::periodic(kTwoPi, res), Axis::periodic(kTwoPi, res)});
    case 3:
      return build_space({Axis::interval(0.0, kHalfPi, res)});
  }
  throw std::invalid_argument("example must be 1, 2 or 3");
}

KernelSpec example_kernel(int example) {
  switch (example) {
    case 1: return KernelSpec::two_rod();
    case 2: return KernelSpec::sized_two_rod(1.0);
    case 3: return KernelSpec::rhombus();
  }
  throw std::invalid_argument("example must be 1, 2 or 3");
}

void apply_resolution_override(ExperimentConfig& cfg, int resolution) {
  if (resolution <= 0) return;
  for (Axis& ax : cfg.space.axes) ax.resolution = resolution;
}

int cmd_run(const std::string& config_arg, const std::string& out_override, int seed_override,
            int resolution_override, bool quiet) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_arg);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitSchema;
  }
  if (!out_override.empty()) cfg.output_dir = out_override;
  if (seed_override >= 0) {
    cfg.seed = static_cast<unsigned>(seed_override);
    if (cfg.solver.init.kind != InitSpec::Kind::Tabulated)
      cfg.solver.init.seed = cfg.seed;
  }
  apply_resolution_override(cfg, resolution_override);
  try {
    RunResult r = run_experiment(cfg, std::cout, quiet);
    if (r.exit_code != 0) std::cerr << r.message << "\n";
    return r.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kExitSchema;
  }
}

int cmd_solve(int example, double b, int resolution, const std::string& init_kind,
              double amplitude, const std::string& out_dir, bool quiet) {
  SpacePtr space = example_space(example, resolution);
  KernelMatrix k = assemble(example_kernel(example), space);
  SolverConfig cfg;
  cfg.max_iterations = 20000;
  InitSpec init;
  if (init_kind == "uniform")
    init.kind = InitSpec::Kind::Uniform;
  else if (init_kind == "perturbed")
    init.kind = InitSpec::Kind::Perturbed;
  else if (init_kind == "random")
    init.kind = InitSpec::Kind::Random;
  else {
    std::cerr << "unknown init kind " << init_kind << "\n";
    return kExitSchema;
  }
  init.amplitude = amplitude;
  OnsagerState st = solve(k, cfg, b, make_init(space, init));
  if (!quiet)
    std::cout << "b = " << b << ": " << (st.converged() ? "converged" : "NOT CONVERGED")
              << " in " << st.iterations << " iterations, residual " << st.residual
              << ", energy " << st.energy << ", min density " << st.density.min_value()
              << "\n";
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_density(out_dir + "/density.dat", st.density);
    json j = {{"b", b},
              {"converged", st.converged()},
              {"iterations", st.iterations},
              {"residual", st.residual},
              {"energy", st.energy},
              {"log_partition", st.log_partition}};
    std::ofstream(out_dir + "/solve_summary.json") << j.dump(2) << "\n";
  }
  return st.converged() ? kExitOk : kExitNonConverged;
}

int cmd_sweep(int example, const std::vector<double>& b_list, int resolution,
              const std::string& init_kind, const std::string& out_dir, bool quiet) {
  SpacePtr space = example_space(example, resolution);
  KernelMatrix k = assemble(example_kernel(example), space);
  SolverConfig cfg;
  cfg.max_iterations = 20000;
  cfg.b_schedule = b_list;
  if (init_kind == "perturbed") cfg.init.kind = InitSpec::Kind::Perturbed;
  try {
    cfg.check();
  } catch (const std::exception& e) {
    std::cerr << "invalid b schedule: " << e.what() << "\n";
    return kExitSchema;
  }
  ContinuationResult cont = continue_in_b(k, cfg, true);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    CsvWriter csv(out_dir + "/continuation.csv",
                  {"b", "iterations", "converged", "energy", "residual", "two_e_over_b",
                   "bl_to_previous"});
    for (const auto& s : cont.steps) {
      csv.field(s.state.b);
      csv.field(static_cast<long long>(s.state.iterations));
      csv.field(std::string(s.state.converged() ? "1" : "0"));
      csv.field(s.state.energy);
      csv.field(s.state.residual);
      csv.field(s.two_over_b_energy);
      csv.field(s.bl_to_previous);
      csv.end_row();
    }
  }
  if (!quiet)
    for (const auto& s : cont.steps)
      std::cout << "b = " << s.state.b << ": 2E/b = " << s.two_over_b_energy << ", residual "
                << s.state.residual << (s.state.converged() ? "" : " (NOT CONVERGED)") << "\n";
  return cont.all_converged ? kExitOk : kExitNonConverged;
}

int cmd_branches(int example, const std::vector<double>& b_list, int scan, double L,
                 const std::string& out_dir, bool quiet) {
  BranchOptions opts;
  if (scan > 0) opts.scan_resolution = scan;
  opts.max_length = L;
  std::vector<BranchSweepRow> rows;
  try {
    rows = branch_sweep(b_list, example, opts);
  } catch (const std::exception& e) {
    std::cerr << "branches failed: " << e.what() << "\n";
    return kExitSchema;
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    CsvWriter csv(out_dir + "/branches.csv",
                  {"b", "root", "h_residual", "gamma", "sign_left", "sign_right"});
    for (const auto& row : rows)
      for (const auto& bp : row.roots) {
        csv.field(bp.b);
        csv.field(bp.a);
        csv.field(bp.h_value);
        csv.field(bp.gamma);
        csv.field(static_cast<long long>(bp.sign_left));
        csv.field(static_cast<long long>(bp.sign_right));
        csv.end_row();
      }
  }
  if (!quiet)
    for (const auto& row : rows) {
      std::cout << "b = " << row.b << ": roots";
      for (const auto& bp : row.roots) std::cout << " " << bp.a;
      std::cout << "\n";
    }
  return kExitOk;
}

int cmd_select(int example, double c, double eps, double q, int resolution, int samples,
               bool identity, const std::string& out_dir, bool quiet) {
  SpacePtr space;
  KernelMatrix k = [&] {
    if (example == 1) {
      space = example_space(1, resolution > 0 ? resolution : 1024);
      return assemble(KernelSpec::two_rod(), space);
    }
    if (example == 3) {
      space = example_space(3, resolution > 0 ? resolution : 4096);
      return assemble(KernelSpec::rhombus(), space);
    }
    throw std::invalid_argument("select supports examples 1 and 3");
  }();
  SelectionSpec spec;
  if (identity) {
    ZeroSet a1;
    if (example == 1) {
      auto idx = indices_where(*space, [](std::span<const double> p) {
        return std::fabs(std::sin(p[0] - p[1])) <= 1e-9;
      });
      a1 = make_zero_set(k, std::move(idx), 1e-12);
      spec = make_identity_selection(k, std::move(a1), c, 0.5 * eps);
    } else {
      a1 = make_zero_set(k, {space->nearest_index(std::vector<double>{q})}, 1e-12);
      spec = make_identity_selection(k, std::move(a1), c, eps);
    }
  } else if (example == 1) {
    spec = make_two_rod_selection(k, c, eps);
  } else {
    spec = make_rhombus_selection(k, q, c, eps);
  }
  SelectionOptions opts;
  opts.samples = samples;
  SelectionVerdict v = selection_test(spec, k, *space, opts);
  if (!quiet) std::cout << v.summary() << "\n" << v.note << "\n";
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    json j;
    j["passed"] = v.passed;
    j["note"] = v.note;
    json conds = json::array();
    for (const auto& cn : v.conditions)
      conds.push_back({{"condition", cn.name},
                       {"passed", cn.passed},
                       {"margin", cn.margin},
                       {"detail", cn.detail}});
    j["conditions"] = conds;
    std::ofstream(out_dir + "/selection.json") << j.dump(2) << "\n";
  }
  return kExitOk;  // a failing verdict is a result, not an error
}

int cmd_zeroset(int example, double tau, int resolution, const std::string& out_dir,
                bool quiet) {
  SpacePtr space = example_space(example, resolution);
  KernelMatrix k = assemble(example_kernel(example), space);
  ZeroPairGraph g = zero_pairs(k, tau);
  bool diagonal_only = true;
  for (const auto& pr : g.pairs)
    if (pr.first != pr.second) {
      diagonal_only = false;
      break;
    }
  if (!quiet)
    std::cout << "tau = " << tau << ": " << g.pairs.size() << " pairs, "
              << g.components.size() << " components"
              << (diagonal_only ? " (diagonal only)" : "") << "\n";
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    json sizes = json::array();
    for (std::size_t i = 0; i < g.components.size() && i < 32; ++i)
      sizes.push_back(g.components[i].size());
    json j = {{"tau", tau},
              {"pair_count", g.pairs.size()},
              {"diagonal_only", diagonal_only},
              {"component_count", g.components.size()},
              {"component_sizes_head", sizes}};
    std::ofstream(out_dir + "/zero_pairs.json") << j.dump(2) << "\n";
  }
  return kExitOk;
}

int cmd_validate_kernel(int example, const std::string& matrix_path, int resolution,
                        bool quiet) {
  KernelMatrix k = [&] {
    if (!matrix_path.empty()) {
      auto [entries, n] = read_matrix(matrix_path);
      std::vector<double> coords(n, 0.0);
      std::vector<std::vector<double>> axis_points(1);
      // tabulated matrices validate on an abstract index space
      std::vector<Axis> axes{Axis::interval(0.0, 1.0, static_cast<int>(n))};
      std::vector<double> weights(n, 1.0 / static_cast<double>(n));
      for (std::size_t i = 0; i < n; ++i) {
        coords[i] = static_cast<double>(i) / static_cast<double>(n > 1 ? n - 1 : 1);
        axis_points[0].push_back(coords[i]);
      }
      auto sp = std::make_shared<DiscreteSpace>(std::move(axes), MetricRule::Max,
                                                std::move(coords), std::move(weights),
                                                std::move(axis_points));
      return assemble(KernelSpec::tabulated(std::move(entries), n), sp);
    }
    SpacePtr space = example_space(example, resolution);
    return assemble(example_kernel(example), space);
  }();
  KernelValidationReport rep = validate(k);
  if (!quiet) std::cout << rep.summary() << "\n";
  return rep.passed ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Free-energy minimization for interacting corpora on compact metric spaces"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("--quiet", quiet, "suppress progress output");

  // run
  std::string run_config, run_out;
  int run_seed = -1, run_resolution = 0;
  auto* run = app.add_subcommand("run", "execute an experiment config (file or preset name)");
  run->add_option("--config", run_config, "config file path, or example1|example2|example3")
      ->required();
  run->add_option("--out", run_out, "output directory (overrides the config)");
  run->add_option("--seed", run_seed, "seed override");
  run->add_option("--resolution", run_resolution, "override every axis resolution");

  // solve
  int sv_example = 1, sv_resolution = 0;
  double sv_b = 1.0, sv_amplitude = 0.1;
  std::string sv_init = "uniform", sv_out;
  auto* sv = app.add_subcommand("solve", "solve the fixed-point equation at one b");
  sv->add_option("--example", sv_example, "worked example (1, 2 or 3)")->required();
  sv->add_option("--b", sv_b, "inverse temperature")->required();
  sv->add_option("--resolution", sv_resolution, "grid resolution per axis");
  sv->add_option("--init", sv_init, "uniform | perturbed | random");
  sv->add_option("--amplitude", sv_amplitude, "perturbation amplitude");
  sv->add_option("--out", sv_out, "directory for density + summary");

  // sweep
  int sw_example = 1, sw_resolution = 0;
  std::vector<double> sw_blist;
  std::string sw_init = "uniform", sw_out;
  auto* sw = app.add_subcommand("sweep", "continuation along an increasing b schedule");
  sw->add_option("--example", sw_example, "worked example (1, 2 or 3)")->required();
  sw->add_option("--b-list", sw_blist, "schedule values")->required()->expected(-1);
  sw->add_option("--resolution", sw_resolution, "grid resolution per axis");
  sw->add_option("--init", sw_init, "uniform | perturbed");
  sw->add_option("--out", sw_out, "directory for continuation.csv");

  // branches
  int br_example = 1, br_scan = 0;
  double br_L = 1.0;
  std::vector<double> br_blist;
  std::string br_out;
  auto* br = app.add_subcommand("branches", "order-parameter roots of the self-consistency");
  br->add_option("--example", br_example, "1 or 2")->required();
  br->add_option("--b", br_blist, "b values (increasing)")->required()->expected(-1);
  br->add_option("--scan", br_scan, "scan resolution");
  br->add_option("--max-length", br_L, "rod length bound L (example 2)");
  br->add_option("--out", br_out, "directory for branches.csv");

  // select
  int se_example = 1, se_resolution = 0, se_samples = 2000;
  double se_c = 1.25, se_eps = 0.2, se_q = 0.7853981633974483;
  bool se_identity = false;
  std::string se_out;
  auto* se = app.add_subcommand("select", "zero-set selection test");
  se->add_option("--example", se_example, "1 or 3")->required();
  se->add_option("--c", se_c, "expansion constant (> 1)");
  se->add_option("--eps", se_eps, "neighborhood size");
  se->add_option("--q", se_q, "source point (example 3)");
  se->add_option("--resolution", se_resolution, "grid resolution");
  se->add_option("--samples", se_samples, "sampled pairs per condition");
  se->add_flag("--identity", se_identity, "test the identity map control");
  se->add_option("--out", se_out, "directory for selection.json");

  // zeroset
  int zs_example = 3, zs_resolution = 0;
  double zs_tau = 1e-6;
  std::string zs_out;
  auto* zs = app.add_subcommand("zeroset", "near-zero kernel pair structure");
  zs->add_option("--example", zs_example, "1, 2 or 3")->required();
  zs->add_option("--tau", zs_tau, "kernel threshold");
  zs->add_option("--resolution", zs_resolution, "grid resolution");
  zs->add_option("--out", zs_out, "directory for zero_pairs.json");

  // validate-kernel
  int vk_example = 1, vk_resolution = 0;
  std::string vk_matrix;
  auto* vk = app.add_subcommand("validate-kernel", "check kernel symmetry/positivity");
  vk->add_option("--example", vk_example, "1, 2 or 3");
  vk->add_option("--matrix", vk_matrix, "tabulated matrix file");
  vk->add_option("--resolution", vk_resolution, "grid resolution");

  // preset
  std::string pr_name, pr_out;
  auto* pr = app.add_subcommand("preset", "print a built-in experiment config");
  pr->add_option("name", pr_name, "example1 | example2 | example3")->required();
  pr->add_option("--out", pr_out, "write to a file instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(run_config, run_out, run_seed, run_resolution, quiet);
    if (sv->parsed())
      return cmd_solve(sv_example, sv_b, sv_resolution, sv_init, sv_amplitude, sv_out, quiet);
    if (sw->parsed())
      return cmd_sweep(sw_example, sw_blist, sw_resolution, sw_init, sw_out, quiet);
    if (br->parsed()) return cmd_branches(br_example, br_blist, br_scan, br_L, br_out, quiet);
    if (se->parsed())
      return cmd_select(se_example, se_c, se_eps, se_q, se_resolution, se_samples,
                        se_identity, se_out, quiet);
    if (zs->parsed()) return cmd_zeroset(zs_example, zs_tau, zs_resolution, zs_out, quiet);
    if (vk->parsed()) return cmd_validate_kernel(vk_example, vk_matrix, vk_resolution, quiet);
    if (pr->parsed()) {
      if (!is_preset_name(pr_name)) {
        std::cerr << "unknown preset " << pr_name << "\n";
        return kExitSchema;
      }
      std::string text = preset_config(pr_name).dump(2) + "\n";
      if (pr_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(pr_out);
        out << text;
      }
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitSchema;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSchema;
  }
  return kExitOk;
}
