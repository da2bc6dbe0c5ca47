#include "onsager/config.hpp"

#include <cmath>
#include <fstream>

#include "onsager/io.hpp"

namespace onsager {

using nlohmann::json;

namespace {

constexpr double kTwoPi = 6.28318530717958647692;
constexpr double kHalfPi = 1.57079632679489661923;

const json& need(const json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + "." + key, "required field is missing");
  return *it;
}

double need_number(const json& j, const char* key, const std::string& path) {
  const json& v = need(j, key, path);
  if (!v.is_number()) throw ConfigError(path + "." + key, "must be a number");
  return v.get<double>();
}

double opt_number(const json& j, const char* key, const std::string& path, double dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  if (!it->is_number()) throw ConfigError(path + "." + key, "must be a number");
  return it->get<double>();
}

int opt_int(const json& j, const char* key, const std::string& path, int dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  if (!it->is_number_integer()) throw ConfigError(path + "." + key, "must be an integer");
  return it->get<int>();
}

std::string need_string(const json& j, const char* key, const std::string& path) {
  const json& v = need(j, key, path);
  if (!v.is_string()) throw ConfigError(path + "." + key, "must be a string");
  return v.get<std::string>();
}

std::string opt_string(const json& j, const char* key, const std::string& path,
                       const std::string& dflt) {
  auto it = j.find(key);
  if (it == j.end()) return dflt;
  if (!it->is_string()) throw ConfigError(path + "." + key, "must be a string");
  return it->get<std::string>();
}

SpaceConfig parse_space(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "must be an object");
  SpaceConfig sc;
  std::string metric = opt_string(j, "metric", path, "max");
  if (metric == "max")
    sc.metric = MetricRule::Max;
  else if (metric == "euclidean")
    sc.metric = MetricRule::Euclidean;
  else
    throw ConfigError(path + ".metric", "must be 'max' or 'euclidean'");
  const json& axes = need(j, "axes", path);
  if (!axes.is_array() || axes.empty())
    throw ConfigError(path + ".axes", "must be a non-empty array");
  for (std::size_t i = 0; i < axes.size(); ++i) {
    const std::string apath = path + ".axes[" + std::to_string(i) + "]";
    const json& a = axes[i];
    if (!a.is_object()) throw ConfigError(apath, "must be an object");
    std::string type = need_string(a, "type", apath);
    int res = opt_int(a, "resolution", apath, 0);
    if (res < 2) throw ConfigError(apath + ".resolution", "must be an integer >= 2");
    if (type == "periodic") {
      double period = opt_number(a, "period", apath, kTwoPi);
      if (!(period > 0.0)) throw ConfigError(apath + ".period", "must be positive");
      sc.axes.push_back(Axis::periodic(period, res));
    } else if (type == "interval") {
      double lo = need_number(a, "lo", apath);
      double hi = need_number(a, "hi", apath);
      if (!(lo < hi)) throw ConfigError(apath, "interval axis requires lo < hi");
      std::string rule = opt_string(a, "rule", apath, "trapezoid");
      if (rule != "trapezoid" && rule != "gauss")
        throw ConfigError(apath + ".rule", "must be 'trapezoid' or 'gauss'");
      sc.axes.push_back(Axis::interval(lo, hi, res,
                                       rule == "gauss" ? QuadratureRule::GaussLegendre
                                                       : QuadratureRule::Trapezoid));
    } else {
      throw ConfigError(apath + ".type", "must be 'periodic' or 'interval'");
    }
  }
  return sc;
}

KernelConfig parse_kernel(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "must be an object");
  KernelConfig kc;
  std::string kind = need_string(j, "kind", path);
  if (kind == "two_rod_area") {
    kc.kind = KernelKind::TwoRodArea;
  } else if (kind == "sized_two_rod_area") {
    kc.kind = KernelKind::SizedTwoRodArea;
    kc.max_length = opt_number(j, "max_length", path, 1.0);
    if (!(kc.max_length > 0.0))
      throw ConfigError(path + ".max_length", "must be positive");
  } else if (kind == "rhombus_symdiff") {
    kc.kind = KernelKind::RhombusSymdiff;
  } else if (kind == "tabulated") {
    kc.kind = KernelKind::Tabulated;
    kc.matrix_path = need_string(j, "path", path);
  } else {
    throw ConfigError(path + ".kind",
                      "must be one of two_rod_area, sized_two_rod_area, "
                      "rhombus_symdiff, tabulated");
  }
  return kc;
}

InitSpec parse_init(const json& j, const std::string& path, unsigned seed) {
  InitSpec init;
  init.seed = seed;
  if (j.is_null()) return init;
  if (!j.is_object()) throw ConfigError(path, "must be an object");
  std::string kind = opt_string(j, "kind", path, "uniform");
  if (kind == "uniform") {
    init.kind = InitSpec::Kind::Uniform;
  } else if (kind == "perturbed") {
    init.kind = InitSpec::Kind::Perturbed;
  } else if (kind == "random") {
    init.kind = InitSpec::Kind::Random;
  } else if (kind == "tabulated") {
    init.kind = InitSpec::Kind::Tabulated;
    std::string p = need_string(j, "path", path);
    Density d = read_density(p);
    init.values = d.values();
  } else {
    throw ConfigError(path + ".kind",
                      "must be one of uniform, perturbed, random, tabulated");
  }
  init.amplitude = opt_number(j, "amplitude", path, 0.1);
  init.seed = static_cast<unsigned>(opt_int(j, "seed", path, static_cast<int>(seed)));
  return init;
}

CandidateConfig parse_candidate(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "must be an object");
  CandidateConfig cc;
  cc.name = opt_string(j, "name", path, "candidate");
  std::string type = need_string(j, "type", path);
  if (type == "sin_delta_level") {
    cc.type = CandidateConfig::Type::SinDeltaLevel;
    cc.value = need_number(j, "value", path);
    cc.tol = opt_number(j, "tol", path, 1e-9);
  } else if (type == "coordinate_level") {
    cc.type = CandidateConfig::Type::CoordinateLevel;
    cc.axis = opt_int(j, "axis", path, 0);
    cc.value = need_number(j, "value", path);
    cc.tol = opt_number(j, "tol", path, 1e-9);
  } else if (type == "points") {
    cc.type = CandidateConfig::Type::Points;
    const json& pts = need(j, "points", path);
    if (!pts.is_array() || pts.empty())
      throw ConfigError(path + ".points", "must be a non-empty array of coordinate tuples");
    for (const auto& p : pts) {
      if (!p.is_array()) throw ConfigError(path + ".points", "entries must be arrays");
      cc.points.push_back(p.get<std::vector<double>>());
    }
  } else if (type == "auto") {
    cc.type = CandidateConfig::Type::Auto;
    cc.tau = opt_number(j, "tau", path, 1e-6);
  } else {
    throw ConfigError(path + ".type",
                      "must be one of sin_delta_level, coordinate_level, points, auto");
  }
  return cc;
}

SelectionAnalysisConfig parse_selection(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "must be an object");
  SelectionAnalysisConfig sc;
  sc.name = opt_string(j, "name", path, "selection");
  std::string map = need_string(j, "map", path);
  if (map == "two_rod")
    sc.map = SelectionAnalysisConfig::Map::TwoRod;
  else if (map == "rhombus")
    sc.map = SelectionAnalysisConfig::Map::Rhombus;
  else if (map == "identity")
    sc.map = SelectionAnalysisConfig::Map::Identity;
  else
    throw ConfigError(path + ".map", "must be one of two_rod, rhombus, identity");
  sc.c = need_number(j, "c", path);
  if (!(sc.c > 1.0)) throw ConfigError(path + ".c", "expansion constant must exceed 1");
  sc.eps = need_number(j, "eps", path);
  if (!(sc.eps > 0.0)) throw ConfigError(path + ".eps", "must be positive");
  sc.q = opt_number(j, "q", path, 0.7853981633974483);
  sc.resolution = opt_int(j, "resolution", path, 0);
  sc.samples = opt_int(j, "samples", path, 2000);
  if (sc.samples < 10) throw ConfigError(path + ".samples", "must be at least 10");
  return sc;
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("$", "config must be a JSON object");
  ExperimentConfig cfg;
  auto vit = doc.find("version");
  if (vit == doc.end()) throw ConfigError("$.version", "required field is missing");
  if (!vit->is_number_integer() || vit->get<int>() != 1)
    throw ConfigError("$.version", "unsupported config version (expected 1)");
  cfg.version = 1;

  cfg.seed = static_cast<unsigned>(opt_int(doc, "seed", "$", 0));
  cfg.space = parse_space(need(doc, "space", "$"), "$.space");
  cfg.kernel = parse_kernel(need(doc, "kernel", "$"), "$.kernel");

  const json& solver = need(doc, "solver", "$");
  if (!solver.is_object()) throw ConfigError("$.solver", "must be an object");
  cfg.solver.damping = opt_number(solver, "damping", "$.solver", 0.5);
  if (!(cfg.solver.damping > 0.0) || cfg.solver.damping > 1.0)
    throw ConfigError("$.solver.damping", "must lie in (0, 1]");
  cfg.solver.tolerance = opt_number(solver, "tolerance", "$.solver", 1e-10);
  if (!(cfg.solver.tolerance > 0.0))
    throw ConfigError("$.solver.tolerance", "must be positive");
  cfg.solver.max_iterations = opt_int(solver, "max_iterations", "$.solver", 10000);
  if (cfg.solver.max_iterations < 1)
    throw ConfigError("$.solver.max_iterations", "must be >= 1");
  cfg.solver.init = parse_init(solver.contains("init") ? solver["init"] : json(),
                               "$.solver.init", cfg.seed);

  const json& sched = need(doc, "b_schedule", "$");
  if (!sched.is_array() || sched.empty())
    throw ConfigError("$.b_schedule", "must be a non-empty array of numbers");
  for (std::size_t i = 0; i < sched.size(); ++i) {
    if (!sched[i].is_number())
      throw ConfigError("$.b_schedule[" + std::to_string(i) + "]", "must be a number");
    double b = sched[i].get<double>();
    if (b < 0.0)
      throw ConfigError("$.b_schedule[" + std::to_string(i) + "]", "must be >= 0");
    if (i > 0 && !(b > cfg.solver.b_schedule.back()))
      throw ConfigError("$.b_schedule", "must be strictly increasing");
    cfg.solver.b_schedule.push_back(b);
  }

  if (doc.contains("analyses")) {
    const json& an = doc["analyses"];
    if (!an.is_object()) throw ConfigError("$.analyses", "must be an object");
    if (an.contains("branches")) {
      const json& br = an["branches"];
      const std::string path = "$.analyses.branches";
      if (!br.is_object()) throw ConfigError(path, "must be an object");
      BranchAnalysisConfig bc;
      bc.example = opt_int(br, "example", path, 1);
      if (bc.example != 1 && bc.example != 2)
        throw ConfigError(path + ".example", "must be 1 or 2");
      const json& bv = need(br, "b_values", path);
      if (!bv.is_array() || bv.empty())
        throw ConfigError(path + ".b_values", "must be a non-empty array");
      for (const auto& b : bv) {
        if (!b.is_number()) throw ConfigError(path + ".b_values", "entries must be numbers");
        bc.b_values.push_back(b.get<double>());
      }
      for (std::size_t i = 1; i < bc.b_values.size(); ++i)
        if (!(bc.b_values[i] > bc.b_values[i - 1]))
          throw ConfigError(path + ".b_values", "must be strictly increasing");
      bc.scan_resolution = opt_int(br, "scan_resolution", path, 2001);
      if (bc.scan_resolution < 3)
        throw ConfigError(path + ".scan_resolution", "must be >= 3");
      bc.max_length = opt_number(br, "max_length", path, 1.0);
      cfg.branches = bc;
    }
    if (an.contains("concentration")) {
      const json& co = an["concentration"];
      const std::string path = "$.analyses.concentration";
      if (!co.is_object()) throw ConfigError(path, "must be an object");
      ConcentrationAnalysisConfig cc;
      cc.eps = need_number(co, "eps", path);
      if (!(cc.eps > 0.0)) throw ConfigError(path + ".eps", "must be positive");
      const json& cands = need(co, "candidates", path);
      if (!cands.is_array() || cands.empty())
        throw ConfigError(path + ".candidates", "must be a non-empty array");
      for (std::size_t i = 0; i < cands.size(); ++i)
        cc.candidates.push_back(
            parse_candidate(cands[i], path + ".candidates[" + std::to_string(i) + "]"));
      cfg.concentration = cc;
    }
    if (an.contains("selection")) {
      const json& sel = an["selection"];
      const std::string path = "$.analyses.selection";
      if (!sel.is_array()) throw ConfigError(path, "must be an array");
      for (std::size_t i = 0; i < sel.size(); ++i)
        cfg.selections.push_back(parse_selection(sel[i], path + "[" + std::to_string(i) + "]"));
    }
    if (an.contains("zero_pairs")) {
      const json& zp = an["zero_pairs"];
      const std::string path = "$.analyses.zero_pairs";
      if (!zp.is_object()) throw ConfigError(path, "must be an object");
      ZeroPairAnalysisConfig zc;
      zc.tau = opt_number(zp, "tau", path, -1.0);
      zc.tau_rel = opt_number(zp, "tau_rel", path, 1e-3);
      if (zc.tau < 0.0 && !(zc.tau_rel > 0.0))
        throw ConfigError(path, "needs tau or a positive tau_rel");
      cfg.zero_pairs_analysis = zc;
    }
  }

  cfg.output_dir = opt_string(doc, "output_dir", "$", "");
  return cfg;
}

ExperimentConfig load_config(const std::string& path_or_preset) {
  if (is_preset_name(path_or_preset)) return parse_config(preset_config(path_or_preset));
  std::ifstream in(path_or_preset);
  if (!in) throw ConfigError("$", "cannot open config file " + path_or_preset);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("$", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

bool is_preset_name(const std::string& name) {
  return name == "example1" || name == "example2" || name == "example3";
}

json preset_config(const std::string& name) {
  json j;
  j["version"] = 1;
  j["seed"] = 42;
  j["b_schedule"] = {1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0};
  j["solver"] = {{"damping", 0.5},
                 {"tolerance", 1e-10},
                 {"max_iterations", 20000},
                 {"init", {{"kind", "uniform"}}}};
  if (name == "example1") {
    j["space"] = {{"metric", "max"},
                  {"axes",
                   {{{"type", "periodic"}, {"period", kTwoPi}, {"resolution", 256}},
                    {{"type", "periodic"}, {"period", kTwoPi}, {"resolution", 256}}}}};
    j["kernel"] = {{"kind", "two_rod_area"}};
    j["solver"]["init"] = {{"kind", "perturbed"}, {"amplitude", 0.1}};
    j["analyses"]["branches"] = {{"example", 1},
                                 {"b_values", {10.0, 50.0, 200.0, 1000.0}},
                                 {"scan_resolution", 2001}};
    j["analyses"]["concentration"] = {
        {"eps", 0.3},
        {"candidates",
         {{{"name", "area_zero"}, {"type", "sin_delta_level"}, {"value", 0.0}, {"tol", 1e-9}},
          {{"name", "area_plus_half"},
           {"type", "sin_delta_level"},
           {"value", 1.0},
           {"tol", 1e-9}},
          {{"name", "area_minus_half"},
           {"type", "sin_delta_level"},
           {"value", -1.0},
           {"tol", 1e-9}}}}};
    j["analyses"]["selection"] = {{{"name", "band_to_quarter"},
                                   {"map", "two_rod"},
                                   {"c", 1.25},
                                   {"eps", 0.2},
                                   {"resolution", 512},
                                   {"samples", 1500}},
                                  {{"name", "identity_control"},
                                   {"map", "identity"},
                                   {"c", 1.5},
                                   {"eps", 0.2},
                                   {"resolution", 512},
                                   {"samples", 1500}}};
  } else if (name == "example2") {
    j["space"] = {{"metric", "max"},
                  {"axes",
                   {{{"type", "interval"}, {"lo", 0.0}, {"hi", 1.0}, {"resolution", 16}},
                    {{"type", "interval"}, {"lo", 0.0}, {"hi", 1.0}, {"resolution", 16}},
                    {{"type", "periodic"}, {"period", kTwoPi}, {"resolution", 16}},
                    {{"type", "periodic"}, {"period", kTwoPi}, {"resolution", 16}}}}};
    j["kernel"] = {{"kind", "sized_two_rod_area"}, {"max_length", 1.0}};
    j["analyses"]["branches"] = {{"example", 2},
                                 {"b_values", {10.0, 50.0, 200.0, 1000.0}},
                                 {"scan_resolution", 801}};
  } else if (name == "example3") {
    j["space"] = {{"metric", "max"},
                  {"axes",
                   {{{"type", "interval"},
                     {"lo", 0.0},
                     {"hi", kHalfPi},
                     {"resolution", 256}}}}};
    j["kernel"] = {{"kind", "rhombus_symdiff"}};
    j["analyses"]["concentration"] = {
        {"eps", 0.1},
        {"candidates",
         {{{"name", "square"}, {"type", "points"}, {"points", {{kHalfPi}}}},
          {{"name", "quarter"}, {"type", "points"}, {"points", {{0.7853981633974483}}}}}}};
    j["analyses"]["selection"] = {{{"name", "quarter_to_square"},
                                   {"map", "rhombus"},
                                   {"q", 0.7853981633974483},
                                   {"c", 1.1},
                                   {"eps", 0.01},
                                   {"resolution", 4096},
                                   {"samples", 500}},
                                  {{"name", "identity_control"},
                                   {"map", "identity"},
                                   {"c", 1.5},
                                   {"eps", 0.05},
                                   {"resolution", 1024},
                                   {"samples", 500}}};
    j["analyses"]["zero_pairs"] = {{"tau", 1e-6}};
  } else {
    throw ConfigError("$", "unknown preset " + name);
  }
  return j;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["version"] = cfg.version;
  j["seed"] = cfg.seed;
  json axes = json::array();
  for (const Axis& ax : cfg.space.axes) {
    if (ax.kind == AxisKind::Periodic)
      axes.push_back({{"type", "periodic"}, {"period", ax.period}, {"resolution", ax.resolution}});
    else
      axes.push_back({{"type", "interval"},
                      {"lo", ax.lo},
                      {"hi", ax.hi},
                      {"resolution", ax.resolution},
                      {"rule", ax.rule == QuadratureRule::Trapezoid ? "trapezoid" : "gauss"}});
  }
  j["space"] = {{"metric", cfg.space.metric == MetricRule::Max ? "max" : "euclidean"},
                {"axes", axes}};
  KernelSpec tmp;
  tmp.kind = cfg.kernel.kind;
  j["kernel"] = {{"kind", tmp.name()}};
  if (cfg.kernel.kind == KernelKind::SizedTwoRodArea)
    j["kernel"]["max_length"] = cfg.kernel.max_length;
  if (cfg.kernel.kind == KernelKind::Tabulated) j["kernel"]["path"] = cfg.kernel.matrix_path;
  j["solver"] = {{"damping", cfg.solver.damping},
                 {"tolerance", cfg.solver.tolerance},
                 {"max_iterations", cfg.solver.max_iterations}};
  j["b_schedule"] = cfg.solver.b_schedule;
  j["output_dir"] = cfg.output_dir;
  return j;
}

}  // namespace onsager
