#include "onsager/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace onsager {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_hex(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

namespace {

[[noreturn]] void parse_fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

std::string axis_line(const Axis& ax) {
  std::ostringstream os;
  if (ax.kind == AxisKind::Periodic) {
    os << "axis periodic " << format_hex(ax.period) << " " << ax.resolution;
  } else {
    os << "axis interval " << format_hex(ax.lo) << " " << format_hex(ax.hi) << " "
       << ax.resolution << " "
       << (ax.rule == QuadratureRule::Trapezoid ? "trapezoid" : "gauss");
  }
  return os.str();
}

}  // namespace

void write_density(const std::string& path, const Density& f) {
  std::FILE* out = std::fopen(path.c_str(), "wb");
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const DiscreteSpace& sp = *f.space();
  std::fprintf(out, "onsager-density 1\n");
  std::fprintf(out, "hash %016" PRIx64 "\n", sp.descriptor_hash());
  std::fprintf(out, "metric %s\n", sp.metric_rule() == MetricRule::Max ? "max" : "euclidean");
  std::fprintf(out, "axes %d\n", sp.dim());
  for (const Axis& ax : sp.axes()) std::fprintf(out, "%s\n", axis_line(ax).c_str());
  std::fprintf(out, "values %zu\n", f.size());
  for (std::size_t i = 0; i < f.size(); ++i) std::fprintf(out, "%a\n", f[i]);
  if (std::fclose(out) != 0) throw std::runtime_error("failed writing " + path);
}

namespace {

Density read_density_impl(const std::string& path, const SpacePtr& expected) {
  std::ifstream in(path);
  if (!in) parse_fail(path, "cannot open");
  std::string line, word;
  if (!std::getline(in, line) || line != "onsager-density 1")
    parse_fail(path, "bad header (expected 'onsager-density 1')");

  std::uint64_t hash = 0;
  if (!(in >> word) || word != "hash" || !(in >> std::hex >> hash >> std::dec))
    parse_fail(path, "missing hash line");
  MetricRule metric = MetricRule::Max;
  if (!(in >> word) || word != "metric" || !(in >> word)) parse_fail(path, "missing metric");
  if (word == "max")
    metric = MetricRule::Max;
  else if (word == "euclidean")
    metric = MetricRule::Euclidean;
  else
    parse_fail(path, "unknown metric " + word);

  int naxes = 0;
  if (!(in >> word) || word != "axes" || !(in >> naxes) || naxes < 1)
    parse_fail(path, "missing axes count");
  std::vector<Axis> axes;
  for (int a = 0; a < naxes; ++a) {
    std::string kind;
    if (!(in >> word) || word != "axis" || !(in >> kind)) parse_fail(path, "bad axis line");
    if (kind == "periodic") {
      std::string per;
      int res;
      if (!(in >> per >> res)) parse_fail(path, "bad periodic axis");
      axes.push_back(Axis::periodic(std::strtod(per.c_str(), nullptr), res));
    } else if (kind == "interval") {
      std::string lo, hi, rule;
      int res;
      if (!(in >> lo >> hi >> res >> rule)) parse_fail(path, "bad interval axis");
      axes.push_back(Axis::interval(std::strtod(lo.c_str(), nullptr),
                                    std::strtod(hi.c_str(), nullptr), res,
                                    rule == "gauss" ? QuadratureRule::GaussLegendre
                                                    : QuadratureRule::Trapezoid));
    } else {
      parse_fail(path, "unknown axis kind " + kind);
    }
  }

  std::size_t nvals = 0;
  if (!(in >> word) || word != "values" || !(in >> nvals)) parse_fail(path, "missing values");
  std::vector<double> values(nvals);
  for (std::size_t i = 0; i < nvals; ++i) {
    if (!(in >> word)) parse_fail(path, "truncated values");
    values[i] = std::strtod(word.c_str(), nullptr);
  }

  SpacePtr space = expected ? expected : build_space(axes, metric);
  if (space->descriptor_hash() != hash)
    parse_fail(path, "space descriptor hash mismatch");
  if (space->size() != nvals) parse_fail(path, "value count does not match the space");
  return Density(space, std::move(values));
}

}  // namespace

Density read_density(const std::string& path) { return read_density_impl(path, nullptr); }

Density read_density(const std::string& path, const SpacePtr& space) {
  if (!space) throw std::invalid_argument("read_density: null space");
  return read_density_impl(path, space);
}

void write_matrix(const std::string& path, const std::vector<double>& entries,
                  std::size_t n) {
  if (entries.size() != n * n)
    throw std::invalid_argument("write_matrix: need n*n entries");
  std::FILE* out = std::fopen(path.c_str(), "wb");
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  std::fprintf(out, "onsager-matrix 1\n");
  std::fprintf(out, "n %zu\n", n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      std::fprintf(out, "%a%c", entries[i * n + j], j + 1 == n ? '\n' : ' ');
  }
  if (std::fclose(out) != 0) throw std::runtime_error("failed writing " + path);
}

std::pair<std::vector<double>, std::size_t> read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) parse_fail(path, "cannot open");
  std::string line, word;
  if (!std::getline(in, line) || line != "onsager-matrix 1")
    parse_fail(path, "bad header (expected 'onsager-matrix 1')");
  std::size_t n = 0;
  if (!(in >> word) || word != "n" || !(in >> n) || n == 0)
    parse_fail(path, "missing dimension");
  std::vector<double> entries(n * n);
  for (std::size_t i = 0; i < n * n; ++i) {
    if (!(in >> word)) parse_fail(path, "truncated matrix");
    entries[i] = std::strtod(word.c_str(), nullptr);
  }
  return {std::move(entries), n};
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns) {
  std::FILE* out = std::fopen(path.c_str(), "wb");
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out_ = out;
  for (std::size_t i = 0; i < columns.size(); ++i)
    std::fprintf(out, "%s%c", columns[i].c_str(), i + 1 == columns.size() ? '\n' : ',');
}

CsvWriter::~CsvWriter() {
  if (out_) std::fclose(static_cast<std::FILE*>(out_));
}

void CsvWriter::field(const std::string& s) {
  std::FILE* out = static_cast<std::FILE*>(out_);
  if (row_open_) std::fputc(',', out);
  std::fputs(s.c_str(), out);
  row_open_ = true;
}

void CsvWriter::field(double v) { field(format_double(v)); }

void CsvWriter::field(long long v) { field(std::to_string(v)); }

void CsvWriter::end_row() {
  std::fputc('\n', static_cast<std::FILE*>(out_));
  row_open_ = false;
}

}  // namespace onsager
