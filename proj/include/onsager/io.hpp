#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "onsager/space.hpp"

namespace onsager {

/// Writes a density with a self-contained space descriptor header. Values
/// are hex floats, so a read-back is bit-exact.
void write_density(const std::string& path, const Density& f);

/// Reads a density file, rebuilding its space from the header.
Density read_density(const std::string& path);

/// Reads a density file onto an existing space; throws when the stored
/// descriptor hash or size does not match.
Density read_density(const std::string& path, const SpacePtr& space);

/// Dense square matrix file: a short header with the dimension, then n*n
/// row-major values (hex floats accepted and produced).
void write_matrix(const std::string& path, const std::vector<double>& entries,
                  std::size_t n);
std::pair<std::vector<double>, std::size_t> read_matrix(const std::string& path);

/// Deterministic CSV writer; numeric cells use round-trip precision.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void field(const std::string& s);
  void field(double v);
  void field(long long v);
  void end_row();

 private:
  void* out_;  // FILE*
  bool row_open_ = false;
};

std::string format_double(double v);   // shortest round-trip decimal
std::string format_hex(double v);      // hex float, bit-exact

}  // namespace onsager
