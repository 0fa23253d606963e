#pragma once

// Text outputs: CSV tables and the plain-text grid dump.
//
// Grid dump: one header line "# shape n_0 ... spacing h_0 ... t <time>"
// followed by one line per node in row-major order holding the node
// coordinates and the field components.

#include "slns/field.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

namespace slns::io {

/// Shortest round-trip representation used in every output file.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) { append_row(header); }

  CsvWriter& row(const std::vector<std::string>& cells) {
    require(cells.size() == columns_, "CSV row has " + std::to_string(cells.size()) + " cells, expected " +
                                          std::to_string(columns_));
    append_row(cells);
    return *this;
  }

  const std::string& str() const { return text_; }

 private:
  void append_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
  }

  std::size_t columns_;
  std::string text_;
};

template <int Dim, class Components>
void write_grid_dump(std::ostream& out, const Grid<Dim>& grid, double t, int n_components, Components&& component) {
  out << "# shape";
  for (int a = 0; a < Dim; ++a) out << ' ' << grid.shape(a);
  out << " spacing";
  for (int a = 0; a < Dim; ++a) out << ' ' << format_double(grid.spacing(a));
  out << " t " << format_double(t) << '\n';
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Vec<Dim> x = grid.node(k);
    for (int a = 0; a < Dim; ++a) out << (a ? " " : "") << format_double(x[a]);
    for (int c = 0; c < n_components; ++c) out << ' ' << format_double(component(k, c));
    out << '\n';
  }
}

template <int Dim>
void write_grid_dump(std::ostream& out, const VectorField<Dim>& f, double t) {
  write_grid_dump<Dim>(out, f.grid(), t, Dim, [&](std::size_t k, int c) { return f[c][k]; });
}

template <int Dim>
void write_grid_dump(std::ostream& out, const ScalarField<Dim>& f, double t) {
  write_grid_dump<Dim>(out, f.grid(), t, 1, [&](std::size_t k, int) { return f[k]; });
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw UsageError("failed writing '" + path + "'");
}

}  // namespace slns::io
