#pragma once

#include <iosfwd>
#include <string>

#include "pcv/kernels_io.hpp"
#include "pcv/matrix_core.hpp"

namespace pcv {

// Plain text, one record per line, doubles in shortest round-trip form so a
// save/load cycle is bit exact.
//
//   PCVF 1
//   n <n>
//   order <perm[0]> ... <perm[n-1]>
//   diag <d[0]> ... <d[n-1]>
//   row <i> <k> <col> <coef> ... (one line per row with k > 0)
//   end
void write_factor(std::ostream& out, const VecchiaFactor& f);
VecchiaFactor read_factor(std::istream& in);
void save_factor(const std::string& path, const VecchiaFactor& f);
VecchiaFactor load_factor(const std::string& path);

//   PCVD 1
//   n <n> d <d> labels <0|1>
//   provenance <text to end of line>
//   <d values, then the label if present> (n lines)
//   end
void write_dataset(std::ostream& out, const Dataset& ds);
Dataset read_dataset(std::istream& in);
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

}  // namespace pcv
