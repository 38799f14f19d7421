#pragma once

#include <cstdint>
#include <string>

#include "oracles.hpp"
#include "pcv/matrix_core.hpp"

namespace test {

inline pcv::DenseSym to_sym(const oracle::Mat& a) {
  pcv::DenseSym s(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j) s.set(i, j, a[i][j]);
  return s;
}

inline oracle::Mat to_mat(const pcv::Matrix& m) {
  oracle::Mat a = oracle::zeros(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) a[i][j] = m(i, j);
  return a;
}

inline oracle::Mat to_mat(const pcv::DenseSym& s) { return to_mat(s.matrix()); }

// P^T A P for the permutation perm (position k holds original index perm[k]).
inline oracle::Mat permute(const oracle::Mat& a, const std::vector<std::size_t>& perm) {
  oracle::Mat p = oracle::zeros(a.size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) p[i][j] = a[perm[i]][perm[j]];
  return p;
}

// The 6 x 6 and 4 x 4 fixtures used with the frozen values from
// derive_fixtures.py.
inline oracle::Mat fixture_a6() {
  const double b[6][6] = {{2, 1, 0, 1, 0, 1}, {1, 3, 1, 0, 1, 0}, {0, 1, 2, 1, 0, 1},
                          {1, 0, 1, 3, 1, 0}, {0, 1, 0, 1, 2, 1}, {1, 0, 1, 0, 1, 3}};
  oracle::Mat a = oracle::zeros(6, 6);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      for (std::size_t k = 0; k < 6; ++k) a[i][j] += b[i][k] * b[j][k];
      if (i == j) a[i][j] += 1.0;
    }
  return a;
}

inline oracle::Mat fixture_a4() {
  return {{4.0, 1.0, 0.5, 0.2}, {1.0, 3.0, 0.4, 0.1}, {0.5, 0.4, 2.0, 0.3}, {0.2, 0.1, 0.3, 1.0}};
}

inline std::string temp_path(const std::string& name) {
  return std::string(TEST_TMP_DIR) + "/" + name;
}

}  // namespace test
