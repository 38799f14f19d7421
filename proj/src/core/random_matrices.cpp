#include "pcv/random_matrices.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pcv/error.hpp"

namespace pcv {

DenseSym random_spd(std::size_t n, Rng& rng, double shift, std::size_t extra) {
  const std::size_t m = n + extra;
  Matrix x(n, m);
  for (double& v : x.data()) v = rng.normal();
  DenseSym a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double s = dot(x.row(i), x.row(j)) / static_cast<double>(m);
      if (i == j) s += shift;
      a.set(i, j, s);
    }
  return a;
}

DenseSym random_kernel_spd(std::size_t n, std::size_t d, double mu, Rng& rng) {
  require(d >= 1, "random_kernel_spd: d must be positive");
  Matrix z(n, d);
  for (double& v : z.data()) v = rng.normal();
  DenseSym a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) d2 += (z(i, k) - z(j, k)) * (z(i, k) - z(j, k));
      a.set(i, j, std::exp(-d2 / (2.0 * static_cast<double>(d))) + (i == j ? mu : 0.0));
    }
  return a;
}

DenseSym random_low_rank_psd(std::size_t n, std::size_t k, Rng& rng) {
  Matrix g(n, k);
  for (double& v : g.data()) v = rng.normal();
  DenseSym a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) a.set(i, j, dot(g.row(i), g.row(j)));
  return a;
}

SparsityPattern random_pattern(std::size_t n, std::size_t max_size, Rng& rng,
                               std::size_t lo) {
  std::vector<std::vector<std::size_t>> sets(n);
  std::vector<std::size_t> pool;
  for (std::size_t i = lo + 1; i < n; ++i) {
    const std::size_t avail = i - lo;
    const std::size_t size = rng.index(std::min(max_size, avail) + 1);
    pool.resize(avail);
    std::iota(pool.begin(), pool.end(), lo);
    // Partial Fisher-Yates.
    for (std::size_t k = 0; k < size; ++k) std::swap(pool[k], pool[k + rng.index(avail - k)]);
    sets[i].assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(size));
    std::sort(sets[i].begin(), sets[i].end());
  }
  return SparsityPattern(std::move(sets));
}

}  // namespace pcv
