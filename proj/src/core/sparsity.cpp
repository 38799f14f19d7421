#include "pcv/sparsity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "parallel.hpp"
#include "pcv/error.hpp"
#include "pcv/vecchia.hpp"

namespace pcv {

namespace {

// Indices of the k smallest keys, ties to the lower index, returned ascending.
std::vector<std::size_t> smallest(std::vector<std::pair<double, std::size_t>> keyed,
                                  std::size_t k) {
  k = std::min(k, keyed.size());
  std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(k),
                    keyed.end());
  std::vector<std::size_t> out(k);
  for (std::size_t t = 0; t < k; ++t) out[t] = keyed[t].second;
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<std::size_t> choose_candidates(const EntryOracle& a, std::size_t i,
                                           std::size_t c, std::size_t lo,
                                           const Vector* diag) {
  require(i < a.size(), "choose_candidates: index out of range");
  if (lo >= i) return {};
  const std::size_t avail = i - lo;
  if (c == 0 || c >= avail) {
    std::vector<std::size_t> all(avail);
    std::iota(all.begin(), all.end(), lo);
    return all;
  }
  auto d = [&](std::size_t j) { return diag ? (*diag)[j] : a.entry(j, j); };
  const double aii = d(i);
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(avail);
  for (std::size_t j = lo; j < i; ++j)
    keyed.emplace_back(aii - 2.0 * a.entry(i, j) + d(j), j);
  return smallest(std::move(keyed), c);
}

std::vector<std::size_t> choose_pattern_nn(const EntryOracle& residual, std::size_t i,
                                           std::size_t q,
                                           std::span<const std::size_t> candidates) {
  if (q >= candidates.size()) {
    std::vector<std::size_t> all(candidates.begin(), candidates.end());
    std::sort(all.begin(), all.end());
    return all;
  }
  const double rii = residual.entry(i, i);
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(candidates.size());
  for (std::size_t k : candidates)
    keyed.emplace_back(rii - 2.0 * residual.entry(i, k) + residual.entry(k, k), k);
  return smallest(std::move(keyed), q);
}

OmpSelection choose_pattern_omp(const EntryOracle& residual, std::size_t i,
                                std::size_t q, std::span<const std::size_t> candidates) {
  const std::size_t m = candidates.size();
  OmpSelection out;
  const double alpha = residual.entry(i, i);
  out.distances.push_back(std::max(alpha, 0.0));
  if (q == 0 || m == 0) return out;

  // Gram matrix on the candidates and their correlation with e_i.
  Matrix g(m, m);
  Vector corr0(m);
  double scale = std::max(alpha, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a; b < m; ++b) {
      const double v = residual.entry(candidates[a], candidates[b]);
      g(a, b) = v;
      g(b, a) = v;
    }
    corr0[a] = residual.entry(candidates[a], i);
    scale = std::max(scale, g(a, a));
  }
  const double degenerate = 1e-12 * scale;

  // Batch OMP: W = L^{-1} G(Q, C) row by row, z = L^{-1} g(Q).
  std::vector<Vector> w;
  Vector z;
  std::vector<char> used(m, 0);
  double projected = 0.0;
  const std::size_t steps = std::min(q, m);
  for (std::size_t step = 0; step < steps; ++step) {
    std::size_t best = m;
    double best_gain = -1.0, best_schur = 0.0, best_corr = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      if (used[k]) continue;
      double schur = g(k, k);
      double corr = corr0[k];
      for (std::size_t t = 0; t < w.size(); ++t) {
        schur -= w[t][k] * w[t][k];
        corr -= w[t][k] * z[t];
      }
      if (!(schur > degenerate)) continue;
      const double gain = corr * corr / schur;
      // Candidates arrive ascending from choose_candidates; compare indices
      // anyway so the tie rule holds for any input order.
      if (gain > best_gain ||
          (gain == best_gain && best < m && candidates[k] < candidates[best])) {
        best = k;
        best_gain = gain;
        best_schur = schur;
        best_corr = corr;
      }
    }
    if (best == m) break;
    used[best] = 1;
    const double root = std::sqrt(best_schur);
    Vector row(m);
    for (std::size_t k = 0; k < m; ++k) {
      double s = g(best, k);
      for (std::size_t t = 0; t < w.size(); ++t) s -= w[t][best] * w[t][k];
      row[k] = s / root;
    }
    w.push_back(std::move(row));
    z.push_back(best_corr / root);
    projected += z.back() * z.back();
    out.picked.push_back(candidates[best]);
    out.distances.push_back(std::max(alpha - projected, 0.0));
  }
  out.set = out.picked;
  std::sort(out.set.begin(), out.set.end());
  return out;
}

SparsityPattern select_residual_pattern(const EntryOracle& a,
                                        const PartialCholeskyFactor& partial,
                                        const SparsityChooser& chooser,
                                        unsigned threads) {
  const std::size_t n = a.size();
  const std::size_t r = partial.rank;
  require(partial.size() == n, "select_residual_pattern: size mismatch");
  require(chooser.c == 0 || chooser.c >= chooser.q,
          "select_residual_pattern: candidate count must be 0 or at least q");
  std::vector<std::vector<std::size_t>> sets(n);
  if (chooser.q == 0) return SparsityPattern(std::move(sets));

  PermutedOracle at(a, partial.order);
  ResidualOracle residual(a, partial);
  PermutedOracle rt(residual, partial.order);
  Vector diag;
  if (chooser.c != 0) {
    diag.resize(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = at.entry(i, i);
  }
  detail::parallel_for(n > r ? n - r : 0, threads, [&](std::size_t offset) {
    const std::size_t i = r + offset;
    const auto cand =
        choose_candidates(at, i, chooser.c, r, chooser.c != 0 ? &diag : nullptr);
    if (chooser.rule == SparsityRule::NN)
      sets[i] = choose_pattern_nn(rt, i, chooser.q, cand);
    else
      sets[i] = choose_pattern_omp(rt, i, chooser.q, cand).set;
  });
  return SparsityPattern(std::move(sets));
}

}  // namespace pcv
