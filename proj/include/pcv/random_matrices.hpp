#pragma once

#include <cstddef>

#include "pcv/matrix_core.hpp"
#include "pcv/random.hpp"

namespace pcv {

// X X^T / m + shift I with X an n x m Gaussian matrix, m = n + extra.
DenseSym random_spd(std::size_t n, Rng& rng, double shift = 1e-2, std::size_t extra = 2);

// Gaussian kernel on n standard normal points in d dims plus mu I. Smooth
// spectra like these make low-rank plus sparse structure visible.
DenseSym random_kernel_spd(std::size_t n, std::size_t d, double mu, Rng& rng);

// Rank-k positive semidefinite matrix G G^T with G n x k Gaussian.
DenseSym random_low_rank_psd(std::size_t n, std::size_t k, Rng& rng);

// Row i (for i >= lo) gets a uniformly random subset of [lo, i) with size
// uniform in [0, min(max_size, i - lo)].
SparsityPattern random_pattern(std::size_t n, std::size_t max_size, Rng& rng,
                               std::size_t lo = 0);

}  // namespace pcv
