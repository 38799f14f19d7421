#include "pcv/partial_cholesky.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <memory>

#include "pcv/error.hpp"
#include "pcv/kaporin.hpp"
#include "pcv/random.hpp"
#include "pcv/vecchia.hpp"

namespace pcv {

namespace {

// Relative size below which a pivot's residual counts as zero.
constexpr double kPivotTolerance = 1e-12;

}  // namespace

PartialCholeskyBuilder::PartialCholeskyBuilder(const EntryOracle& a,
                                               bool track_distances)
    : a_(a), n_(a.size()), track_(track_distances), selected_(a.size(), 0) {
  if (track_) {
    diag_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      diag_[i] = a_.entry(i, i);
      trace_ += std::max(diag_[i], 0.0);
    }
    state_.residual_diag.resize(n_);
    for (std::size_t i = 0; i < n_; ++i)
      state_.residual_diag[i] = std::max(diag_[i], 0.0);
    state_.pointwise_dists = state_.residual_diag;
  }
}

void PartialCholeskyBuilder::add_pivot(std::size_t u) {
  require(u < n_ && !selected_[u], "add_pivot: invalid or repeated pivot");
  work_.resize(n_);
  for (std::size_t k = 0; k < n_; ++k) work_[k] = a_.entry(k, u);

  if (track_) {
    const double auu = work_[u];
    const bool first = pivots_.empty();
    for (std::size_t k = 0; k < n_; ++k) {
      const double dist = std::max(diag_[k] - 2.0 * work_[k] + auu, 0.0);
      auto& p = state_.pointwise_dists[k];
      p = first ? dist : std::min(p, dist);
    }
    state_.pointwise_dists[u] = 0.0;
  }

  const double scale = std::max(work_[u], 0.0);
  Vector v = work_;
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    const double coef = d_[j] * columns_[j][u];
    if (coef == 0.0) continue;
    const Vector& col = columns_[j];
    for (std::size_t k = 0; k < n_; ++k) v[k] -= col[k] * coef;
  }

  const double pivot = v[u];
  Vector column(n_, 0.0);
  double dj = 0.0;
  if (pivot > kPivotTolerance * scale && pivot > 0.0) {
    for (std::size_t k = 0; k < n_; ++k) column[k] = v[k] / pivot;
    dj = pivot;
  }
  column[u] = 1.0;
  for (std::size_t j = 0; j < pivots_.size(); ++j) column[pivots_[j]] = 0.0;

  if (track_) {
    auto& res = state_.residual_diag;
    if (dj > 0.0)
      for (std::size_t k = 0; k < n_; ++k)
        res[k] = std::max(res[k] - v[k] * v[k] / dj, 0.0);
    res[u] = 0.0;
  }

  columns_.push_back(std::move(column));
  d_.push_back(dj);
  pivots_.push_back(u);
  selected_[u] = 1;
}

PartialCholeskyFactor PartialCholeskyBuilder::finish(const PivotOrder& order) const {
  require(order.size() == n_, "finish: order size mismatch");
  const std::size_t r = pivots_.size();
  for (std::size_t j = 0; j < r; ++j)
    require(order[j] == pivots_[j], "finish: order does not start with the pivots");
  PartialCholeskyFactor f{order, r, Matrix(n_, r), d_};
  for (std::size_t k = 0; k < n_; ++k)
    for (std::size_t j = 0; j < r; ++j) f.l(k, j) = columns_[j][order[k]];
  return f;
}

PartialCholeskyFactor build_partial_cholesky(const EntryOracle& a,
                                             const PivotOrder& order,
                                             std::size_t r) {
  require(order.size() == a.size(), "build_partial_cholesky: order size mismatch");
  require(r <= a.size(), "build_partial_cholesky: rank exceeds dimension");
  PartialCholeskyBuilder builder(a, false);
  for (std::size_t k = 0; k < r; ++k) builder.add_pivot(order[k]);
  return builder.finish(order);
}

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

std::size_t sample_weighted(const Vector& w, Rng& rng) {
  double total = 0.0;
  for (double x : w) total += x;
  if (!(total > 0.0)) return kNone;
  const double target = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last = kNone;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    acc += w[i];
    last = i;
    if (target < acc) return i;
  }
  return last;
}

std::size_t argmax_random_ties(const Vector& w, const std::vector<char>& eligible,
                               Rng& rng) {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> ties;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!eligible[i]) continue;
    if (w[i] > best) {
      best = w[i];
      ties.assign(1, i);
    } else if (w[i] == best) {
      ties.push_back(i);
    }
  }
  if (ties.empty()) return kNone;
  if (ties.size() == 1) return ties.front();
  return ties[rng.index(ties.size())];
}

double log_floor(double x) { return std::log(std::max(x, 1e-300)); }

// Greedy Kaporin minimization on a dense copy of the residual. For SPD A the
// condition number of the partial Cholesky + diagonal approximation with pivot
// set R is det A(R,R) * prod_{i not in R} res_R(i) / det A, so adding j scores
// log res_R(j) + sum_{i not in R+j} log(res_R(i) - R(i,j)^2 / res_R(j)).
std::vector<std::size_t> adaptive_search(const EntryOracle& a, std::size_t r,
                                         bool full_recompute) {
  const std::size_t n = a.size();
  Matrix res = materialize(a);
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += std::max(res(i, i), 0.0);
  const double eligible_cut = kPivotTolerance * trace;

  std::vector<std::size_t> pivots;
  std::vector<char> selected(n, 0);
  std::unique_ptr<DenseOracle> dense;
  if (full_recompute) dense = std::make_unique<DenseOracle>(DenseSym(res));

  for (std::size_t step = 0; step < r; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = kNone;
    for (std::size_t j = 0; j < n; ++j) {
      const double rjj = res(j, j);
      if (selected[j] || !(rjj > eligible_cut)) continue;
      double score = 0.0;
      if (full_recompute) {
        std::vector<std::size_t> trial = pivots;
        trial.push_back(j);
        const PivotOrder order = PivotOrder::from_prefix(n, trial);
        const VecchiaFactor f =
            build_hybrid(*dense, order, trial.size(), SparsityPattern::empty(n));
        const KaporinReport rep = kappa_from_factor(*dense, f);
        score = rep.finite ? rep.log_kappa : std::numeric_limits<double>::infinity();
      } else {
        score = std::log(rjj);
        for (std::size_t i = 0; i < n; ++i) {
          if (selected[i] || i == j) continue;
          const double rij = res(i, j);
          score += log_floor(res(i, i) - rij * rij / rjj);
        }
      }
      if (score < best) {
        best = score;
        best_j = j;
      }
    }
    if (best_j == kNone) break;

    const std::size_t j = best_j;
    const double rjj = res(j, j);
    Vector col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = res(i, j);
    for (std::size_t i = 0; i < n; ++i) {
      const double ci = col[i] / rjj;
      if (ci == 0.0) continue;
      for (std::size_t k = 0; k < n; ++k) res(i, k) -= ci * col[k];
    }
    for (std::size_t i = 0; i < n; ++i) {
      res(i, j) = 0.0;
      res(j, i) = 0.0;
    }
    selected[j] = 1;
    pivots.push_back(j);
  }
  return pivots;
}

}  // namespace

PivotSelection choose_pivots(const EntryOracle& a, const PivotChooser& chooser,
                             std::size_t r) {
  const std::size_t n = a.size();
  require(r <= n, "choose_pivots: rank exceeds dimension");

  if (chooser.rule == PivotRule::Fixed || chooser.rule == PivotRule::AdaptiveSearch) {
    std::vector<std::size_t> pivots;
    if (chooser.rule == PivotRule::Fixed) {
      require(chooser.fixed_order.size() >= r,
              "choose_pivots: fixed order shorter than the rank");
      pivots.assign(chooser.fixed_order.begin(), chooser.fixed_order.begin() + r);
    } else {
      pivots = adaptive_search(a, r, chooser.full_recompute);
    }
    PivotOrder order = PivotOrder::from_prefix(n, pivots);
    PartialCholeskyFactor f = build_partial_cholesky(a, order, pivots.size());
    return {std::move(pivots), std::move(order), std::move(f), {}};
  }

  Rng rng(chooser.seed);
  PartialCholeskyBuilder builder(a, true);
  const double eligible_cut = kPivotTolerance * builder.trace();
  std::vector<char> eligible(n, 0);
  Vector weights(n);
  for (std::size_t step = 0; step < r; ++step) {
    const DistanceState& st = builder.state();
    for (std::size_t i = 0; i < n; ++i)
      eligible[i] = !builder.selected(i) && st.residual_diag[i] > eligible_cut;

    std::size_t pick = kNone;
    switch (chooser.rule) {
      case PivotRule::Rpc:
      case PivotRule::Sds: {
        const Vector& src = chooser.rule == PivotRule::Rpc ? st.residual_diag
                                                           : st.pointwise_dists;
        for (std::size_t i = 0; i < n; ++i) weights[i] = eligible[i] ? src[i] : 0.0;
        pick = sample_weighted(weights, rng);
        break;
      }
      case PivotRule::Cpc:
        pick = argmax_random_ties(st.residual_diag, eligible, rng);
        break;
      case PivotRule::Fps:
        pick = argmax_random_ties(st.pointwise_dists, eligible, rng);
        break;
      default:
        break;
    }
    if (pick == kNone) break;
    builder.add_pivot(pick);
  }

  std::vector<std::size_t> pivots = builder.pivots();
  PivotOrder order = PivotOrder::from_prefix(n, pivots);
  PartialCholeskyFactor f = builder.finish(order);
  return {std::move(pivots), std::move(order), std::move(f), builder.diagonal()};
}

EtaObjectives eta_objectives(const EntryOracle& a, std::span<const std::size_t> r) {
  PartialCholeskyBuilder builder(a, true);
  for (std::size_t u : r) builder.add_pivot(u);
  const DistanceState& st = builder.state();
  EtaObjectives eta;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double res = builder.selected(i) ? 0.0 : st.residual_diag[i];
    const double pw = builder.selected(i) ? 0.0 : st.pointwise_dists[i];
    eta.rpc += res;
    eta.sds += pw;
    eta.cpc = std::max(eta.cpc, std::sqrt(res));
    eta.fps = std::max(eta.fps, std::sqrt(pw));
  }
  return eta;
}

double verify_fps_ratio(const EntryOracle& a, std::size_t r, std::uint64_t seed) {
  const std::size_t n = a.size();
  require(n <= 12, "verify_fps_ratio: exhaustive search needs n <= 12");
  require(r <= n, "verify_fps_ratio: rank exceeds dimension");

  PivotChooser fps{PivotRule::Fps, seed, {}, false};
  const PivotSelection sel = choose_pivots(a, fps, r);
  const double achieved = eta_objectives(a, sel.pivots).fps;

  // Pointwise square distances once, then enumerate every r-subset by bitmask.
  Matrix dist(n, n);
  Vector diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = a.entry(i, i);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      const double d = std::max(diag[i] - 2.0 * a.entry(i, j) + diag[j], 0.0);
      dist(i, j) = d;
      dist(j, i) = d;
    }
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != r) continue;
    double worst = 0.0;
    for (std::size_t i = 0; i < n && worst < best; ++i) {
      if (mask & (1u << i)) continue;
      double m = r == 0 ? std::max(diag[i], 0.0)
                        : std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j)
        if (mask & (1u << j)) m = std::min(m, dist(i, j));
      worst = std::max(worst, m);
    }
    best = std::min(best, worst);
  }
  const double optimum = std::sqrt(best);
  if (optimum <= 0.0) return achieved <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return achieved / optimum;
}

}  // namespace pcv
