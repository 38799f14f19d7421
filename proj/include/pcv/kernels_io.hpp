#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pcv/matrix_core.hpp"

namespace pcv {

struct Dataset {
  Matrix points;  // n x d
  std::optional<Vector> labels;
  std::string provenance;

  std::size_t size() const { return points.rows(); }
  std::size_t dim() const { return points.cols(); }
};

enum class StandardizeMode {
  FullFile,   // column statistics of every row in the file, then keep the first n
  Subsample,  // keep the first n, then use their statistics
  None,
};

// Mean zero and unit sample variance per column; constant columns become zero.
void standardize(Matrix& points);

struct CsvOptions {
  std::size_t n_max = 0;  // 0 keeps every row
  // Column holding the response, by zero-based index or header name. Labels
  // are taken as they are and never standardized.
  std::optional<std::string> label_column;
  StandardizeMode standardize = StandardizeMode::FullFile;
};

// Comma separated numbers with optional double-quoted fields. A first line
// containing any non-numeric cell is a header. Throws ParseError (with row and
// column) on malformed cells or ragged rows and EmptyDataset on no data.
Dataset load_csv(const std::string& path, const CsvOptions& opts = {});

// exp(-||z_i - z_j||^2 / (2 d)) + mu [i == j]. The diagonal is exactly 1 + mu.
class KernelOracle final : public EntryOracle {
 public:
  // Keeps a reference to `points`. With the norm cache, squared distances use
  // ||z_i||^2 + ||z_j||^2 - 2 <z_i, z_j>.
  KernelOracle(const Matrix& points, double mu, bool norm_cache = false);

  double mu() const { return mu_; }

 protected:
  double evaluate(std::size_t i, std::size_t j) const override;

 private:
  const Matrix& z_;
  double mu_;
  double inv_two_d_;
  Vector norms_;
};

// b_k(i) = exp(-||z_i - w_k||^2 / (2 d)) with w_k standard Gaussian in d dims.
std::vector<Vector> kernel_response_vectors(const Matrix& points, std::size_t k,
                                            std::uint64_t seed);

// Gaussian blobs: point i belongs to cluster i % k, labels hold the cluster id.
// Centers are drawn with a separation of 6 per coordinate scale; `spread` is
// the within-cluster standard deviation. Standardized afterwards.
Dataset synthetic_clusters(std::size_t n, std::size_t d, std::size_t k, double spread,
                           std::uint64_t seed);

}  // namespace pcv
