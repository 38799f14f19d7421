#include "pcv/kernels_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pcv/error.hpp"
#include "pcv/random.hpp"

namespace pcv {

void standardize(Matrix& points) {
  const std::size_t n = points.rows(), d = points.cols();
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += points(i, c);
    mean /= static_cast<double>(std::max<std::size_t>(n, 1));
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (points(i, c) - mean) * (points(i, c) - mean);
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    for (std::size_t i = 0; i < n; ++i)
      points(i, c) = sd > 0.0 ? (points(i, c) - mean) / sd : 0.0;
  }
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line, std::size_t row) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false, was_quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (quoted) {
      if (ch == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          cur += '"';
          ++k;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
      was_quoted = true;
    } else if (ch == ',') {
      out.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur += ch;
    }
  }
  if (quoted) throw ParseError(row, out.size() + 1, "unterminated quoted field");
  out.push_back(was_quoted ? cur : trim(cur));
  return out;
}

bool parse_number(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(v);
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvOptions& opts) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);

  std::vector<std::string> header;
  std::vector<Vector> rows;
  std::size_t width = 0;
  std::string line;
  std::size_t row = 0;
  const bool need_all = opts.standardize == StandardizeMode::FullFile;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line, row);
    if (rows.empty() && header.empty()) {
      double tmp;
      const bool is_header = std::any_of(fields.begin(), fields.end(), [&](const auto& f) {
        return !parse_number(f, tmp);
      });
      if (is_header) {
        header = std::move(fields);
        width = header.size();
        continue;
      }
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      throw ParseError(row, std::min(fields.size(), width) + 1,
                       "expected " + std::to_string(width) + " fields, found " +
                           std::to_string(fields.size()));
    Vector values(width);
    for (std::size_t c = 0; c < width; ++c)
      if (!parse_number(fields[c], values[c]))
        throw ParseError(row, c + 1, "not a number: '" + fields[c] + "'");
    rows.push_back(std::move(values));
    if (!need_all && opts.n_max != 0 && rows.size() == opts.n_max) break;
  }
  if (rows.empty()) fail(ErrorCode::EmptyDataset, path + " contains no data rows");

  std::optional<std::size_t> label;
  if (opts.label_column) {
    const std::string& key = *opts.label_column;
    auto it = std::find(header.begin(), header.end(), key);
    if (it != header.end()) {
      label = static_cast<std::size_t>(it - header.begin());
    } else {
      std::size_t idx = 0;
      const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), idx);
      if (ec != std::errc() || ptr != key.data() + key.size() || idx >= width)
        fail(ErrorCode::InvalidArgument, "label column '" + key + "' not found");
      label = idx;
    }
  }
  const std::size_t d = width - (label ? 1 : 0);
  if (d == 0) fail(ErrorCode::EmptyDataset, path + " has no predictor columns");

  auto to_matrix = [&](std::size_t count) {
    Matrix m(count, d);
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t c = 0, o = 0; c < width; ++c)
        if (!label || c != *label) m(i, o++) = rows[i][c];
    return m;
  };
  const std::size_t total = rows.size();
  const std::size_t n = opts.n_max == 0 ? total : std::min(opts.n_max, total);

  Dataset ds;
  if (opts.standardize == StandardizeMode::FullFile) {
    Matrix all = to_matrix(total);
    standardize(all);
    ds.points = Matrix(n, d);
    for (std::size_t i = 0; i < n; ++i)
      std::copy(all.row(i).begin(), all.row(i).end(), ds.points.row(i).begin());
  } else {
    ds.points = to_matrix(n);
    if (opts.standardize == StandardizeMode::Subsample) standardize(ds.points);
  }
  if (label) {
    ds.labels = Vector(n);
    for (std::size_t i = 0; i < n; ++i) (*ds.labels)[i] = rows[i][*label];
  }
  std::ostringstream prov;
  prov << "csv:" << path << " first " << n << " of " << total << " rows, standardize="
       << (opts.standardize == StandardizeMode::FullFile    ? "full-file"
           : opts.standardize == StandardizeMode::Subsample ? "subsample"
                                                            : "none");
  ds.provenance = prov.str();
  return ds;
}

KernelOracle::KernelOracle(const Matrix& points, double mu, bool norm_cache)
    : EntryOracle(points.rows()), z_(points), mu_(mu) {
  require(points.rows() >= 1 && points.cols() >= 1, "KernelOracle: empty dataset");
  require(mu >= 0.0, "KernelOracle: mu must be nonnegative");
  inv_two_d_ = 1.0 / (2.0 * static_cast<double>(points.cols()));
  if (norm_cache) {
    norms_.resize(points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i) norms_[i] = dot(z_.row(i), z_.row(i));
  }
}

double KernelOracle::evaluate(std::size_t i, std::size_t j) const {
  if (i == j) return 1.0 + mu_;
  double d2;
  if (!norms_.empty()) {
    d2 = std::max(norms_[i] + norms_[j] - 2.0 * dot(z_.row(i), z_.row(j)), 0.0);
  } else {
    d2 = 0.0;
    auto a = z_.row(i), b = z_.row(j);
    for (std::size_t k = 0; k < a.size(); ++k) d2 += (a[k] - b[k]) * (a[k] - b[k]);
  }
  return std::exp(-d2 * inv_two_d_);
}

std::vector<Vector> kernel_response_vectors(const Matrix& points, std::size_t k,
                                            std::uint64_t seed) {
  require(k >= 1, "kernel_response_vectors: k must be positive");
  const std::size_t n = points.rows(), d = points.cols();
  require(n >= 1 && d >= 1, "kernel_response_vectors: empty dataset");
  Rng rng(seed);
  std::vector<Vector> out(k, Vector(n));
  Vector w(d);
  for (std::size_t t = 0; t < k; ++t) {
    for (double& x : w) x = rng.normal();
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < d; ++c) d2 += (points(i, c) - w[c]) * (points(i, c) - w[c]);
      out[t][i] = std::exp(-d2 / (2.0 * static_cast<double>(d)));
    }
  }
  return out;
}

Dataset synthetic_clusters(std::size_t n, std::size_t d, std::size_t k, double spread,
                           std::uint64_t seed) {
  require(n >= 1 && d >= 1 && k >= 1, "synthetic_clusters: n, d and k must be positive");
  require(spread >= 0.0, "synthetic_clusters: spread must be nonnegative");
  Rng rng(seed);
  Matrix centers(k, d);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < d; ++j) centers(c, j) = 6.0 * rng.normal();
  Dataset ds;
  ds.points = Matrix(n, d);
  ds.labels = Vector(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % k;
    for (std::size_t j = 0; j < d; ++j) ds.points(i, j) = centers(c, j) + spread * rng.normal();
    (*ds.labels)[i] = static_cast<double>(c);
  }
  standardize(ds.points);
  std::ostringstream prov;
  prov << "synthetic:clusters n=" << n << " d=" << d << " k=" << k << " spread=" << spread
       << " seed=" << seed;
  ds.provenance = prov.str();
  return ds;
}

}  // namespace pcv
