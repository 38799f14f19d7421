#include "pcv/serialize.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

#include "pcv/error.hpp"

namespace pcv {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

// Reads whitespace separated tokens line by line, tracking the position for
// error messages.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  void next_line() {
    std::string line;
    do {
      if (!std::getline(in_, line)) throw ParseError(row_ + 1, 1, "unexpected end of file");
      ++row_;
    } while (line.find_first_not_of(" \t\r") == std::string::npos);
    line_ = line;
    tokens_.clear();
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) tokens_.push_back(tok);
    col_ = 0;
  }

  const std::string& line() const { return line_; }
  bool done() const { return col_ >= tokens_.size(); }

  std::string word() {
    if (done()) error("missing field");
    return tokens_[col_++];
  }

  void expect(const std::string& w) {
    const std::string got = word();
    if (got != w) error("expected '" + w + "', found '" + got + "'");
  }

  std::size_t index() {
    const std::string s = word();
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) error("not an index: '" + s + "'");
    return v;
  }

  double number() {
    const std::string s = word();
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) error("not a number: '" + s + "'");
    return v;
  }

  void end_of_line() {
    if (!done()) error("unexpected trailing field '" + tokens_[col_] + "'");
  }

  [[noreturn]] void error(const std::string& msg) const {
    throw ParseError(row_, col_ == 0 ? 1 : col_, msg);
  }

 private:
  std::istream& in_;
  std::string line_;
  std::vector<std::string> tokens_;
  std::size_t row_ = 0;
  std::size_t col_ = 0;
};

template <typename T>
T open_and(const std::string& path, T (*reader)(std::istream&)) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  return reader(in);
}

void check_written(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) fail(ErrorCode::IoError, "failed writing " + path);
}

}  // namespace

void write_factor(std::ostream& out, const VecchiaFactor& f) {
  const std::size_t n = f.size();
  out << "PCVF 1\nn " << n << "\norder";
  for (std::size_t k = 0; k < n; ++k) out << ' ' << f.order[k];
  out << "\ndiag";
  for (double d : f.diag) out << ' ' << format_double(d);
  out << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    const auto& cols = f.pattern[i];
    if (cols.empty()) continue;
    out << "row " << i << ' ' << cols.size();
    for (std::size_t k = 0; k < cols.size(); ++k)
      out << ' ' << cols[k] << ' ' << format_double(f.rows[i][k]);
    out << '\n';
  }
  out << "end\n";
}

VecchiaFactor read_factor(std::istream& in) {
  LineReader r(in);
  r.next_line();
  r.expect("PCVF");
  if (r.index() != 1) r.error("unsupported factor format version");
  r.next_line();
  r.expect("n");
  const std::size_t n = r.index();
  r.end_of_line();

  r.next_line();
  r.expect("order");
  std::vector<std::size_t> perm(n);
  for (auto& p : perm) p = r.index();
  r.end_of_line();
  PivotOrder order;
  try {
    order = PivotOrder(std::move(perm));
  } catch (const Error& e) {
    r.error(e.what());
  }

  r.next_line();
  r.expect("diag");
  Vector diag(n);
  for (double& d : diag) d = r.number();
  r.end_of_line();

  std::vector<std::vector<std::size_t>> sets(n);
  std::vector<Vector> rows(n);
  while (true) {
    r.next_line();
    const std::string tag = r.word();
    if (tag == "end") break;
    if (tag != "row") r.error("expected 'row' or 'end', found '" + tag + "'");
    const std::size_t i = r.index();
    if (i >= n || !sets[i].empty()) r.error("bad or repeated row index");
    const std::size_t k = r.index();
    sets[i].resize(k);
    rows[i].resize(k);
    for (std::size_t t = 0; t < k; ++t) {
      sets[i][t] = r.index();
      rows[i][t] = r.number();
    }
    r.end_of_line();
  }
  SparsityPattern pattern;
  try {
    pattern = SparsityPattern(std::move(sets));
  } catch (const Error& e) {
    r.error(e.what());
  }
  return VecchiaFactor{std::move(order), std::move(pattern), std::move(rows),
                       std::move(diag)};
}

void save_factor(const std::string& path, const VecchiaFactor& f) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  write_factor(out, f);
  check_written(out, path);
}

VecchiaFactor load_factor(const std::string& path) { return open_and(path, &read_factor); }

void write_dataset(std::ostream& out, const Dataset& ds) {
  const std::size_t n = ds.size(), d = ds.dim();
  out << "PCVD 1\nn " << n << " d " << d << " labels " << (ds.labels ? 1 : 0)
      << "\nprovenance " << ds.provenance << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c)
      out << (c ? " " : "") << format_double(ds.points(i, c));
    if (ds.labels) out << ' ' << format_double((*ds.labels)[i]);
    out << '\n';
  }
  out << "end\n";
}

Dataset read_dataset(std::istream& in) {
  LineReader r(in);
  r.next_line();
  r.expect("PCVD");
  if (r.index() != 1) r.error("unsupported dataset format version");
  r.next_line();
  r.expect("n");
  const std::size_t n = r.index();
  r.expect("d");
  const std::size_t d = r.index();
  r.expect("labels");
  const std::size_t has_labels = r.index();
  if (has_labels > 1) r.error("labels flag must be 0 or 1");
  r.end_of_line();
  r.next_line();
  r.expect("provenance");
  Dataset ds;
  const std::string& line = r.line();
  const auto pos = line.find("provenance");
  ds.provenance = line.substr(std::min(line.size(), pos + 11));
  while (!ds.provenance.empty() && ds.provenance.back() == '\r') ds.provenance.pop_back();
  ds.points = Matrix(n, d);
  if (has_labels) ds.labels = Vector(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.next_line();
    for (std::size_t c = 0; c < d; ++c) ds.points(i, c) = r.number();
    if (has_labels) (*ds.labels)[i] = r.number();
    r.end_of_line();
  }
  r.next_line();
  r.expect("end");
  return ds;
}

void save_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  write_dataset(out, ds);
  check_written(out, path);
}

Dataset load_dataset(const std::string& path) { return open_and(path, &read_dataset); }

}  // namespace pcv
