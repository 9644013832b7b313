#include "sspg/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sspg/rng.hpp"

namespace sspg {

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": " + what),
      line_(line),
      column_(column) {}

std::vector<ColumnStats> compute_column_stats(const Mat& features) {
  std::vector<ColumnStats> out(static_cast<std::size_t>(features.cols()));
  const double n = static_cast<double>(features.rows());
  if (features.rows() == 0) return out;
  for (Index j = 0; j < features.cols(); ++j) {
    ColumnStats& s = out[static_cast<std::size_t>(j)];
    const auto col = features.col(j);
    s.mean = col.sum() / n;
    s.std = std::sqrt((col.array() - s.mean).square().sum() / n);
    s.min = col.minCoeff();
    s.max = col.maxCoeff();
    s.constant = s.min == s.max || s.std == 0.0;
  }
  return out;
}

Dataset make_dataset(Mat features, Vec targets) {
  if (features.rows() != targets.size()) throw std::invalid_argument("dataset: row count mismatch");
  Dataset d;
  d.features = std::move(features);
  d.targets = std::move(targets);
  d.column_stats = compute_column_stats(d.features);
  return d;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view token) {
  std::string_view body = token;
  if (!body.empty() && body.front() == '+') {
    body.remove_prefix(1);
    if (!body.empty() && (body.front() == '+' || body.front() == '-')) body = {};
  }
  if (body.empty()) throw std::invalid_argument("malformed number '" + std::string(token) + "'");
  double v = 0.0;
  const auto res = std::from_chars(body.data(), body.data() + body.size(), v);
  if (res.ec != std::errc() || res.ptr != body.data() + body.size()) {
    throw std::invalid_argument("malformed number '" + std::string(token) + "'");
  }
  if (!std::isfinite(v)) throw std::invalid_argument("non-finite number '" + std::string(token) + "'");
  return v;
}

namespace {

struct SparseRow {
  double target = 0.0;
  std::vector<std::pair<Index, double>> entries;
};

bool is_ws(char c) { return c == ' ' || c == '\t'; }

SparseRow parse_line(std::string_view line, std::size_t line_no, Index max_width) {
  SparseRow row;
  std::size_t pos = 0;
  bool first = true;
  Index last_index = 0;
  while (true) {
    while (pos < line.size() && is_ws(line[pos])) ++pos;
    if (pos >= line.size()) break;
    const std::size_t start = pos;
    while (pos < line.size() && !is_ws(line[pos])) ++pos;
    const std::string_view token = line.substr(start, pos - start);
    const std::size_t col = start + 1;
    if (first) {
      try {
        row.target = parse_double(token);
      } catch (const std::invalid_argument& e) {
        throw ParseError(line_no, col, std::string("target: ") + e.what());
      }
      first = false;
      continue;
    }
    const std::size_t colon = token.find(':');
    if (colon == std::string_view::npos) throw ParseError(line_no, col, "expected index:value");
    const std::string_view idx_text = token.substr(0, colon);
    if (idx_text.empty() || !std::all_of(idx_text.begin(), idx_text.end(),
                                         [](char c) { return c >= '0' && c <= '9'; })) {
      throw ParseError(line_no, col, "index must be a positive decimal integer");
    }
    unsigned long long idx = 0;
    const auto res = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), idx);
    if (res.ec != std::errc() || idx == 0) throw ParseError(line_no, col, "index must be >= 1");
    if (idx > static_cast<unsigned long long>(max_width)) {
      throw ParseError(line_no, col, "index exceeds the width cap of " + std::to_string(max_width));
    }
    const Index index = static_cast<Index>(idx);
    if (index <= last_index) throw ParseError(line_no, col, "indices must be strictly increasing");
    double value = 0.0;
    try {
      value = parse_double(token.substr(colon + 1));
    } catch (const std::invalid_argument& e) {
      throw ParseError(line_no, col + colon + 1, std::string("value: ") + e.what());
    }
    row.entries.emplace_back(index, value);
    last_index = index;
  }
  return row;
}

}  // namespace

Dataset parse_sparse_regression_text(std::string_view text, const ParseOptions& options) {
  std::vector<SparseRow> rows;
  Index width = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    for (std::size_t c = 0; c < line.size(); ++c) {
      const unsigned char ch = static_cast<unsigned char>(line[c]);
      if (ch < 0x20 && ch != '\t') throw ParseError(line_no, c + 1, "control character");
    }
    if (std::all_of(line.begin(), line.end(), is_ws)) continue;
    SparseRow row = parse_line(line, line_no, options.max_width);
    if (!row.entries.empty()) width = std::max(width, row.entries.back().first);
    rows.push_back(std::move(row));
  }
  Mat features = Mat::Zero(static_cast<Index>(rows.size()), width);
  Vec targets(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Index r = static_cast<Index>(i);
    targets[r] = rows[i].target;
    for (const auto& [idx, val] : rows[i].entries) features(r, idx - 1) = val;
  }
  return make_dataset(std::move(features), std::move(targets));
}

Dataset read_sparse_regression_file(const std::string& path, const ParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_sparse_regression_text(ss.str(), options);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.column(), path + ": " + e.what());
  }
}

std::string serialize_sparse_regression(const Dataset& data) {
  std::string out;
  for (Index i = 0; i < data.rows(); ++i) {
    out += format_double(data.targets[i]);
    for (Index j = 0; j < data.width(); ++j) {
      const double v = data.features(i, j);
      if (v == 0.0) continue;
      out += ' ';
      out += std::to_string(j + 1);
      out += ':';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

namespace {

Dataset take_rows(const Dataset& data, const std::vector<std::size_t>& idx) {
  Mat f(static_cast<Index>(idx.size()), data.width());
  Vec t(static_cast<Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    f.row(static_cast<Index>(r)) = data.features.row(static_cast<Index>(idx[r]));
    t[static_cast<Index>(r)] = data.targets[static_cast<Index>(idx[r])];
  }
  return make_dataset(std::move(f), std::move(t));
}

Mat apply_scaling(const Mat& m, const std::vector<ColumnStats>& stats) {
  Mat out = m;
  for (Index j = 0; j < m.cols(); ++j) {
    const ColumnStats& s = stats[static_cast<std::size_t>(j)];
    if (s.constant) continue;
    out.col(j) = (m.col(j).array() - s.mean) / s.std;
  }
  return out;
}

}  // namespace

SplitResult train_test_split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  const std::size_t n = static_cast<std::size_t>(data.rows());
  if (n < 2) throw std::invalid_argument("train_test_split: need at least two rows");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("train_test_split: fraction must lie in (0, 1)");
  }
  const double raw = test_fraction * static_cast<double>(n);
  std::size_t n_test = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  RngStream rng = RngSpec{seed}.stream("split");
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(perm[i], perm[static_cast<std::size_t>(rng.below(i + 1))]);
  }
  SplitResult out;
  out.test_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.train_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  out.train = take_rows(data, out.train_indices);
  out.test = take_rows(data, out.test_indices);
  return out;
}

ScaledPair standard_scale_fit_transform(const Dataset& train, const Dataset& test, ScaleFit fit) {
  if (train.rows() == 0) throw std::invalid_argument("standard_scale: empty training set");
  if (test.width() != train.width()) throw std::invalid_argument("standard_scale: width mismatch");
  ScaledPair out;
  out.stats = compute_column_stats(train.features);
  const std::vector<ColumnStats> test_stats =
      fit == ScaleFit::Train || test.rows() == 0 ? out.stats : compute_column_stats(test.features);
  out.train = make_dataset(apply_scaling(train.features, out.stats), train.targets);
  out.test = make_dataset(apply_scaling(test.features, test_stats), test.targets);
  return out;
}

std::vector<double> gen_exponential_demand(std::size_t n, double rate, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_exponential_demand: n must be >= 1");
  if (!(rate > 0.0)) throw std::invalid_argument("gen_exponential_demand: rate must be positive");
  RngStream rng = RngSpec{seed}.stream("demand");
  std::vector<double> out(n);
  for (double& x : out) x = rng.exponential(rate);
  return out;
}

Dataset gen_linear_regression(std::size_t n, Index features, double noise_std, std::uint64_t seed) {
  if (n < 1 || features < 1) throw std::invalid_argument("gen_linear_regression: empty shape");
  if (!(noise_std >= 0.0)) throw std::invalid_argument("gen_linear_regression: noise_std must be >= 0");
  RngStream rng = RngSpec{seed}.stream("synthetic");
  Vec w(features);
  for (Index j = 0; j < features; ++j) w[j] = rng.normal();
  const double c = rng.normal();
  Mat a(static_cast<Index>(n), features);
  Vec b(static_cast<Index>(n));
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < features; ++j) a(i, j) = rng.normal();
    b[i] = a.row(i).dot(w) + c + noise_std * rng.normal();
  }
  return make_dataset(std::move(a), std::move(b));
}

}  // namespace sspg
