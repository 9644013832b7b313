#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sspg/smooth_core.hpp"

namespace sspg {

struct ColumnStats {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  double min = 0.0;
  double max = 0.0;
  bool constant = false;
};

struct Dataset {
  Mat features;  // rows are samples
  Vec targets;
  std::vector<ColumnStats> column_stats;

  Index rows() const { return features.rows(); }
  Index width() const { return features.cols(); }
};

std::vector<ColumnStats> compute_column_stats(const Mat& features);

/// Dataset from dense features and targets, with column statistics filled.
Dataset make_dataset(Mat features, Vec targets);

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what);
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct ParseOptions {
  Index max_width = 10000;
};

/// Grammar, one record per nonempty line:
///   target (WS index ':' value)*
/// with 1-based, strictly increasing decimal indices, finite decimal
/// numbers (optional sign) and WS = spaces or tabs. Lines may end in "\r\n".
/// Blank lines are skipped. Absent entries are 0.
Dataset parse_sparse_regression_text(std::string_view text, const ParseOptions& options = {});

Dataset read_sparse_regression_file(const std::string& path, const ParseOptions& options = {});

/// Canonical form: target then the nonzero entries in index order, shortest
/// round-trip decimals, single spaces, "\n" after every record.
std::string serialize_sparse_regression(const Dataset& data);

/// Shortest decimal that parses back to exactly v.
std::string format_double(double v);

/// Parses the whole token as a finite double; throws std::invalid_argument.
double parse_double(std::string_view token);

struct SplitResult {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

/// Seeded shuffle; the test part has ceil(test_fraction * n) rows (at least
/// one, at most n - 1).
SplitResult train_test_split(const Dataset& data, double test_fraction, std::uint64_t seed);

enum class ScaleFit {
  Train,  // statistics of the training part applied to both parts
  Each,   // each part standardized with its own statistics
};

struct ScaledPair {
  Dataset train;
  Dataset test;
  std::vector<ColumnStats> stats;  // statistics used for the training part
};

/// (x - mean) / std per column; constant columns pass through unchanged.
ScaledPair standard_scale_fit_transform(const Dataset& train, const Dataset& test,
                                        ScaleFit fit = ScaleFit::Train);

/// -log(1 - U) / rate from the seed's "demand" stream.
std::vector<double> gen_exponential_demand(std::size_t n, double rate, std::uint64_t seed);

/// b = w . a + c + noise_std * N(0, 1) with a ~ N(0, I) and a random
/// ground truth (w, c), all from the seed's "synthetic" stream.
Dataset gen_linear_regression(std::size_t n, Index features, double noise_std, std::uint64_t seed);

}  // namespace sspg
