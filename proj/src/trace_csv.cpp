#include "sspg/trace_csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sspg/data_io.hpp"

namespace sspg {

namespace {

void put(std::string& out, const std::optional<double>& v) {
  out += ',';
  if (v) out += format_double(*v);
}

std::optional<double> optional_cell(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  return parse_double(cell);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

std::string trace_to_csv(const std::vector<ConvergenceRecord>& records) {
  std::string out(kTraceHeader);
  out += '\n';
  for (const ConvergenceRecord& r : records) {
    out += std::to_string(r.iter);
    out += ',';
    out += format_double(r.mu);
    out += ',';
    out += format_double(r.alpha);
    out += ',';
    out += format_double(r.obj_smoothed);
    put(out, r.obj_primal_est);
    put(out, r.lambda);
    put(out, r.stationarity_sq);
    put(out, r.wallclock_ms);
    out += '\n';
  }
  return out;
}

std::vector<ConvergenceRecord> trace_from_csv(std::string_view text) {
  std::vector<ConvergenceRecord> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    ++line_no;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      if (line != kTraceHeader) throw std::runtime_error("trace csv: unexpected header");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != 8) {
      throw std::runtime_error("trace csv line " + std::to_string(line_no) + ": expected 8 columns");
    }
    try {
      ConvergenceRecord r;
      unsigned long long iter = 0;
      const auto res = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), iter);
      if (res.ec != std::errc() || res.ptr != cells[0].data() + cells[0].size()) {
        throw std::invalid_argument("bad iter");
      }
      r.iter = iter;
      r.mu = parse_double(cells[1]);
      r.alpha = parse_double(cells[2]);
      r.obj_smoothed = parse_double(cells[3]);
      r.obj_primal_est = optional_cell(cells[4]);
      r.lambda = optional_cell(cells[5]);
      r.stationarity_sq = optional_cell(cells[6]);
      r.wallclock_ms = optional_cell(cells[7]);
      out.push_back(r);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("trace csv line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header_seen) throw std::runtime_error("trace csv: missing header");
  return out;
}

void write_trace_csv(const std::vector<ConvergenceRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write trace '" + path + "'");
  out << trace_to_csv(records);
  if (!out) throw std::runtime_error("failed writing trace '" + path + "'");
}

std::vector<ConvergenceRecord> read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return trace_from_csv(ss.str());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace sspg
