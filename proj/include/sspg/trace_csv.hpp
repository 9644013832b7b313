#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sspg/solver.hpp"

namespace sspg {

/// iter,mu,alpha,obj_smoothed,obj_primal_est,lambda,stationarity_sq,wallclock_ms
inline constexpr std::string_view kTraceHeader =
    "iter,mu,alpha,obj_smoothed,obj_primal_est,lambda,stationarity_sq,wallclock_ms";

/// Header plus one row per record; absent optional values are empty cells and
/// numbers use the shortest round-trip decimal form.
std::string trace_to_csv(const std::vector<ConvergenceRecord>& records);

std::vector<ConvergenceRecord> trace_from_csv(std::string_view text);

/// Errors carry the path.
void write_trace_csv(const std::vector<ConvergenceRecord>& records, const std::string& path);
std::vector<ConvergenceRecord> read_trace_csv(const std::string& path);

}  // namespace sspg
