#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pdsplit {

/// One benchmark sample. `objective` is the quantity the run reports
/// (functional cost for solvers and benchmarks, fixed-point residual for
/// raw fixed-point runs); `consensus_residual` is the constraint / primal
/// residual where one exists, 0 otherwise.
struct TraceRecord {
  long k = 0;
  long grads = 0;
  double objective = 0.0;
  double consensus_residual = 0.0;
  double seconds = 0.0;
};

struct Trace {
  std::vector<TraceRecord> records;

  void add(long k, long grads, double objective, double consensus_residual,
           double seconds = 0.0) {
    records.push_back({k, grads, objective, consensus_residual, seconds});
  }

  bool empty() const { return records.empty(); }
  const TraceRecord& back() const { return records.back(); }

  /// Smallest objective recorded so far (running-min reporting).
  double best_objective() const;
};

enum class TraceFormat { csv, json };

TraceFormat trace_format_from_string(const std::string& s);

/// CSV header is exactly `k,grads,objective,consensus_residual,seconds`;
/// numbers are written with 17 significant digits. JSON mirrors the same
/// fields in the same order.
void emit_trace(const Trace& trace, TraceFormat format, std::ostream& out);
void emit_trace(const Trace& trace, TraceFormat format,
                const std::string& path);

Trace parse_trace_csv(std::istream& in);

}  // namespace pdsplit
