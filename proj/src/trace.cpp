#include "pdsplit/trace.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "pdsplit/numtext.hpp"

namespace pdsplit {

double Trace::best_objective() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : records) best = std::min(best, r.objective);
  return best;
}

TraceFormat trace_format_from_string(const std::string& s) {
  if (s == "csv") return TraceFormat::csv;
  if (s == "json") return TraceFormat::json;
  throw std::invalid_argument("unknown trace format: " + s);
}



void emit_trace(const Trace& trace, TraceFormat format, std::ostream& out) {
  if (format == TraceFormat::csv) {
    out << "k,grads,objective,consensus_residual,seconds\n";
    for (const auto& r : trace.records) {
      out << r.k << ',' << r.grads << ',' << numtext::format_g17(r.objective) << ','
          << numtext::format_g17(r.consensus_residual) << ',' << numtext::format_g17(r.seconds) << '\n';
    }
    return;
  }
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& r : trace.records) {
    nlohmann::ordered_json rec;
    rec["k"] = r.k;
    rec["grads"] = r.grads;
    rec["objective"] = r.objective;
    rec["consensus_residual"] = r.consensus_residual;
    rec["seconds"] = r.seconds;
    doc.push_back(std::move(rec));
  }
  out << doc.dump(2) << '\n';
}

void emit_trace(const Trace& trace, TraceFormat format,
                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_trace: cannot open " + path);
  emit_trace(trace, format, out);
  if (!out) throw std::runtime_error("emit_trace: write failed on " + path);
}

Trace parse_trace_csv(std::istream& in) {
  Trace trace;
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("parse_trace_csv: empty input");
  if (line != "k,grads,objective,consensus_residual,seconds")
    throw std::runtime_error("parse_trace_csv: bad header: " + line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    TraceRecord r;
    char c;
    if (!(ls >> r.k >> c >> r.grads >> c >> r.objective >> c >>
          r.consensus_residual >> c >> r.seconds))
      throw std::runtime_error("parse_trace_csv: bad record: " + line);
    trace.records.push_back(r);
  }
  return trace;
}

}  // namespace pdsplit
