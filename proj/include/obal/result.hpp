#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "core.hpp"

namespace obal {

inline constexpr int kOutputSchemaVersion = 1;

struct TracePoint {
  std::uint64_t t;
  double linf;
  double phi;
};

/// Per-step record of one signed stream. Aggregates are updated on every
/// step before the stride decides whether the point is kept in `trace`.
struct RunResult {
  std::string algorithm;
  std::uint64_t seed = 0;
  std::uint64_t steps = 0;
  std::uint64_t stride = 1;
  std::vector<TracePoint> trace;
  double max_linf = 0.0;
  std::uint64_t argmax_t = 0;
  double max_phi = 0.0;
  std::vector<Entry> final_d;
  double wall_seconds = 0.0;  // not serialized: outputs must replay byte for byte

  void record(std::uint64_t t, double linf, double phi) {
    steps = t;
    if (linf > max_linf) {
      max_linf = linf;
      argmax_t = t;
    }
    if (phi > max_phi) max_phi = phi;
    if (stride <= 1 || t % stride == 0) trace.push_back({t, linf, phi});
    pending_ = {t, linf, phi};
  }

  /// Keeps the last step in the trace even when the stride skipped it.
  void finish() {
    if (steps > 0 && (trace.empty() || trace.back().t != steps)) trace.push_back(pending_);
  }

  nlohmann::ordered_json summary_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = kOutputSchemaVersion;
    j["algorithm"] = algorithm;
    j["max_linf"] = max_linf;
    j["argmax_t"] = argmax_t;
    j["steps"] = steps;
    j["seed"] = seed;
    j["max_phi"] = max_phi;
    return j;
  }

  void write_trace_csv(std::ostream& out) const {
    out << "t,linf,phi\n";
    const auto old = out.precision(17);
    for (const auto& p : trace) out << p.t << ',' << p.linf << ',' << p.phi << '\n';
    out.precision(old);
  }

 private:
  TracePoint pending_{0, 0.0, 0.0};
};

}  // namespace obal
