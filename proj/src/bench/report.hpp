#pragma once

#include <string>

#include "bench/workload.hpp"

namespace sali::bench {

// Stable field ordering in both formats; the CSV schema is documented in the
// README. format is "csv" or "json".
void emit_report(const RunReport& report, const std::string& format, const std::string& path);

std::string report_to_json(const RunReport& report);
RunReport report_from_json(const std::string& json_text);
std::string report_to_csv(const RunReport& report);

bool operator==(const LatencyStats& a, const LatencyStats& b);
bool operator==(const RepeatResult& a, const RepeatResult& b);
bool operator==(const RunReport& a, const RunReport& b);

}  // namespace sali::bench
