#pragma once

#include <iosfwd>
#include <string>

#include "wattprint/telemetry.hpp"

namespace wattprint {

/// Line-delimited trace format: one JSON header record, then one JSON sample
/// per line. Units are fixed (uJ, mW, W, bytes, s); absent channels are
/// omitted. Traces are validated on save and on load.
void save_trace(const TelemetryTrace& trace, const std::string& path);
void save_trace(const TelemetryTrace& trace, std::ostream& out);

TelemetryTrace load_trace(const std::string& path);
TelemetryTrace load_trace(std::istream& in);

/// Structural equality (exact field-for-field, used by round-trip checks).
bool trace_equal(const TelemetryTrace& a, const TelemetryTrace& b);

} // namespace wattprint
