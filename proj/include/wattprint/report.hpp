#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wattprint/analysis.hpp"
#include "wattprint/footprint.hpp"

namespace wattprint {

enum class ReportFormat { json_lines, csv, human };

std::optional<ReportFormat> parse_report_format(std::string_view name);

/// A strategy whose preconditions the trace did not meet; other rows are
/// still produced.
struct StrategyError {
    Strategy strategy = Strategy::GA;
    std::string error_code;
    std::string message;
};

struct ReportDocument {
    int schema_version = 1;
    std::vector<EmissionReport> reports;
    std::vector<StrategyError> errors;
    std::vector<ComparisonRow> comparisons;
    std::optional<IdleBaseline> idle;
    std::optional<OverheadReport> overhead;
    std::vector<std::string> warnings;
};

/// Deterministic machine-readable output: stable field order, numbers at six
/// significant digits. Identical inputs produce identical bytes.
void write_report(const ReportDocument& doc, std::ostream& out,
                  ReportFormat format);
std::string format_report(const ReportDocument& doc, ReportFormat format);

/// Parses a json-lines report back into a document (the `report` subcommand's
/// input path for format conversion).
ReportDocument read_report_json_lines(std::istream& in);

/// Rounds to six significant digits, matching report formatting.
double round_sig6(double v);

} // namespace wattprint
