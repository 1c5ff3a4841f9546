#pragma once

#include <map>
#include <string>
#include <vector>

#include "wattprint/estimators.hpp"
#include "wattprint/telemetry.hpp"

namespace wattprint {

/// Energy per channel over one epoch of a segmented trace.
struct EpochProfile {
    int epoch_index = 0;
    double duration_s = 0.0;
    std::map<std::string, double> energy_wh; // channel name -> Wh
    double total_wh = 0.0;
};

/// Integrates every power channel per epoch segment; segments partition
/// [first mark, last mark]. Fewer than 2 marks raise Errc::marks_required.
std::vector<EpochProfile> split_by_epochs(const TelemetryTrace& trace);

struct Extrapolation {
    double energy_wh = 0.0;   // total across channels
    double duration_s = 0.0;
    std::map<std::string, double> channel_energy_wh;
    int epochs_observed = 0;
    int epochs_total = 0;
};

/// Mean per-epoch energy and duration scaled to `total_epochs`. Requires at
/// least one profile (Errc::insufficient_data) and total_epochs >= observed
/// (Errc::invalid_argument).
Extrapolation extrapolate(const std::vector<EpochProfile>& profiles,
                          int total_epochs);

struct IdleBaseline {
    double idle_power_w = 0.0;
    double dynamic_energy_wh = 0.0;
    double idle_fraction = 0.0; // share of active energy drawn at idle
    double active_energy_wh = 0.0;
    double active_duration_s = 0.0;
};

/// Scalar core of the idle analysis; idle power is assumed constant over the
/// active window.
IdleBaseline idle_baseline_from(double active_energy_wh,
                                double active_duration_s,
                                double idle_energy_wh,
                                double idle_duration_s);

/// Wattmeter-based idle subtraction; both traces need the wattmeter channel
/// (Errc::channel_missing otherwise).
IdleBaseline idle_baseline(const TelemetryTrace& active,
                           const TelemetryTrace& idle);

struct ComparisonRow {
    Strategy strategy = Strategy::GA;
    Mode mode = Mode::machine;
    double energy_wo_pue_wh = 0.0;
    double wattmeter_wh = 0.0;
    double percentage = 0.0; // fraction of the wattmeter value
};

/// Per-strategy pre-PUE energy over the wattmeter integral, sorted by
/// strategy then mode. A zero wattmeter integral raises
/// Errc::degenerate_ground_truth.
std::vector<ComparisonRow> compare_to_wattmeter(
    const std::vector<EnergyBreakdown>& breakdowns,
    const TelemetryTrace& trace);

struct OverheadReport {
    double extra_time_s = 0.0;     // floored at 0
    double raw_extra_time_s = 0.0; // may be negative
    double extra_energy_wh = 0.0;
    double total_energy_wh = 0.0;  // full with-tracker window
    double overload_fraction = 0.0;
};

/// Scalar core: energy_parallel_wh covers the window both runs were alive,
/// energy_extra_wh the tail where only the tracked run remained.
OverheadReport overhead_from_measurements(double duration_with_s,
                                          double duration_without_s,
                                          double energy_parallel_wh,
                                          double energy_extra_wh);

/// Tracker-overhead comparison of a with-tracker trace against a baseline;
/// both need the wattmeter channel. Negative time differences clamp to zero
/// (raw value still reported).
OverheadReport overhead_report(const TelemetryTrace& with_tracker,
                               const TelemetryTrace& without);

} // namespace wattprint
