#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wattprint/hardware.hpp"

namespace wattprint {

/// Bytes per GB used for trace memory channels.
inline constexpr double kBytesPerGb = 1024.0 * 1024.0 * 1024.0;

/// Typical powercap counter range, used when a trace does not declare one.
inline constexpr double kDefaultRaplRangeUj = 262143328850.0;

/// One multi-channel telemetry sample. Channels a platform cannot provide are
/// absent, never zero-filled. Cumulative counters (RAPL energy, CPU times)
/// carry the raw reading; wraparound is corrected at integration time.
struct PowerSample {
    double timestamp = 0.0;                       // s, monotonic
    std::vector<double> rapl_package_energy_uj;   // per package, cumulative
    std::vector<double> rapl_dram_energy_uj;      // per package, cumulative
    std::vector<double> gpu_power_mw;             // per device, instantaneous
    std::vector<double> gpu_utilization;          // per device, fraction
    std::optional<double> process_cpu_time_s;     // cumulative
    std::optional<double> machine_cpu_time_s;     // cumulative
    std::optional<double> process_rss_bytes;
    std::optional<double> machine_memory_used_bytes;
    std::optional<double> wattmeter_power_w;      // instantaneous
};

/// The canonical trace every estimator consumes.
struct TelemetryTrace {
    int schema_version = 1;
    HardwareSpec hardware;
    double nominal_interval_s = 0.0;
    double rapl_max_energy_range_uj = kDefaultRaplRangeUj;
    std::vector<PowerSample> samples;
    std::vector<double> epoch_marks; // optional, sorted, within trace span

    double duration_s() const;
};

/// Validates trace invariants (ordering, counter monotonicity modulo a single
/// wrap, fraction ranges, process <= machine, channel arity consistency).
/// Throws Errc::validation naming the first offending sample index.
void validate(const TelemetryTrace& trace);

/// Energy accumulated between two readings of a wrapping cumulative counter;
/// a single wrap is assumed when curr < prev.
double counter_delta(double prev, double curr, double max_range);

/// Sample-and-hold (left-rectangle) integration of (timestamp, watts) pairs
/// into Wh. Requires >= 2 samples with strictly increasing timestamps;
/// violations raise Errc::ordering.
double integrate_power(std::span<const double> timestamps,
                       std::span<const double> watts);

/// A sample-and-hold channel: value[i] holds on [time[i], time[i+1]).
/// The last value carries no weight.
struct StepSeries {
    std::vector<double> time;
    std::vector<double> value;

    bool empty() const { return time.size() < 2; }
    double start() const { return time.front(); }
    double end() const { return time.back(); }

    /// Integral of value dt over the full span (unit: value-unit x seconds).
    double integrate() const;
    /// Integral over [a, b]; [a, b] must lie within the span.
    double integrate(double a, double b) const;
    /// Time-weighted mean over the full span.
    double mean() const;
};

// Channel extraction. Absent channels yield nullopt. Power channels are
// converted to watts; RAPL counters become interval-average power after
// wraparound correction; memory channels are in GB.
std::optional<StepSeries> wattmeter_series(const TelemetryTrace& t);
std::optional<StepSeries> gpu_power_series(const TelemetryTrace& t);        // summed over devices
std::optional<StepSeries> gpu_utilization_series(const TelemetryTrace& t);  // mean over devices
std::optional<StepSeries> rapl_package_power_series(const TelemetryTrace& t); // summed over packages
std::optional<StepSeries> rapl_dram_power_series(const TelemetryTrace& t);
std::optional<StepSeries> memory_series(const TelemetryTrace& t, Mode mode); // GB
std::optional<StepSeries> rss_fraction_series(const TelemetryTrace& t); // process_rss / machine_used

/// Total wrap-corrected counter delta over the trace, summed across packages,
/// in Wh. nullopt when the channel is absent.
std::optional<double> rapl_package_energy_wh(const TelemetryTrace& t);
std::optional<double> rapl_dram_energy_wh(const TelemetryTrace& t);

std::optional<double> process_cpu_delta_s(const TelemetryTrace& t);
std::optional<double> machine_cpu_delta_s(const TelemetryTrace& t);

// ---------------------------------------------------------------------------
// Synthetic traces (deterministic oracle substrate)

/// Channel levels held constant across one segment. Memory is given in GB,
/// gpu power in W per device, cpu loads as fractions of all logical cores.
struct SynthLevels {
    std::vector<double> package_power_w;
    std::vector<double> dram_power_w;
    std::vector<double> gpu_power_w;
    std::vector<double> gpu_utilization;
    std::optional<double> process_cpu_load;
    std::optional<double> machine_cpu_load;
    std::optional<double> process_rss_gb;
    std::optional<double> machine_memory_gb;
    std::optional<double> wattmeter_w;
};

struct SynthSegment {
    double duration_s = 0.0;
    SynthLevels levels;
};

struct SynthSpec {
    HardwareSpec hardware;
    double interval_s = 10.0;
    std::vector<SynthSegment> segments;
    std::optional<double> rapl_max_energy_range_uj; // forces counter wraps
    std::vector<double> epoch_marks;
};

/// Builds a trace whose integrated channels equal the generator's closed-form
/// integrals exactly: samples land on every interval tick and every segment
/// boundary, so sample-and-hold integration is exact per piece. Negative
/// powers raise Errc::validation; zero total duration raises
/// Errc::empty_trace.
TelemetryTrace synth_trace(const SynthSpec& spec);

} // namespace wattprint
