#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wattprint/hardware.hpp"
#include "wattprint/telemetry.hpp"

namespace wattprint {

/// Share of each resource attributable to the measured process.
struct UsageFactors {
    std::optional<double> cpu_usage; // fraction of all logical cores
    std::optional<double> gpu_usage; // mean utilization fraction
    std::optional<double> memory_requested_gb;
};

struct ConstantUsed {
    std::string name;
    double value = 0.0;
    Provenance provenance = Provenance::strategy_default;
};

/// Per-component energy result of one estimator, pre-PUE. Components a
/// strategy cannot measure are absent (with a warning), never zero.
struct EnergyBreakdown {
    Strategy strategy = Strategy::GA;
    Mode mode = Mode::machine;
    std::optional<double> cpu_wh;
    std::optional<double> gpu_wh;
    std::optional<double> memory_wh;
    std::optional<double> communication_wh;
    double total_wh = 0.0; // sum of present components
    double duration_s = 0.0;
    std::vector<ConstantUsed> constants_used;
    std::vector<std::string> warnings;
};

enum class CumulatorComponent { cpu, gpu };

/// TDP x usage x time per component; memory at 0.3725 W per GB available
/// (memory_requested when set, else the whole machine). Missing usage
/// factors default to 1.
EnergyBreakdown estimate_green_algorithms(const TdpCatalog& catalog,
                                          const HardwareSpec& spec,
                                          double runtime_s,
                                          const UsageFactors& usage);

/// CPU from RAPL package counters when present, else TDP x 50%; GPU from the
/// power channel (zero with a warning when absent); memory at 0.375 W per GB
/// used (process RSS or machine used, by mode).
EnergyBreakdown estimate_codecarbon(const TdpCatalog& catalog,
                                    const TelemetryTrace& trace, Mode mode);

/// CPU from TDP x measured cpu-time usage factor; GPU from the power channel
/// (whole machine in both modes); memory at 0.375 W per GB used.
EnergyBreakdown estimate_eco2ai(const TdpCatalog& catalog,
                                const TelemetryTrace& trace, Mode mode);

/// RAPL package -> CPU, RAPL DRAM -> memory, GPU power channel -> GPU;
/// machine mode only. Works only if at least one component is measurable.
EnergyBreakdown estimate_carbontracker(const TelemetryTrace& trace);

/// RAPL energy attributed to the process: package x cpu-time share,
/// DRAM x RSS share, GPU integral x mean utilization. RAPL is required.
EnergyBreakdown estimate_eit(const TelemetryTrace& trace);

/// GPU at maximum load: count x TDP x time. CPU and memory are not measured.
EnergyBreakdown estimate_mlco2(const TdpCatalog& catalog,
                               const HardwareSpec& spec, double runtime_s);

/// One unit of the chosen component at full TDP, plus a linear per-byte
/// communication cost.
EnergyBreakdown estimate_cumulator(const TdpCatalog& catalog,
                                   const HardwareSpec& spec, double runtime_s,
                                   CumulatorComponent component,
                                   double bytes_communicated = 0.0);

/// kWh per byte transferred between nodes (1-byte network model).
inline constexpr double kCommKwhPerByte = 6.894e-11;

/// CPU share = process cpu-time delta / (wall x logical cores); GPU share =
/// time-weighted mean utilization across devices. Both clamped to [0,1].
UsageFactors compute_usage_factors(const TelemetryTrace& trace);

} // namespace wattprint
