#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace wattprint {

/// The seven estimation strategies.
enum class Strategy { GA, CC, E2, CT, EIT, MLCO2, CMLTR };

inline constexpr std::array<Strategy, 7> kAllStrategies = {
    Strategy::GA, Strategy::CC, Strategy::E2,    Strategy::CT,
    Strategy::EIT, Strategy::MLCO2, Strategy::CMLTR};

/// Whether an estimate covers the whole node, one process's share, or is a
/// scalar TDP-times-time calculation with no telemetry behind it.
enum class Mode { machine, process, scalar };

/// Basis of a default CPU TDP constant.
enum class TdpBasis { per_core, per_chip };

/// Where a constant used in a result came from.
enum class Provenance { catalog, strategy_default, user, measured, derived };

/// Built-in per-strategy constants: default TDPs, usage factor applied on the
/// TDP path, PUE, grid intensity and sampling interval. Fields are absent for
/// strategies that have no such default (an absent CPU TDP means the strategy
/// has no CPU model path at all).
struct StrategyDefaults {
    Strategy id;
    std::optional<double> cpu_tdp_w;
    TdpBasis cpu_tdp_basis = TdpBasis::per_chip;
    std::optional<double> gpu_tdp_w;
    double cpu_usage = 1.0;
    double pue = 1.0;
    std::optional<double> carbon_intensity_g_per_kwh;
    std::optional<double> sampling_interval_s;
};

const StrategyDefaults& strategy_defaults(Strategy s);

std::string_view strategy_name(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view name);

std::string_view mode_name(Mode m);
std::string_view provenance_name(Provenance p);

/// Display label for a result row, e.g. "CC(M)" or "GA".
std::string row_label(Strategy s, Mode m);

} // namespace wattprint
