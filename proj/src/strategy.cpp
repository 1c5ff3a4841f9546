#include "wattprint/strategy.hpp"

#include <algorithm>
#include <cctype>

namespace wattprint {

namespace {

const StrategyDefaults kDefaults[] = {
    // id, cpu_tdp, basis, gpu_tdp, cpu_usage, pue, intensity, interval
    {Strategy::GA, 12.0, TdpBasis::per_core, 200.0, 1.0, 1.67, 475.0, {}},
    {Strategy::CC, 85.0, TdpBasis::per_chip, {}, 0.5, 1.0, 475.0, 15.0},
    {Strategy::E2, 100.0, TdpBasis::per_chip, {}, 1.0, 1.0, 436.5, 10.0},
    {Strategy::CT, {}, TdpBasis::per_chip, {}, 1.0, 1.55, 475.0, 10.0},
    {Strategy::EIT, {}, TdpBasis::per_chip, {}, 1.0, 1.58, 301.0, 10.0},
    {Strategy::MLCO2, {}, TdpBasis::per_chip, {}, 1.0, 1.0, {}, {}},
    {Strategy::CMLTR, 250.0, TdpBasis::per_chip, 250.0, 1.0, 1.0, 447.0, {}},
};

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

} // namespace

const StrategyDefaults& strategy_defaults(Strategy s) {
    return kDefaults[static_cast<int>(s)];
}

std::string_view strategy_name(Strategy s) {
    switch (s) {
    case Strategy::GA: return "GA";
    case Strategy::CC: return "CC";
    case Strategy::E2: return "E2";
    case Strategy::CT: return "CT";
    case Strategy::EIT: return "EIT";
    case Strategy::MLCO2: return "MLCO2";
    case Strategy::CMLTR: return "CMLTR";
    }
    return "?";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
    const std::string n = lower(name);
    if (n == "ga" || n == "green-algorithms") return Strategy::GA;
    if (n == "cc" || n == "codecarbon") return Strategy::CC;
    if (n == "e2" || n == "eco2ai") return Strategy::E2;
    if (n == "ct" || n == "carbontracker") return Strategy::CT;
    if (n == "eit") return Strategy::EIT;
    if (n == "mlco2") return Strategy::MLCO2;
    if (n == "cmltr" || n == "cumulator") return Strategy::CMLTR;
    return std::nullopt;
}

std::string_view mode_name(Mode m) {
    switch (m) {
    case Mode::machine: return "machine";
    case Mode::process: return "process";
    case Mode::scalar: return "scalar";
    }
    return "?";
}

std::string_view provenance_name(Provenance p) {
    switch (p) {
    case Provenance::catalog: return "catalog";
    case Provenance::strategy_default: return "strategy-default";
    case Provenance::user: return "user";
    case Provenance::measured: return "measured";
    case Provenance::derived: return "derived";
    }
    return "?";
}

std::string row_label(Strategy s, Mode m) {
    std::string label(strategy_name(s));
    if (s == Strategy::CC || s == Strategy::E2) {
        label += (m == Mode::process) ? "(P)" : "(M)";
    }
    return label;
}

} // namespace wattprint
