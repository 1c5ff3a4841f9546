#include "wattprint/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "wattprint/error.hpp"

namespace wattprint {

namespace {

constexpr double kGaMemoryWPerGb = 0.3725; // W per GB available
constexpr double kMemoryWPerGb = 0.375;    // W per GB used (CC, E2)

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double sum_components(const EnergyBreakdown& b) {
    double total = 0.0;
    if (b.cpu_wh) total += *b.cpu_wh;
    if (b.gpu_wh) total += *b.gpu_wh;
    if (b.memory_wh) total += *b.memory_wh;
    if (b.communication_wh) total += *b.communication_wh;
    return total;
}

void push_tdp(EnergyBreakdown& b, const char* name, const TdpResolution& r) {
    b.constants_used.push_back({name, r.watts, r.provenance});
}

void require_valid(const TelemetryTrace& trace) {
    validate(trace);
    if (trace.samples.size() < 2)
        raise(Errc::ordering, "trace needs at least 2 samples to integrate");
}

/// cpu-time share of all logical cores over the whole trace, clamped.
double cpu_usage_factor(const TelemetryTrace& trace, Mode mode) {
    const auto delta = mode == Mode::process ? process_cpu_delta_s(trace)
                                             : machine_cpu_delta_s(trace);
    if (!delta)
        raise(Errc::channel_missing,
              std::string(mode == Mode::process ? "process" : "machine") +
                  " cpu-time channel missing from trace");
    const double wall = trace.duration_s();
    const double logical = trace.hardware.cpu.logical_cores;
    return clamp01(*delta / (wall * logical));
}

} // namespace

EnergyBreakdown estimate_green_algorithms(const TdpCatalog& catalog,
                                          const HardwareSpec& spec,
                                          double runtime_s,
                                          const UsageFactors& usage) {
    if (runtime_s <= 0.0)
        raise(Errc::invalid_argument, "runtime must be > 0");
    validate(spec);

    EnergyBreakdown b;
    b.strategy = Strategy::GA;
    b.mode = Mode::process;
    b.duration_s = runtime_s;
    const double hours = runtime_s / 3600.0;

    const auto cpu_tdp = resolve_cpu_tdp(catalog, spec.cpu, Strategy::GA);
    const double cpu_usage = usage.cpu_usage.value_or(1.0);
    b.cpu_wh = cpu_tdp.watts * cpu_usage * hours;
    push_tdp(b, "cpu_tdp_w", cpu_tdp);
    b.constants_used.push_back({"cpu_usage", cpu_usage,
                                usage.cpu_usage ? Provenance::user
                                                : Provenance::strategy_default});

    if (spec.gpus.count > 0) {
        const auto gpu_tdp = resolve_gpu_tdp(catalog, spec.gpus, Strategy::GA);
        const double gpu_usage = usage.gpu_usage.value_or(1.0);
        b.gpu_wh = spec.gpus.count * gpu_tdp.watts * gpu_usage * hours;
        push_tdp(b, "gpu_tdp_w", gpu_tdp);
        b.constants_used.push_back(
            {"gpu_usage", gpu_usage,
             usage.gpu_usage ? Provenance::user : Provenance::strategy_default});
    }

    const double mem_gb = usage.memory_requested_gb.value_or(spec.memory_total_gb);
    b.memory_wh = mem_gb * kGaMemoryWPerGb * hours;
    b.constants_used.push_back(
        {"memory_w_per_gb", kGaMemoryWPerGb, Provenance::strategy_default});
    b.constants_used.push_back({"memory_gb", mem_gb,
                                usage.memory_requested_gb
                                    ? Provenance::user
                                    : Provenance::measured});

    b.total_wh = sum_components(b);
    return b;
}

EnergyBreakdown estimate_codecarbon(const TdpCatalog& catalog,
                                    const TelemetryTrace& trace, Mode mode) {
    require_valid(trace);
    if (mode == Mode::scalar)
        raise(Errc::invalid_argument, "codecarbon mode must be machine or process");

    EnergyBreakdown b;
    b.strategy = Strategy::CC;
    b.mode = mode;
    b.duration_s = trace.duration_s();
    const double hours = b.duration_s / 3600.0;

    if (auto rapl = rapl_package_energy_wh(trace)) {
        b.cpu_wh = *rapl;
        b.constants_used.push_back({"cpu_rapl_wh", *rapl, Provenance::measured});
    } else {
        const auto tdp = resolve_cpu_tdp(catalog, trace.hardware.cpu, Strategy::CC);
        const double usage = strategy_defaults(Strategy::CC).cpu_usage;
        b.cpu_wh = tdp.watts * usage * hours;
        push_tdp(b, "cpu_tdp_w", tdp);
        b.constants_used.push_back(
            {"cpu_usage", usage, Provenance::strategy_default});
        b.warnings.push_back("no energy counters in trace; CPU from TDP x " +
                             std::to_string(usage));
    }

    if (auto gpu = gpu_power_series(trace)) {
        b.gpu_wh = gpu->integrate() / 3600.0;
    } else {
        b.gpu_wh = 0.0;
        b.warnings.push_back("no GPU power channel; GPU reported as 0");
    }

    if (auto mem = memory_series(trace, mode)) {
        b.memory_wh = kMemoryWPerGb * mem->mean() * hours;
        b.constants_used.push_back(
            {"memory_w_per_gb", kMemoryWPerGb, Provenance::strategy_default});
    } else {
        b.warnings.push_back("memory channel missing; memory not measured");
    }

    b.total_wh = sum_components(b);
    return b;
}

EnergyBreakdown estimate_eco2ai(const TdpCatalog& catalog,
                                const TelemetryTrace& trace, Mode mode) {
    require_valid(trace);
    if (mode == Mode::scalar)
        raise(Errc::invalid_argument, "eco2ai mode must be machine or process");

    EnergyBreakdown b;
    b.strategy = Strategy::E2;
    b.mode = mode;
    b.duration_s = trace.duration_s();
    const double hours = b.duration_s / 3600.0;

    const double usage = cpu_usage_factor(trace, mode);
    const auto tdp = resolve_cpu_tdp(catalog, trace.hardware.cpu, Strategy::E2);
    b.cpu_wh = tdp.watts * usage * hours;
    push_tdp(b, "cpu_tdp_w", tdp);
    b.constants_used.push_back({"cpu_usage", usage, Provenance::measured});

    // pynvml-style reading covers the whole machine in both modes.
    if (auto gpu = gpu_power_series(trace)) {
        b.gpu_wh = gpu->integrate() / 3600.0;
    } else {
        b.gpu_wh = 0.0;
        b.warnings.push_back("no GPU power channel; GPU reported as 0");
    }

    if (auto mem = memory_series(trace, mode)) {
        b.memory_wh = kMemoryWPerGb * mem->mean() * hours;
        b.constants_used.push_back(
            {"memory_w_per_gb", kMemoryWPerGb, Provenance::strategy_default});
    } else {
        b.warnings.push_back("memory channel missing; memory not measured");
    }

    b.total_wh = sum_components(b);
    return b;
}

EnergyBreakdown estimate_carbontracker(const TelemetryTrace& trace) {
    require_valid(trace);

    const auto rapl = rapl_package_energy_wh(trace);
    const auto dram = rapl_dram_energy_wh(trace);
    const auto gpu = gpu_power_series(trace);
    if (!rapl && !gpu)
        raise(Errc::no_measurable_component,
              "carbontracker needs energy counters or a GPU power channel");

    EnergyBreakdown b;
    b.strategy = Strategy::CT;
    b.mode = Mode::machine;
    b.duration_s = trace.duration_s();

    if (rapl) {
        b.cpu_wh = *rapl;
        b.constants_used.push_back({"cpu_rapl_wh", *rapl, Provenance::measured});
        if (dram) {
            b.memory_wh = *dram;
            b.constants_used.push_back(
                {"dram_rapl_wh", *dram, Provenance::measured});
        } else {
            b.warnings.push_back("no DRAM counters; memory not measured");
        }
    } else {
        b.warnings.push_back(
            "no energy counters; CPU and memory not measured");
    }
    if (gpu) {
        b.gpu_wh = gpu->integrate() / 3600.0;
    } else {
        b.warnings.push_back("no GPU power channel; GPU not measured");
    }

    b.total_wh = sum_components(b);
    return b;
}

EnergyBreakdown estimate_eit(const TelemetryTrace& trace) {
    require_valid(trace);

    const auto rapl = rapl_package_energy_wh(trace);
    if (!rapl)
        raise(Errc::rapl_required, "eit requires energy counters in the trace");

    EnergyBreakdown b;
    b.strategy = Strategy::EIT;
    b.mode = Mode::process;
    b.duration_s = trace.duration_s();

    const double usage = cpu_usage_factor(trace, Mode::process);
    b.cpu_wh = *rapl * usage;
    b.constants_used.push_back({"cpu_rapl_wh", *rapl, Provenance::measured});
    b.constants_used.push_back({"cpu_usage", usage, Provenance::measured});

    if (auto gpu = gpu_power_series(trace)) {
        double util = 0.0;
        if (auto us = gpu_utilization_series(trace)) util = clamp01(us->mean());
        b.gpu_wh = gpu->integrate() / 3600.0 * util;
        b.constants_used.push_back({"gpu_usage", util, Provenance::measured});
    } else {
        b.warnings.push_back("no GPU power channel; GPU not measured");
    }

    if (auto dram = rapl_dram_energy_wh(trace)) {
        if (auto frac = rss_fraction_series(trace)) {
            const double share = clamp01(frac->mean());
            b.memory_wh = *dram * share;
            b.constants_used.push_back(
                {"memory_share", share, Provenance::measured});
        } else {
            b.warnings.push_back(
                "memory channels missing; DRAM energy not attributed");
        }
    } else {
        b.warnings.push_back("no DRAM counters; memory not measured");
    }

    b.total_wh = sum_components(b);
    return b;
}

EnergyBreakdown estimate_mlco2(const TdpCatalog& catalog,
                               const HardwareSpec& spec, double runtime_s) {
    if (runtime_s < 0.0)
        raise(Errc::invalid_argument, "runtime must be >= 0");
    validate(spec);
    if (spec.gpus.count < 1)
        raise(Errc::unknown_gpu, "mlco2 requires at least one GPU");

    // Unlisted models cannot be supplied a custom TDP for this strategy.
    const auto tdp = lookup_gpu_tdp(catalog, spec.gpus.model_name, Strategy::MLCO2);

    EnergyBreakdown b;
    b.strategy = Strategy::MLCO2;
    b.mode = Mode::scalar;
    b.duration_s = runtime_s;
    // The upstream calculator handles a single GPU at maximum load; the count
    // multiplier is applied here.
    b.gpu_wh = spec.gpus.count * tdp.watts * runtime_s / 3600.0;
    push_tdp(b, "gpu_tdp_w", tdp);
    b.constants_used.push_back({"gpu_count_multiplier",
                                static_cast<double>(spec.gpus.count),
                                Provenance::derived});
    b.warnings.push_back("CPU and memory are not measured by this strategy");
    b.total_wh = sum_components(b);
    return b;
}

EnergyBreakdown estimate_cumulator(const TdpCatalog& catalog,
                                   const HardwareSpec& spec, double runtime_s,
                                   CumulatorComponent component,
                                   double bytes_communicated) {
    if (runtime_s < 0.0)
        raise(Errc::invalid_argument, "runtime must be >= 0");
    if (bytes_communicated < 0.0)
        raise(Errc::invalid_argument, "bytes_communicated must be >= 0");
    validate(spec);

    EnergyBreakdown b;
    b.strategy = Strategy::CMLTR;
    b.mode = Mode::scalar;
    b.duration_s = runtime_s;
    const double hours = runtime_s / 3600.0;

    // One unit of the chosen component, regardless of how many exist.
    if (component == CumulatorComponent::cpu) {
        const auto tdp = resolve_cpu_tdp(catalog, spec.cpu, Strategy::CMLTR);
        b.cpu_wh = tdp.watts * hours;
        push_tdp(b, "cpu_tdp_w", tdp);
        b.warnings.push_back("GPU not measured (single-component strategy)");
    } else {
        const auto tdp = resolve_gpu_tdp(catalog, spec.gpus, Strategy::CMLTR);
        b.gpu_wh = tdp.watts * hours;
        push_tdp(b, "gpu_tdp_w", tdp);
        b.warnings.push_back("CPU not measured (single-component strategy)");
    }

    if (bytes_communicated > 0.0) {
        b.communication_wh = bytes_communicated * kCommKwhPerByte * 1000.0;
        b.constants_used.push_back(
            {"comm_kwh_per_byte", kCommKwhPerByte, Provenance::strategy_default});
    }
    b.warnings.push_back("memory is not measured by this strategy");

    b.total_wh = sum_components(b);
    return b;
}

UsageFactors compute_usage_factors(const TelemetryTrace& trace) {
    require_valid(trace);
    UsageFactors out;
    out.cpu_usage = cpu_usage_factor(trace, Mode::process);
    if (auto util = gpu_utilization_series(trace))
        out.gpu_usage = clamp01(util->mean());
    return out;
}

} // namespace wattprint
