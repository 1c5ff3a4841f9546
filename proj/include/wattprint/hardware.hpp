#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wattprint/strategy.hpp"

namespace wattprint {

struct CpuSpec {
    std::string model_name;
    int sockets = 1;
    int cores_per_socket = 1;
    int logical_cores = 1;
    std::optional<double> tdp_watts; // per chip
    bool hyperthreading = false;

    int physical_cores() const { return sockets * cores_per_socket; }
};

struct GpuSpec {
    std::string model_name;
    int count = 0;
    std::optional<double> tdp_watts; // per device
    bool vendor_supports_power_query = false;
};

/// The machine description every TDP-path estimator consumes. `pue` absent
/// means "unspecified" (strategy defaults apply downstream); present values
/// are the declared facility PUE, 1.0 for a personal computer.
struct HardwareSpec {
    CpuSpec cpu;
    GpuSpec gpus;
    double memory_total_gb = 0.0;
    std::optional<double> pue;
    std::string region_code;
};

/// Throws Errc::validation on violated invariants.
void validate(const CpuSpec& cpu);
void validate(const HardwareSpec& spec);

/// Canonical form used for catalog matching: lowercase, whitespace collapsed,
/// "(R)"/"(TM)" marks stripped.
std::string normalize_model_name(std::string_view name);

/// A resolved TDP plus where it came from.
struct TdpResolution {
    double watts = 0.0;
    Provenance provenance = Provenance::strategy_default;
    std::string detail; // matched catalog key or default rule
};

struct CatalogEntry {
    std::string model;       // as written in the CSV
    double tdp_watts = 0.0;  // per chip / per device
    std::optional<int> cores;
};

/// CPU/GPU model -> TDP tables loaded from the versioned CSV datasets.
/// Immutable after load; safe for concurrent readers.
class TdpCatalog {
public:
    TdpCatalog() = default;

    /// Parses `model,tdp_watts[,cores]` rows into the CPU table.
    void load_cpu_csv(const std::string& path);
    /// Parses `model,tdp_watts` rows into the GPU table.
    void load_gpu_csv(const std::string& path);

    std::optional<CatalogEntry> find_cpu(std::string_view model) const;
    std::optional<CatalogEntry> find_gpu(std::string_view model) const;

    std::size_t cpu_count() const { return cpu_.size(); }
    std::size_t gpu_count() const { return gpu_.size(); }

    /// Warnings accumulated while loading (duplicate models, etc.).
    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    std::map<std::string, CatalogEntry> cpu_;
    std::map<std::string, CatalogEntry> gpu_;
    std::vector<std::string> warnings_;
};

/// Resolves the CPU power a strategy's formula consumes, in that strategy's
/// basis: whole-machine watts for GA/CC/E2 (catalog chip TDP multiplied by
/// socket count, GA default of 12 W scaled by total physical cores), a single
/// package for CMLTR. Strategies with no CPU model path (CT, EIT, MLCO2)
/// raise Errc::unsupported_strategy.
TdpResolution lookup_cpu_tdp(const TdpCatalog& catalog, const CpuSpec& cpu,
                             Strategy strategy);

/// Per-device GPU TDP. GA falls back to 200 W, CMLTR to 250 W; MLCO2 with an
/// unknown model raises Errc::unknown_gpu.
TdpResolution lookup_gpu_tdp(const TdpCatalog& catalog,
                             std::string_view model_name, Strategy strategy);

/// Like lookup_cpu_tdp/lookup_gpu_tdp but honors a user-provided TDP on the
/// spec first (Provenance::user), scaled to the same basis.
TdpResolution resolve_cpu_tdp(const TdpCatalog& catalog, const CpuSpec& cpu,
                              Strategy strategy);
TdpResolution resolve_gpu_tdp(const TdpCatalog& catalog, const GpuSpec& gpus,
                              Strategy strategy);

} // namespace wattprint
