#pragma once

#include <map>
#include <optional>
#include <string>

#include "wattprint/estimators.hpp"

namespace wattprint {

struct CarbonIntensityRecord {
    std::string region_code;
    double intensity_g_per_kwh = 0.0;
    int year = 0;
    std::string source;
    Provenance provenance = Provenance::catalog;
};

/// region -> gCO2eq/kWh records loaded from carbon_intensity.csv
/// (`region_code,intensity_g_per_kwh,year,source`).
class CarbonIntensityTable {
public:
    CarbonIntensityTable() = default;
    void load_csv(const std::string& path);
    void insert(CarbonIntensityRecord rec);

    std::optional<CarbonIntensityRecord> find(std::string_view region) const;
    std::size_t size() const { return records_.size(); }

private:
    std::map<std::string, CarbonIntensityRecord> records_;
};

/// Region record when present, else the strategy default. MLCO2 has no
/// default: missing region raises Errc::intensity_required.
CarbonIntensityRecord lookup_carbon_intensity(const CarbonIntensityTable& table,
                                              std::string_view region_code,
                                              Strategy strategy);

/// (energy x PUE, PUE used). The override wins when given; otherwise the
/// strategy default applies. Overrides below 1 raise Errc::invalid_argument.
std::pair<double, double> apply_pue(double energy_wh, Strategy strategy,
                                    std::optional<double> override = {});

/// gCO2eq from Wh and gCO2eq/kWh.
double emissions_g(double energy_with_pue_wh, double intensity_g_per_kwh);

/// kWh back-calculated from emissions (Energy = GHG / EI). Zero intensity
/// raises Errc::division.
double energy_from_emissions_kwh(double ghg_g, double intensity_g_per_kwh);

/// kWh to move `size_gb` across the network.
double transfer_footprint_kwh(double size_gb);

struct StorageFootprint {
    double carbon_kg = 0.0;
    double energy_kwh = 0.0;
};

/// Yearly cost of keeping data on disk: 10 kgCO2eq per TB-year and 52 Wh per
/// GB-year (1 TB = 1024 GB).
StorageFootprint storage_footprint(double size_tb, double years);

/// Energy after PUE, carbon intensity applied, with provenance of every
/// constant.
struct EmissionReport {
    EnergyBreakdown breakdown;
    double pue_applied = 1.0;
    double energy_with_pue_wh = 0.0;
    CarbonIntensityRecord carbon_intensity;
    double emissions_gco2eq = 0.0;
    double scaling_factor = 1.0;
    std::vector<ConstantUsed> constants_used;
};

/// Applies PUE and carbon intensity to a breakdown. `ci_override` (user-
/// provided gCO2eq/kWh) bypasses the table and the intensity-required error.
EmissionReport make_emission_report(const EnergyBreakdown& breakdown,
                                    const CarbonIntensityTable& table,
                                    std::string_view region_code,
                                    std::optional<double> pue_override = {},
                                    std::optional<double> ci_override = {});

/// Multiplies energy-with-PUE and emissions by the run-count factor.
/// Factors below 1 raise Errc::invalid_argument.
EmissionReport scale_runs(EmissionReport report, double factor);

/// Pluggable (region, date) -> intensity source. Live HTTP providers conform
/// to this interface but are not shipped.
class IntensityProvider {
public:
    virtual ~IntensityProvider() = default;
    virtual CarbonIntensityRecord get(std::string_view region_code,
                                      std::string_view date) const = 0;
};

/// Serves one static table; the date argument is ignored.
class StaticTableProvider : public IntensityProvider {
public:
    explicit StaticTableProvider(CarbonIntensityTable table)
        : table_(std::move(table)) {}
    CarbonIntensityRecord get(std::string_view region_code,
                              std::string_view date) const override;

private:
    CarbonIntensityTable table_;
};

/// Reads a `region_code,date,intensity_g_per_kwh` fixture file; misses raise
/// Errc::not_found.
class FixtureFileProvider : public IntensityProvider {
public:
    explicit FixtureFileProvider(const std::string& path);
    CarbonIntensityRecord get(std::string_view region_code,
                              std::string_view date) const override;

private:
    std::map<std::pair<std::string, std::string>, double> entries_;
};

} // namespace wattprint
