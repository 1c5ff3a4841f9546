#include "wattprint/footprint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "wattprint/error.hpp"

namespace wattprint {

namespace {

constexpr double kTransferKwhPerGb = 0.023;
constexpr double kStorageKgPerTbYear = 10.0;
constexpr double kStorageWhPerGbYear = 52.0;
constexpr double kGbPerTb = 1024.0;

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        fields.push_back(b == std::string::npos ? ""
                                                : field.substr(b, e - b + 1));
    }
    return fields;
}

double parse_num(const std::string& s, const std::string& where) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        raise(Errc::parse, where + ": bad number '" + s + "'");
    return v;
}

} // namespace

void CarbonIntensityTable::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io, "cannot open carbon intensity file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        auto fields = split_fields(line);
        if (line_no == 1 && !fields.empty() && fields[0] == "region_code")
            continue;
        if (fields.size() != 4)
            raise(Errc::parse,
                  path + ":" + std::to_string(line_no) +
                      ": expected region_code,intensity_g_per_kwh,year,source");
        CarbonIntensityRecord rec;
        rec.region_code = fields[0];
        rec.intensity_g_per_kwh = parse_num(
            fields[1], path + ":" + std::to_string(line_no));
        if (rec.intensity_g_per_kwh <= 0.0)
            raise(Errc::parse, path + ":" + std::to_string(line_no) +
                                   ": intensity must be > 0");
        rec.year = static_cast<int>(
            parse_num(fields[2], path + ":" + std::to_string(line_no)));
        rec.source = fields[3];
        rec.provenance = Provenance::catalog;
        insert(std::move(rec));
    }
}

void CarbonIntensityTable::insert(CarbonIntensityRecord rec) {
    records_[rec.region_code] = std::move(rec);
}

std::optional<CarbonIntensityRecord> CarbonIntensityTable::find(
    std::string_view region) const {
    const auto it = records_.find(std::string(region));
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

CarbonIntensityRecord lookup_carbon_intensity(const CarbonIntensityTable& table,
                                              std::string_view region_code,
                                              Strategy strategy) {
    if (!region_code.empty()) {
        if (auto rec = table.find(region_code)) return *rec;
    }
    const auto& defaults = strategy_defaults(strategy);
    if (!defaults.carbon_intensity_g_per_kwh)
        raise(Errc::intensity_required,
              std::string(strategy_name(strategy)) +
                  " has no default intensity; provide a region present in the "
                  "table or an explicit intensity value");
    CarbonIntensityRecord rec;
    rec.region_code = std::string(region_code);
    rec.intensity_g_per_kwh = *defaults.carbon_intensity_g_per_kwh;
    rec.year = 0;
    rec.source = std::string(strategy_name(strategy)) + " default";
    rec.provenance = Provenance::strategy_default;
    return rec;
}

std::pair<double, double> apply_pue(double energy_wh, Strategy strategy,
                                    std::optional<double> override) {
    if (energy_wh < 0.0)
        raise(Errc::invalid_argument, "energy must be >= 0");
    if (override && *override < 1.0)
        raise(Errc::invalid_argument, "pue override must be >= 1");
    const double pue = override.value_or(strategy_defaults(strategy).pue);
    return {energy_wh * pue, pue};
}

double emissions_g(double energy_with_pue_wh, double intensity_g_per_kwh) {
    if (energy_with_pue_wh < 0.0 || intensity_g_per_kwh < 0.0)
        raise(Errc::invalid_argument, "emissions inputs must be >= 0");
    return energy_with_pue_wh / 1000.0 * intensity_g_per_kwh;
}

double energy_from_emissions_kwh(double ghg_g, double intensity_g_per_kwh) {
    if (intensity_g_per_kwh <= 0.0)
        raise(Errc::division, "intensity must be > 0 to back-calculate energy");
    return ghg_g / intensity_g_per_kwh;
}

double transfer_footprint_kwh(double size_gb) {
    if (size_gb < 0.0) raise(Errc::invalid_argument, "size must be >= 0");
    return size_gb * kTransferKwhPerGb;
}

StorageFootprint storage_footprint(double size_tb, double years) {
    if (size_tb < 0.0 || years < 0.0)
        raise(Errc::invalid_argument, "storage inputs must be >= 0");
    StorageFootprint out;
    out.carbon_kg = size_tb * years * kStorageKgPerTbYear;
    out.energy_kwh = size_tb * kGbPerTb * years * kStorageWhPerGbYear / 1000.0;
    return out;
}

EmissionReport make_emission_report(const EnergyBreakdown& breakdown,
                                    const CarbonIntensityTable& table,
                                    std::string_view region_code,
                                    std::optional<double> pue_override,
                                    std::optional<double> ci_override) {
    EmissionReport report;
    report.breakdown = breakdown;

    const auto [energy, pue] =
        apply_pue(breakdown.total_wh, breakdown.strategy, pue_override);
    report.pue_applied = pue;
    report.energy_with_pue_wh = energy;

    if (ci_override) {
        if (*ci_override <= 0.0)
            raise(Errc::invalid_argument, "intensity override must be > 0");
        report.carbon_intensity = {std::string(region_code), *ci_override, 0,
                                   "user override", Provenance::user};
    } else {
        report.carbon_intensity =
            lookup_carbon_intensity(table, region_code, breakdown.strategy);
    }
    report.emissions_gco2eq =
        emissions_g(energy, report.carbon_intensity.intensity_g_per_kwh);

    report.constants_used = breakdown.constants_used;
    report.constants_used.push_back(
        {"pue", pue,
         pue_override ? Provenance::user : Provenance::strategy_default});
    report.constants_used.push_back({"carbon_intensity_g_per_kwh",
                                     report.carbon_intensity.intensity_g_per_kwh,
                                     report.carbon_intensity.provenance});
    return report;
}

EmissionReport scale_runs(EmissionReport report, double factor) {
    if (factor < 1.0)
        raise(Errc::invalid_argument, "scaling factor must be >= 1");
    report.energy_with_pue_wh *= factor;
    report.emissions_gco2eq *= factor;
    report.scaling_factor *= factor;
    return report;
}

CarbonIntensityRecord StaticTableProvider::get(std::string_view region_code,
                                               std::string_view) const {
    if (auto rec = table_.find(region_code)) return *rec;
    raise(Errc::not_found,
          "region '" + std::string(region_code) + "' not in table");
}

FixtureFileProvider::FixtureFileProvider(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io, "cannot open intensity fixture: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        auto fields = split_fields(line);
        if (line_no == 1 && !fields.empty() && fields[0] == "region_code")
            continue;
        if (fields.size() != 3)
            raise(Errc::parse, path + ":" + std::to_string(line_no) +
                                   ": expected region_code,date,intensity");
        entries_[{fields[0], fields[1]}] =
            parse_num(fields[2], path + ":" + std::to_string(line_no));
    }
}

CarbonIntensityRecord FixtureFileProvider::get(std::string_view region_code,
                                               std::string_view date) const {
    const auto it =
        entries_.find({std::string(region_code), std::string(date)});
    if (it == entries_.end())
        raise(Errc::not_found, "no fixture entry for (" +
                                   std::string(region_code) + ", " +
                                   std::string(date) + ")");
    CarbonIntensityRecord rec;
    rec.region_code = std::string(region_code);
    rec.intensity_g_per_kwh = it->second;
    rec.year = 0;
    rec.source = "fixture " + std::string(date);
    rec.provenance = Provenance::catalog;
    return rec;
}

} // namespace wattprint
