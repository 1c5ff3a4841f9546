#include "wattprint/report.hpp"

#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "wattprint/error.hpp"

namespace wattprint {

using nlohmann::json;

double round_sig6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::strtod(buf, nullptr);
}

std::optional<ReportFormat> parse_report_format(std::string_view name) {
    if (name == "json-lines" || name == "jsonl") return ReportFormat::json_lines;
    if (name == "csv") return ReportFormat::csv;
    if (name == "human") return ReportFormat::human;
    return std::nullopt;
}

namespace {

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string fmt_opt(const std::optional<double>& v) {
    return v ? fmt6(*v) : std::string{};
}

json emission_to_json(const EmissionReport& r) {
    const auto& b = r.breakdown;
    json row{{"type", "emission_report"},
             {"strategy", strategy_name(b.strategy)},
             {"mode", mode_name(b.mode)},
             {"label", row_label(b.strategy, b.mode)},
             {"duration_s", round_sig6(b.duration_s)},
             {"total_wh", round_sig6(b.total_wh)},
             {"pue", round_sig6(r.pue_applied)},
             {"energy_with_pue_wh", round_sig6(r.energy_with_pue_wh)},
             {"region", r.carbon_intensity.region_code},
             {"carbon_intensity_g_per_kwh",
              round_sig6(r.carbon_intensity.intensity_g_per_kwh)},
             {"ci_source", r.carbon_intensity.source},
             {"ci_provenance", provenance_name(r.carbon_intensity.provenance)},
             {"emissions_g", round_sig6(r.emissions_gco2eq)},
             {"scaling_factor", round_sig6(r.scaling_factor)}};
    if (r.carbon_intensity.year > 0) row["ci_year"] = r.carbon_intensity.year;
    if (b.cpu_wh) row["cpu_wh"] = round_sig6(*b.cpu_wh);
    if (b.gpu_wh) row["gpu_wh"] = round_sig6(*b.gpu_wh);
    if (b.memory_wh) row["memory_wh"] = round_sig6(*b.memory_wh);
    if (b.communication_wh)
        row["communication_wh"] = round_sig6(*b.communication_wh);
    json constants = json::array();
    for (const auto& c : r.constants_used)
        constants.push_back({{"name", c.name},
                             {"value", round_sig6(c.value)},
                             {"provenance", provenance_name(c.provenance)}});
    row["constants"] = constants;
    row["warnings"] = b.warnings;
    return row;
}

EmissionReport emission_from_json(const json& j) {
    EmissionReport r;
    auto st = parse_strategy(j.at("strategy").get<std::string>());
    if (!st) raise(Errc::parse, "unknown strategy in report row");
    r.breakdown.strategy = *st;
    const std::string mode = j.at("mode").get<std::string>();
    r.breakdown.mode = mode == "process" ? Mode::process
                       : mode == "scalar" ? Mode::scalar
                                          : Mode::machine;
    r.breakdown.duration_s = j.at("duration_s").get<double>();
    r.breakdown.total_wh = j.at("total_wh").get<double>();
    if (j.contains("cpu_wh")) r.breakdown.cpu_wh = j["cpu_wh"].get<double>();
    if (j.contains("gpu_wh")) r.breakdown.gpu_wh = j["gpu_wh"].get<double>();
    if (j.contains("memory_wh"))
        r.breakdown.memory_wh = j["memory_wh"].get<double>();
    if (j.contains("communication_wh"))
        r.breakdown.communication_wh = j["communication_wh"].get<double>();
    r.pue_applied = j.at("pue").get<double>();
    r.energy_with_pue_wh = j.at("energy_with_pue_wh").get<double>();
    r.carbon_intensity.region_code = j.value("region", std::string{});
    r.carbon_intensity.intensity_g_per_kwh =
        j.at("carbon_intensity_g_per_kwh").get<double>();
    r.carbon_intensity.year = j.value("ci_year", 0);
    r.carbon_intensity.source = j.value("ci_source", std::string{});
    r.emissions_gco2eq = j.at("emissions_g").get<double>();
    r.scaling_factor = j.value("scaling_factor", 1.0);
    if (j.contains("warnings"))
        r.breakdown.warnings = j["warnings"].get<std::vector<std::string>>();
    if (j.contains("constants")) {
        for (const auto& c : j["constants"]) {
            ConstantUsed cu;
            cu.name = c.at("name").get<std::string>();
            cu.value = c.at("value").get<double>();
            r.constants_used.push_back(std::move(cu));
        }
    }
    return r;
}

void write_json_lines(const ReportDocument& doc, std::ostream& out) {
    json header{{"type", "report_header"},
                {"schema_version", doc.schema_version},
                {"warnings", doc.warnings}};
    out << header.dump() << '\n';
    for (const auto& r : doc.reports) out << emission_to_json(r).dump() << '\n';
    for (const auto& e : doc.errors) {
        json row{{"type", "strategy_error"},
                 {"strategy", strategy_name(e.strategy)},
                 {"error_code", e.error_code},
                 {"message", e.message}};
        out << row.dump() << '\n';
    }
    for (const auto& c : doc.comparisons) {
        json row{{"type", "wattmeter_comparison"},
                 {"strategy", strategy_name(c.strategy)},
                 {"mode", mode_name(c.mode)},
                 {"label", row_label(c.strategy, c.mode)},
                 {"energy_wo_pue_wh", round_sig6(c.energy_wo_pue_wh)},
                 {"wattmeter_wh", round_sig6(c.wattmeter_wh)},
                 {"percentage", round_sig6(c.percentage)}};
        out << row.dump() << '\n';
    }
    if (doc.idle) {
        json row{{"type", "idle_baseline"},
                 {"idle_power_w", round_sig6(doc.idle->idle_power_w)},
                 {"dynamic_energy_wh", round_sig6(doc.idle->dynamic_energy_wh)},
                 {"idle_fraction", round_sig6(doc.idle->idle_fraction)},
                 {"active_energy_wh", round_sig6(doc.idle->active_energy_wh)},
                 {"active_duration_s", round_sig6(doc.idle->active_duration_s)}};
        out << row.dump() << '\n';
    }
    if (doc.overhead) {
        json row{{"type", "overhead"},
                 {"extra_time_s", round_sig6(doc.overhead->extra_time_s)},
                 {"raw_extra_time_s", round_sig6(doc.overhead->raw_extra_time_s)},
                 {"extra_energy_wh", round_sig6(doc.overhead->extra_energy_wh)},
                 {"total_energy_wh", round_sig6(doc.overhead->total_energy_wh)},
                 {"overload_fraction",
                  round_sig6(doc.overhead->overload_fraction)}};
        out << row.dump() << '\n';
    }
}

void write_csv(const ReportDocument& doc, std::ostream& out) {
    out << "strategy,mode,duration_s,cpu_wh,gpu_wh,memory_wh,communication_wh,"
           "total_wh,pue,energy_with_pue_wh,region,carbon_intensity_g_per_kwh,"
           "emissions_g,scaling_factor\n";
    for (const auto& r : doc.reports) {
        const auto& b = r.breakdown;
        out << row_label(b.strategy, b.mode) << ',' << mode_name(b.mode) << ','
            << fmt6(b.duration_s) << ',' << fmt_opt(b.cpu_wh) << ','
            << fmt_opt(b.gpu_wh) << ',' << fmt_opt(b.memory_wh) << ','
            << fmt_opt(b.communication_wh) << ',' << fmt6(b.total_wh) << ','
            << fmt6(r.pue_applied) << ',' << fmt6(r.energy_with_pue_wh) << ','
            << r.carbon_intensity.region_code << ','
            << fmt6(r.carbon_intensity.intensity_g_per_kwh) << ','
            << fmt6(r.emissions_gco2eq) << ',' << fmt6(r.scaling_factor)
            << '\n';
    }
    for (const auto& e : doc.errors)
        out << row_label(e.strategy, Mode::machine) << ",error," << e.error_code
            << ",\"" << e.message << "\",,,,,,,,,,\n";
    if (!doc.comparisons.empty()) {
        out << "\nlabel,energy_wo_pue_wh,wattmeter_wh,percentage\n";
        for (const auto& c : doc.comparisons)
            out << row_label(c.strategy, c.mode) << ','
                << fmt6(c.energy_wo_pue_wh) << ',' << fmt6(c.wattmeter_wh)
                << ',' << fmt6(c.percentage) << '\n';
    }
    if (doc.idle) {
        out << "\nidle_power_w,dynamic_energy_wh,idle_fraction\n"
            << fmt6(doc.idle->idle_power_w) << ','
            << fmt6(doc.idle->dynamic_energy_wh) << ','
            << fmt6(doc.idle->idle_fraction) << '\n';
    }
    if (doc.overhead) {
        out << "\nextra_time_s,raw_extra_time_s,extra_energy_wh,"
               "total_energy_wh,overload_fraction\n"
            << fmt6(doc.overhead->extra_time_s) << ','
            << fmt6(doc.overhead->raw_extra_time_s) << ','
            << fmt6(doc.overhead->extra_energy_wh) << ','
            << fmt6(doc.overhead->total_energy_wh) << ','
            << fmt6(doc.overhead->overload_fraction) << '\n';
    }
}

void write_human(const ReportDocument& doc, std::ostream& out) {
    const int name_w = 22, col_w = 12;
    const auto cell = [&](const std::string& s) {
        out << std::setw(col_w) << s;
    };
    out << std::left << std::setw(name_w) << "" << std::right;
    for (const auto& r : doc.reports)
        cell(row_label(r.breakdown.strategy, r.breakdown.mode));
    out << '\n';

    const auto line = [&](const std::string& name, auto&& get) {
        out << std::left << std::setw(name_w) << name << std::right;
        for (const auto& r : doc.reports) cell(get(r));
        out << '\n';
    };
    line("Energy reported (Wh)",
         [](const EmissionReport& r) { return fmt6(r.energy_with_pue_wh); });
    line("Energy w/o PUE (Wh)",
         [](const EmissionReport& r) { return fmt6(r.breakdown.total_wh); });
    line("CPU (Wh)",
         [](const EmissionReport& r) { return fmt_opt(r.breakdown.cpu_wh); });
    line("GPU (Wh)",
         [](const EmissionReport& r) { return fmt_opt(r.breakdown.gpu_wh); });
    line("Memory (Wh)", [](const EmissionReport& r) {
        return fmt_opt(r.breakdown.memory_wh);
    });
    line("PUE", [](const EmissionReport& r) { return fmt6(r.pue_applied); });
    line("Emissions (gCO2eq)",
         [](const EmissionReport& r) { return fmt6(r.emissions_gco2eq); });

    for (const auto& e : doc.errors)
        out << strategy_name(e.strategy) << ": error (" << e.error_code
            << "): " << e.message << '\n';

    if (!doc.comparisons.empty()) {
        out << "\nWattmeter comparison\n";
        for (const auto& c : doc.comparisons)
            out << "  " << std::left << std::setw(8)
                << row_label(c.strategy, c.mode) << std::right
                << fmt6(c.energy_wo_pue_wh) << " Wh / " << fmt6(c.wattmeter_wh)
                << " Wh = " << fmt6(c.percentage * 100.0) << "%\n";
    }
    if (doc.idle) {
        out << "\nIdle baseline: power " << fmt6(doc.idle->idle_power_w)
            << " W, dynamic " << fmt6(doc.idle->dynamic_energy_wh)
            << " Wh, idle fraction "
            << fmt6(doc.idle->idle_fraction * 100.0) << "%\n";
    }
    if (doc.overhead) {
        out << "\nTracker overhead: extra time "
            << fmt6(doc.overhead->extra_time_s) << " s (raw "
            << fmt6(doc.overhead->raw_extra_time_s) << " s), extra energy "
            << fmt6(doc.overhead->extra_energy_wh) << " Wh, overload "
            << fmt6(doc.overhead->overload_fraction * 100.0) << "%\n";
    }
    for (const auto& w : doc.warnings) out << "warning: " << w << '\n';
}

} // namespace

void write_report(const ReportDocument& doc, std::ostream& out,
                  ReportFormat format) {
    switch (format) {
    case ReportFormat::json_lines: write_json_lines(doc, out); break;
    case ReportFormat::csv: write_csv(doc, out); break;
    case ReportFormat::human: write_human(doc, out); break;
    }
}

std::string format_report(const ReportDocument& doc, ReportFormat format) {
    std::ostringstream out;
    write_report(doc, out, format);
    return out.str();
}

ReportDocument read_report_json_lines(std::istream& in) {
    ReportDocument doc;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            raise(Errc::parse, "bad report line " + std::to_string(line_no) +
                                   ": " + e.what());
        }
        const std::string type = j.value("type", std::string{});
        if (type == "report_header") {
            doc.schema_version = j.value("schema_version", 1);
            if (doc.schema_version != 1)
                raise(Errc::version, "unknown report schema_version");
            if (j.contains("warnings"))
                doc.warnings = j["warnings"].get<std::vector<std::string>>();
        } else if (type == "emission_report") {
            doc.reports.push_back(emission_from_json(j));
        } else if (type == "strategy_error") {
            StrategyError e;
            auto st = parse_strategy(j.at("strategy").get<std::string>());
            if (!st) raise(Errc::parse, "unknown strategy in error row");
            e.strategy = *st;
            e.error_code = j.value("error_code", std::string{});
            e.message = j.value("message", std::string{});
            doc.errors.push_back(std::move(e));
        } else if (type == "wattmeter_comparison") {
            ComparisonRow c;
            auto st = parse_strategy(j.at("strategy").get<std::string>());
            if (!st) raise(Errc::parse, "unknown strategy in comparison row");
            c.strategy = *st;
            const std::string mode = j.value("mode", std::string{"machine"});
            c.mode = mode == "process" ? Mode::process
                     : mode == "scalar" ? Mode::scalar
                                        : Mode::machine;
            c.energy_wo_pue_wh = j.at("energy_wo_pue_wh").get<double>();
            c.wattmeter_wh = j.at("wattmeter_wh").get<double>();
            c.percentage = j.at("percentage").get<double>();
            doc.comparisons.push_back(c);
        } else if (type == "idle_baseline") {
            IdleBaseline idle;
            idle.idle_power_w = j.at("idle_power_w").get<double>();
            idle.dynamic_energy_wh = j.at("dynamic_energy_wh").get<double>();
            idle.idle_fraction = j.at("idle_fraction").get<double>();
            idle.active_energy_wh = j.value("active_energy_wh", 0.0);
            idle.active_duration_s = j.value("active_duration_s", 0.0);
            doc.idle = idle;
        } else if (type == "overhead") {
            OverheadReport o;
            o.extra_time_s = j.at("extra_time_s").get<double>();
            o.raw_extra_time_s = j.value("raw_extra_time_s", o.extra_time_s);
            o.extra_energy_wh = j.at("extra_energy_wh").get<double>();
            o.total_energy_wh = j.value("total_energy_wh", 0.0);
            o.overload_fraction = j.at("overload_fraction").get<double>();
            doc.overhead = o;
        } else {
            raise(Errc::parse, "unknown report row type '" + type + "' at line " +
                                   std::to_string(line_no));
        }
    }
    return doc;
}

} // namespace wattprint
