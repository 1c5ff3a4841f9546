#include "wattprint/trace_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wattprint/error.hpp"

namespace wattprint {

namespace {

using nlohmann::json;

json hardware_to_json(const HardwareSpec& hw) {
    json cpu{{"model_name", hw.cpu.model_name},
             {"sockets", hw.cpu.sockets},
             {"cores_per_socket", hw.cpu.cores_per_socket},
             {"logical_cores", hw.cpu.logical_cores},
             {"hyperthreading", hw.cpu.hyperthreading}};
    if (hw.cpu.tdp_watts) cpu["tdp_watts"] = *hw.cpu.tdp_watts;
    json gpus{{"model_name", hw.gpus.model_name},
              {"count", hw.gpus.count},
              {"vendor_supports_power_query", hw.gpus.vendor_supports_power_query}};
    if (hw.gpus.tdp_watts) gpus["tdp_watts"] = *hw.gpus.tdp_watts;
    json out{{"cpu", cpu},
             {"gpus", gpus},
             {"memory_total_gb", hw.memory_total_gb},
             {"region_code", hw.region_code}};
    if (hw.pue) out["pue"] = *hw.pue;
    return out;
}

HardwareSpec hardware_from_json(const json& j) {
    HardwareSpec hw;
    const auto& cpu = j.at("cpu");
    hw.cpu.model_name = cpu.at("model_name").get<std::string>();
    hw.cpu.sockets = cpu.at("sockets").get<int>();
    hw.cpu.cores_per_socket = cpu.at("cores_per_socket").get<int>();
    hw.cpu.logical_cores = cpu.at("logical_cores").get<int>();
    hw.cpu.hyperthreading = cpu.value("hyperthreading", false);
    if (cpu.contains("tdp_watts"))
        hw.cpu.tdp_watts = cpu["tdp_watts"].get<double>();
    const auto& gpus = j.at("gpus");
    hw.gpus.model_name = gpus.at("model_name").get<std::string>();
    hw.gpus.count = gpus.at("count").get<int>();
    hw.gpus.vendor_supports_power_query =
        gpus.value("vendor_supports_power_query", false);
    if (gpus.contains("tdp_watts"))
        hw.gpus.tdp_watts = gpus["tdp_watts"].get<double>();
    hw.memory_total_gb = j.at("memory_total_gb").get<double>();
    if (j.contains("pue")) hw.pue = j["pue"].get<double>();
    hw.region_code = j.value("region_code", std::string{});
    return hw;
}

json sample_to_json(const PowerSample& s) {
    json out{{"t", s.timestamp}};
    if (!s.rapl_package_energy_uj.empty())
        out["rapl_package_uj"] = s.rapl_package_energy_uj;
    if (!s.rapl_dram_energy_uj.empty())
        out["rapl_dram_uj"] = s.rapl_dram_energy_uj;
    if (!s.gpu_power_mw.empty()) out["gpu_mw"] = s.gpu_power_mw;
    if (!s.gpu_utilization.empty()) out["gpu_util"] = s.gpu_utilization;
    if (s.process_cpu_time_s) out["proc_cpu_s"] = *s.process_cpu_time_s;
    if (s.machine_cpu_time_s) out["mach_cpu_s"] = *s.machine_cpu_time_s;
    if (s.process_rss_bytes) out["proc_rss_b"] = *s.process_rss_bytes;
    if (s.machine_memory_used_bytes)
        out["mach_mem_b"] = *s.machine_memory_used_bytes;
    if (s.wattmeter_power_w) out["wm_w"] = *s.wattmeter_power_w;
    return out;
}

PowerSample sample_from_json(const json& j) {
    PowerSample s;
    s.timestamp = j.at("t").get<double>();
    if (j.contains("rapl_package_uj"))
        s.rapl_package_energy_uj = j["rapl_package_uj"].get<std::vector<double>>();
    if (j.contains("rapl_dram_uj"))
        s.rapl_dram_energy_uj = j["rapl_dram_uj"].get<std::vector<double>>();
    if (j.contains("gpu_mw")) s.gpu_power_mw = j["gpu_mw"].get<std::vector<double>>();
    if (j.contains("gpu_util"))
        s.gpu_utilization = j["gpu_util"].get<std::vector<double>>();
    if (j.contains("proc_cpu_s")) s.process_cpu_time_s = j["proc_cpu_s"].get<double>();
    if (j.contains("mach_cpu_s")) s.machine_cpu_time_s = j["mach_cpu_s"].get<double>();
    if (j.contains("proc_rss_b")) s.process_rss_bytes = j["proc_rss_b"].get<double>();
    if (j.contains("mach_mem_b"))
        s.machine_memory_used_bytes = j["mach_mem_b"].get<double>();
    if (j.contains("wm_w")) s.wattmeter_power_w = j["wm_w"].get<double>();
    return s;
}

} // namespace

void save_trace(const TelemetryTrace& trace, std::ostream& out) {
    validate(trace);
    json header{{"schema_version", trace.schema_version},
                {"hardware", hardware_to_json(trace.hardware)},
                {"nominal_interval_s", trace.nominal_interval_s},
                {"rapl_max_energy_range_uj", trace.rapl_max_energy_range_uj}};
    if (!trace.epoch_marks.empty()) header["epoch_marks"] = trace.epoch_marks;
    out << header.dump() << '\n';
    for (const auto& s : trace.samples) out << sample_to_json(s).dump() << '\n';
}

void save_trace(const TelemetryTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(Errc::io, "cannot open trace file for writing: " + path);
    save_trace(trace, out);
    if (!out) raise(Errc::io, "write failed: " + path);
}

TelemetryTrace load_trace(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        raise(Errc::empty_trace, "trace stream is empty");
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        raise(Errc::parse, std::string("bad trace header: ") + e.what());
    }

    TelemetryTrace trace;
    try {
        trace.schema_version = header.at("schema_version").get<int>();
        if (trace.schema_version != 1)
            raise(Errc::version, "unknown trace schema_version " +
                                     std::to_string(trace.schema_version));
        trace.hardware = hardware_from_json(header.at("hardware"));
        trace.nominal_interval_s = header.at("nominal_interval_s").get<double>();
        trace.rapl_max_energy_range_uj =
            header.value("rapl_max_energy_range_uj", kDefaultRaplRangeUj);
        if (header.contains("epoch_marks"))
            trace.epoch_marks = header["epoch_marks"].get<std::vector<double>>();
    } catch (const json::exception& e) {
        raise(Errc::parse, std::string("bad trace header: ") + e.what());
    }

    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            trace.samples.push_back(sample_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            raise(Errc::parse, "bad sample at line " + std::to_string(line_no) +
                                   ": " + e.what());
        }
    }
    if (trace.samples.empty())
        raise(Errc::empty_trace, "trace has no samples");
    validate(trace);
    return trace;
}

TelemetryTrace load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io, "cannot open trace file: " + path);
    return load_trace(in);
}

bool trace_equal(const TelemetryTrace& a, const TelemetryTrace& b) {
    std::ostringstream sa, sb;
    save_trace(a, sa);
    save_trace(b, sb);
    return sa.str() == sb.str();
}

} // namespace wattprint
