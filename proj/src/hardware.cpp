#include "wattprint/hardware.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "wattprint/error.hpp"

namespace wattprint {

void validate(const CpuSpec& cpu) {
    if (cpu.sockets < 1)
        raise(Errc::validation, "cpu sockets must be >= 1");
    if (cpu.cores_per_socket < 1)
        raise(Errc::validation, "cpu cores_per_socket must be >= 1");
    if (cpu.logical_cores < cpu.sockets * cpu.cores_per_socket)
        raise(Errc::validation,
              "logical_cores must be >= sockets x cores_per_socket");
    if (cpu.tdp_watts && *cpu.tdp_watts <= 0.0)
        raise(Errc::validation, "cpu tdp_watts must be > 0 when known");
}

void validate(const HardwareSpec& spec) {
    validate(spec.cpu);
    if (spec.gpus.count < 0)
        raise(Errc::validation, "gpu count must be >= 0");
    if (spec.gpus.tdp_watts && *spec.gpus.tdp_watts <= 0.0)
        raise(Errc::validation, "gpu tdp_watts must be > 0 when known");
    if (spec.memory_total_gb <= 0.0)
        raise(Errc::validation, "memory_total_gb must be > 0");
    if (spec.pue && *spec.pue < 1.0)
        raise(Errc::validation, "pue must be >= 1.0");
}

std::string normalize_model_name(std::string_view name) {
    std::string s(name);
    for (const char* mark : {"(R)", "(r)", "(TM)", "(tm)", "(Tm)", "(tM)"}) {
        std::size_t pos;
        while ((pos = s.find(mark)) != std::string::npos)
            s.erase(pos, std::string::traits_type::length(mark));
    }
    std::string out;
    out.reserve(s.size());
    bool in_space = true; // trims leading whitespace too
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out += ' ';
        in_space = false;
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

namespace {

struct CsvRow {
    std::vector<std::string> fields;
    int line_no = 0;
};

std::vector<CsvRow> read_csv(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in)
        raise(Errc::io, std::string("cannot open ") + what + " file: " + path);
    std::vector<CsvRow> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string trimmed = line;
        const auto first = trimmed.find_first_not_of(" \t");
        if (first == std::string::npos || trimmed[first] == '#') continue;
        CsvRow row;
        row.line_no = line_no;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            const auto b = field.find_first_not_of(" \t");
            const auto e = field.find_last_not_of(" \t");
            row.fields.push_back(
                b == std::string::npos ? "" : field.substr(b, e - b + 1));
        }
        if (!line.empty() && line.back() == ',') row.fields.push_back("");
        rows.push_back(std::move(row));
    }
    return rows;
}

double parse_positive(const std::string& field, const std::string& path,
                      int line_no, const char* what) {
    double v = 0.0;
    const auto [ptr, ec] =
        std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size() || v <= 0.0)
        raise(Errc::parse, path + ":" + std::to_string(line_no) + ": bad " +
                               what + " value '" + field + "'");
    return v;
}

} // namespace

void TdpCatalog::load_cpu_csv(const std::string& path) {
    auto rows = read_csv(path, "cpu catalog");
    if (rows.empty())
        raise(Errc::empty_catalog, "cpu catalog is empty: " + path);
    std::size_t start = 0;
    if (rows[0].fields.size() >= 2 && rows[0].fields[0] == "model") start = 1;
    if (rows.size() == start)
        raise(Errc::empty_catalog, "cpu catalog has no rows: " + path);
    for (std::size_t i = start; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.fields.size() < 2 || row.fields.size() > 3)
            raise(Errc::parse, path + ":" + std::to_string(row.line_no) +
                                   ": expected model,tdp_watts[,cores]");
        if (row.fields[0].empty())
            raise(Errc::parse, path + ":" + std::to_string(row.line_no) +
                                   ": empty model name");
        CatalogEntry entry;
        entry.model = row.fields[0];
        entry.tdp_watts =
            parse_positive(row.fields[1], path, row.line_no, "tdp_watts");
        if (row.fields.size() == 3 && !row.fields[2].empty())
            entry.cores = static_cast<int>(
                parse_positive(row.fields[2], path, row.line_no, "cores"));
        const std::string key = normalize_model_name(entry.model);
        if (auto it = cpu_.find(key); it != cpu_.end())
            warnings_.push_back("duplicate cpu model '" + entry.model +
                                "' at " + path + ":" +
                                std::to_string(row.line_no) +
                                "; last row wins");
        cpu_[key] = std::move(entry);
    }
}

void TdpCatalog::load_gpu_csv(const std::string& path) {
    auto rows = read_csv(path, "gpu catalog");
    if (rows.empty())
        raise(Errc::empty_catalog, "gpu catalog is empty: " + path);
    std::size_t start = 0;
    if (rows[0].fields.size() >= 2 && rows[0].fields[0] == "model") start = 1;
    if (rows.size() == start)
        raise(Errc::empty_catalog, "gpu catalog has no rows: " + path);
    for (std::size_t i = start; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.fields.size() != 2)
            raise(Errc::parse, path + ":" + std::to_string(row.line_no) +
                                   ": expected model,tdp_watts");
        if (row.fields[0].empty())
            raise(Errc::parse, path + ":" + std::to_string(row.line_no) +
                                   ": empty model name");
        CatalogEntry entry;
        entry.model = row.fields[0];
        entry.tdp_watts =
            parse_positive(row.fields[1], path, row.line_no, "tdp_watts");
        const std::string key = normalize_model_name(entry.model);
        if (auto it = gpu_.find(key); it != gpu_.end())
            warnings_.push_back("duplicate gpu model '" + entry.model +
                                "' at " + path + ":" +
                                std::to_string(row.line_no) +
                                "; last row wins");
        gpu_[key] = std::move(entry);
    }
}

std::optional<CatalogEntry> TdpCatalog::find_cpu(std::string_view model) const {
    const auto it = cpu_.find(normalize_model_name(model));
    if (it == cpu_.end()) return std::nullopt;
    return it->second;
}

std::optional<CatalogEntry> TdpCatalog::find_gpu(std::string_view model) const {
    const auto it = gpu_.find(normalize_model_name(model));
    if (it == gpu_.end()) return std::nullopt;
    return it->second;
}

TdpResolution lookup_cpu_tdp(const TdpCatalog& catalog, const CpuSpec& cpu,
                             Strategy strategy) {
    const auto& defaults = strategy_defaults(strategy);
    if (!defaults.cpu_tdp_w)
        raise(Errc::unsupported_strategy,
              std::string(strategy_name(strategy)) +
                  " has no CPU model path");
    // CMLTR accounts a single package; the others cover the whole machine.
    const int chips = strategy == Strategy::CMLTR ? 1 : cpu.sockets;
    if (auto hit = catalog.find_cpu(cpu.model_name)) {
        return {hit->tdp_watts * chips, Provenance::catalog,
                "catalog '" + hit->model + "'"};
    }
    double watts = 0.0;
    std::string detail;
    if (defaults.cpu_tdp_basis == TdpBasis::per_core) {
        watts = *defaults.cpu_tdp_w * cpu.physical_cores();
        detail = "default " + std::to_string(*defaults.cpu_tdp_w) +
                 " W/core x " + std::to_string(cpu.physical_cores());
    } else {
        watts = *defaults.cpu_tdp_w * chips;
        detail = "default " + std::to_string(*defaults.cpu_tdp_w) + " W/chip";
    }
    return {watts, Provenance::strategy_default, detail};
}

TdpResolution lookup_gpu_tdp(const TdpCatalog& catalog,
                             std::string_view model_name, Strategy strategy) {
    if (auto hit = catalog.find_gpu(model_name)) {
        return {hit->tdp_watts, Provenance::catalog,
                "catalog '" + hit->model + "'"};
    }
    const auto& defaults = strategy_defaults(strategy);
    if (strategy == Strategy::MLCO2 || !defaults.gpu_tdp_w)
        raise(Errc::unknown_gpu, "gpu model '" + std::string(model_name) +
                                     "' not in catalog and " +
                                     std::string(strategy_name(strategy)) +
                                     " has no default GPU TDP");
    return {*defaults.gpu_tdp_w, Provenance::strategy_default,
            "default " + std::to_string(*defaults.gpu_tdp_w) + " W"};
}

TdpResolution resolve_cpu_tdp(const TdpCatalog& catalog, const CpuSpec& cpu,
                              Strategy strategy) {
    if (cpu.tdp_watts) {
        const int chips = strategy == Strategy::CMLTR ? 1 : cpu.sockets;
        return {*cpu.tdp_watts * chips, Provenance::user, "user-provided TDP"};
    }
    return lookup_cpu_tdp(catalog, cpu, strategy);
}

TdpResolution resolve_gpu_tdp(const TdpCatalog& catalog, const GpuSpec& gpus,
                              Strategy strategy) {
    if (gpus.tdp_watts)
        return {*gpus.tdp_watts, Provenance::user, "user-provided TDP"};
    return lookup_gpu_tdp(catalog, gpus.model_name, strategy);
}

} // namespace wattprint
