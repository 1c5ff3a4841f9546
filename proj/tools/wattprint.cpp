#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <unistd.h>

#include "wattprint/analysis.hpp"
#include "wattprint/error.hpp"
#include "wattprint/estimators.hpp"
#include "wattprint/footprint.hpp"
#include "wattprint/report.hpp"
#include "wattprint/sampler.hpp"
#include "wattprint/trace_io.hpp"

using namespace wattprint;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSensor = 2;
constexpr int kExitSpawn = 127;

struct Options {
    std::string config_file;
    std::string cpu_csv;
    std::string gpu_csv;
    std::string ci_csv;
    std::string ci_fixture;
    std::string ci_date;
    std::string region;
    std::optional<double> pue;
    std::optional<double> ci;
    double scaling_factor = 1.0;
    std::string format = "json-lines";
    std::string output;
    std::vector<std::string> strategies;
    std::string cumulator_component = "auto";
    double bytes_communicated = 0.0;
};

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::map<std::string, std::string> out;
    std::ifstream in(path);
    if (!in) raise(Errc::io, "cannot open config file: " + path);
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            raise(Errc::parse, "config line is not key=value: " + line);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{}
                                          : s.substr(b, e - b + 1);
        };
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

std::string exe_dir() {
    char buf[4096];
    const ssize_t n = ::readlink("/proc/self/exe", buf, sizeof(buf) - 1);
    if (n <= 0) return {};
    buf[n] = '\0';
    std::string path(buf);
    const auto slash = path.rfind('/');
    return slash == std::string::npos ? std::string{} : path.substr(0, slash);
}

std::string default_data_file(const std::string& name) {
    std::vector<std::string> candidates;
    const std::string dir = exe_dir();
    if (!dir.empty()) {
        candidates.push_back(dir + "/data/" + name);
        candidates.push_back(dir + "/../data/" + name);
        candidates.push_back(dir + "/../../data/" + name);
    }
    candidates.push_back("data/" + name);
    for (const auto& c : candidates)
        if (std::ifstream(c).good()) return c;
    return {};
}

/// flags > environment > config file > shipped data files.
void resolve_paths(Options& opts) {
    std::map<std::string, std::string> config;
    if (!opts.config_file.empty()) config = parse_config_file(opts.config_file);

    const auto pick = [&](std::string& slot, const char* env,
                          const char* key, const char* file) {
        if (!slot.empty()) return;
        if (const char* v = std::getenv(env); v && *v) {
            slot = v;
            return;
        }
        if (auto it = config.find(key); it != config.end()) {
            slot = it->second;
            return;
        }
        if (file) slot = default_data_file(file);
    };
    pick(opts.cpu_csv, "WATTPRINT_CPU_TDP_CSV", "cpu_tdp_csv", "cpu_tdp.csv");
    pick(opts.gpu_csv, "WATTPRINT_GPU_TDP_CSV", "gpu_tdp_csv", "gpu_tdp.csv");
    pick(opts.ci_csv, "WATTPRINT_CARBON_INTENSITY_CSV", "carbon_intensity_csv",
         "carbon_intensity.csv");
    pick(opts.ci_fixture, "WATTPRINT_CI_FIXTURE", "ci_fixture", nullptr);

    if (opts.region.empty()) {
        if (auto it = config.find("region"); it != config.end())
            opts.region = it->second;
    }
    if (!opts.pue) {
        if (auto it = config.find("pue"); it != config.end())
            opts.pue = std::strtod(it->second.c_str(), nullptr);
    }
    if (opts.strategies.empty()) {
        if (auto it = config.find("strategy"); it != config.end()) {
            std::stringstream ss(it->second);
            std::string item;
            while (std::getline(ss, item, ','))
                if (!item.empty()) opts.strategies.push_back(item);
        }
    }
}

struct Context {
    TdpCatalog catalog;
    CarbonIntensityTable ci_table;
    std::vector<std::string> warnings;
};

Context load_context(const Options& opts) {
    Context ctx;
    if (!opts.cpu_csv.empty())
        ctx.catalog.load_cpu_csv(opts.cpu_csv);
    else
        ctx.warnings.push_back("no cpu catalog; strategy defaults apply");
    if (!opts.gpu_csv.empty())
        ctx.catalog.load_gpu_csv(opts.gpu_csv);
    else
        ctx.warnings.push_back("no gpu catalog; strategy defaults apply");
    for (const auto& w : ctx.catalog.warnings()) ctx.warnings.push_back(w);

    if (!opts.ci_csv.empty()) ctx.ci_table.load_csv(opts.ci_csv);

    // Fixture-backed real-time provider: a (region, date) query overrides
    // the static table record for that region.
    if (!opts.ci_fixture.empty() && !opts.ci_date.empty() &&
        !opts.region.empty()) {
        FixtureFileProvider provider(opts.ci_fixture);
        ctx.ci_table.insert(provider.get(opts.region, opts.ci_date));
    }
    return ctx;
}

std::vector<Strategy> selected_strategies(const Options& opts,
                                          std::vector<Strategy> fallback) {
    if (opts.strategies.empty()) return fallback;
    std::vector<Strategy> out;
    for (const auto& name : opts.strategies) {
        const auto s = parse_strategy(name);
        if (!s) raise(Errc::invalid_argument, "unknown strategy: " + name);
        out.push_back(*s);
    }
    return out;
}

CumulatorComponent cumulator_component(const Options& opts,
                                       const HardwareSpec& spec) {
    if (opts.cumulator_component == "cpu") return CumulatorComponent::cpu;
    if (opts.cumulator_component == "gpu") return CumulatorComponent::gpu;
    return spec.gpus.count > 0 ? CumulatorComponent::gpu
                               : CumulatorComponent::cpu;
}

void emit(const ReportDocument& doc, const Options& opts) {
    const auto format = parse_report_format(opts.format);
    if (!format)
        raise(Errc::invalid_argument, "unknown format: " + opts.format);
    if (opts.output.empty()) {
        write_report(doc, std::cout, *format);
    } else {
        std::ofstream out(opts.output);
        if (!out) raise(Errc::io, "cannot open output file: " + opts.output);
        write_report(doc, out, *format);
    }
}

ReportDocument build_replay(const TelemetryTrace& trace, const Options& opts,
                            const Context& ctx) {
    ReportDocument doc;
    doc.warnings = ctx.warnings;

    const std::string region =
        !opts.region.empty() ? opts.region : trace.hardware.region_code;
    const auto pue_override =
        opts.pue ? opts.pue : trace.hardware.pue;

    std::vector<EnergyBreakdown> breakdowns;
    const auto run = [&](Strategy s, auto&& fn) {
        try {
            EnergyBreakdown b = fn();
            breakdowns.push_back(b);
            auto report = make_emission_report(b, ctx.ci_table, region,
                                               pue_override, opts.ci);
            if (opts.scaling_factor != 1.0)
                report = scale_runs(report, opts.scaling_factor);
            doc.reports.push_back(std::move(report));
        } catch (const Error& e) {
            doc.errors.push_back({s, errc_name(e.code()), e.what()});
        }
    };

    const double runtime = trace.duration_s();
    for (Strategy s : selected_strategies(
             opts, std::vector<Strategy>(kAllStrategies.begin(),
                                         kAllStrategies.end()))) {
        switch (s) {
        case Strategy::GA:
            run(s, [&] {
                UsageFactors usage;
                try {
                    usage = compute_usage_factors(trace);
                } catch (const Error&) {
                    // no accounting channels: assume full load
                }
                return estimate_green_algorithms(ctx.catalog, trace.hardware,
                                                 runtime, usage);
            });
            break;
        case Strategy::CC:
            run(s, [&] {
                return estimate_codecarbon(ctx.catalog, trace, Mode::process);
            });
            run(s, [&] {
                return estimate_codecarbon(ctx.catalog, trace, Mode::machine);
            });
            break;
        case Strategy::E2:
            run(s, [&] {
                return estimate_eco2ai(ctx.catalog, trace, Mode::process);
            });
            run(s, [&] {
                return estimate_eco2ai(ctx.catalog, trace, Mode::machine);
            });
            break;
        case Strategy::CT:
            run(s, [&] { return estimate_carbontracker(trace); });
            break;
        case Strategy::EIT:
            run(s, [&] { return estimate_eit(trace); });
            break;
        case Strategy::MLCO2:
            run(s, [&] {
                return estimate_mlco2(ctx.catalog, trace.hardware, runtime);
            });
            break;
        case Strategy::CMLTR:
            run(s, [&] {
                return estimate_cumulator(
                    ctx.catalog, trace.hardware, runtime,
                    cumulator_component(opts, trace.hardware),
                    opts.bytes_communicated);
            });
            break;
        }
    }

    if (wattmeter_series(trace)) {
        try {
            doc.comparisons = compare_to_wattmeter(breakdowns, trace);
        } catch (const Error& e) {
            doc.warnings.push_back(std::string("wattmeter comparison: ") +
                                   e.what());
        }
    }
    return doc;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"energy and carbon estimation for compute workloads"};
    app.require_subcommand(1);

    Options opts;
    double pue_flag = -1.0, ci_flag = -1.0;
    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opts.config_file, "key=value config file");
        cmd->add_option("--cpu-tdp-csv", opts.cpu_csv, "CPU TDP catalog");
        cmd->add_option("--gpu-tdp-csv", opts.gpu_csv, "GPU TDP catalog");
        cmd->add_option("--ci-csv", opts.ci_csv, "carbon intensity table");
        cmd->add_option("--ci-fixture", opts.ci_fixture,
                        "region,date,intensity fixture file");
        cmd->add_option("--ci-date", opts.ci_date,
                        "date for fixture-backed intensity lookups");
        cmd->add_option("--region", opts.region, "region code");
        cmd->add_option("--pue", pue_flag, "PUE override (>= 1)");
        cmd->add_option("--ci", ci_flag, "carbon intensity override (g/kWh)");
        cmd->add_option("--scaling-factor", opts.scaling_factor,
                        "multiply results by this run count (>= 1)");
        cmd->add_option("--format", opts.format, "json-lines | csv | human");
        cmd->add_option("--output", opts.output, "output file (default stdout)");
        cmd->add_option("--strategy", opts.strategies,
                        "strategy selection (repeatable)");
        cmd->add_option("--cumulator-component", opts.cumulator_component,
                        "cpu | gpu | auto");
        cmd->add_option("--bytes-communicated", opts.bytes_communicated,
                        "bytes exchanged, for the communication cost model");
    };

    // track
    auto* track = app.add_subcommand("track", "record a child command, then report");
    double interval = -1.0;
    std::string trace_out = "wattprint-trace.jsonl";
    std::string marks_file;
    std::vector<std::string> child_cmd;
    add_common(track);
    track->add_option("--interval", interval, "sampling interval seconds");
    track->add_option("--trace", trace_out, "trace output path");
    track->add_option("--epoch-marks-file", marks_file,
                      "file the child appends one line per epoch to");
    track->add_option("command", child_cmd, "child command (after --)");

    // replay
    auto* replay = app.add_subcommand("replay", "estimate from a recorded trace");
    std::string trace_in;
    add_common(replay);
    replay->add_option("trace", trace_in, "trace file")->required();

    // estimate
    auto* estimate = app.add_subcommand("estimate", "offline calculator from scalar inputs");
    std::string cpu_model = "unknown", gpu_model;
    int sockets = 1, cores_per_socket = 1, logical_cores = 0, gpu_count = 0;
    double cpu_tdp = -1.0, gpu_tdp = -1.0, memory_gb = 0.0, runtime_s = 0.0;
    double cpu_usage = -1.0, gpu_usage = -1.0, memory_requested = -1.0;
    add_common(estimate);
    estimate->add_option("--cpu-model", cpu_model, "CPU model name");
    estimate->add_option("--sockets", sockets, "CPU socket count");
    estimate->add_option("--cores-per-socket", cores_per_socket, "");
    estimate->add_option("--logical-cores", logical_cores, "");
    estimate->add_option("--cpu-tdp", cpu_tdp, "per-chip CPU TDP watts");
    estimate->add_option("--gpu-model", gpu_model, "GPU model name");
    estimate->add_option("--gpus", gpu_count, "GPU count");
    estimate->add_option("--gpu-tdp", gpu_tdp, "per-device GPU TDP watts");
    estimate->add_option("--memory-gb", memory_gb, "memory available (GB)")
        ->required();
    estimate->add_option("--runtime", runtime_s, "runtime seconds")->required();
    estimate->add_option("--cpu-usage", cpu_usage, "CPU usage factor [0,1]");
    estimate->add_option("--gpu-usage", gpu_usage, "GPU usage factor [0,1]");
    estimate->add_option("--memory-requested-gb", memory_requested,
                         "memory requested instead of machine total");

    // compare
    auto* compare = app.add_subcommand(
        "compare", "wattmeter comparison, idle baseline, tracker overhead");
    std::string active_path, idle_path, baseline_path;
    add_common(compare);
    compare->add_option("trace", active_path, "active trace")->required();
    compare->add_option("--idle-trace", idle_path, "idle trace");
    compare->add_option("--baseline-trace", baseline_path,
                        "same run recorded without a tracker");

    // report
    auto* report = app.add_subcommand("report", "re-render a json-lines report");
    std::string report_in;
    add_common(report);
    report->add_option("input", report_in, "json-lines report file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    if (pue_flag >= 0.0) opts.pue = pue_flag;
    if (ci_flag >= 0.0) opts.ci = ci_flag;
    resolve_paths(opts);

    if (app.got_subcommand(report)) {
        std::ifstream in(report_in);
        if (!in) raise(Errc::io, "cannot open report: " + report_in);
        emit(read_report_json_lines(in), opts);
        return kExitOk;
    }

    Context ctx = load_context(opts);

    if (app.got_subcommand(estimate)) {
        HardwareSpec spec;
        spec.cpu.model_name = cpu_model;
        spec.cpu.sockets = sockets;
        spec.cpu.cores_per_socket = cores_per_socket;
        spec.cpu.logical_cores =
            logical_cores > 0 ? logical_cores : sockets * cores_per_socket;
        if (cpu_tdp > 0.0) spec.cpu.tdp_watts = cpu_tdp;
        spec.gpus.model_name = gpu_model;
        spec.gpus.count = gpu_count;
        if (gpu_tdp > 0.0) spec.gpus.tdp_watts = gpu_tdp;
        spec.memory_total_gb = memory_gb;
        spec.pue = opts.pue;
        spec.region_code = opts.region;

        UsageFactors usage;
        if (cpu_usage >= 0.0) usage.cpu_usage = cpu_usage;
        if (gpu_usage >= 0.0) usage.gpu_usage = gpu_usage;
        if (memory_requested >= 0.0) usage.memory_requested_gb = memory_requested;

        ReportDocument doc;
        doc.warnings = ctx.warnings;
        for (Strategy s : selected_strategies(opts, {Strategy::GA})) {
            EnergyBreakdown b;
            switch (s) {
            case Strategy::GA:
                b = estimate_green_algorithms(ctx.catalog, spec, runtime_s,
                                              usage);
                break;
            case Strategy::MLCO2:
                b = estimate_mlco2(ctx.catalog, spec, runtime_s);
                break;
            case Strategy::CMLTR:
                b = estimate_cumulator(ctx.catalog, spec, runtime_s,
                                       cumulator_component(opts, spec),
                                       opts.bytes_communicated);
                break;
            default:
                raise(Errc::unsupported_strategy,
                      std::string(strategy_name(s)) +
                          " needs a telemetry trace; use replay");
            }
            auto rep = make_emission_report(b, ctx.ci_table, opts.region,
                                            opts.pue, opts.ci);
            if (opts.scaling_factor != 1.0)
                rep = scale_runs(rep, opts.scaling_factor);
            doc.reports.push_back(std::move(rep));
        }
        emit(doc, opts);
        return kExitOk;
    }

    if (app.got_subcommand(replay)) {
        const auto trace = load_trace(trace_in);
        emit(build_replay(trace, opts, ctx), opts);
        return kExitOk;
    }

    if (app.got_subcommand(compare)) {
        const auto active = load_trace(active_path);
        ReportDocument doc = build_replay(active, opts, ctx);
        std::vector<EnergyBreakdown> breakdowns;
        for (const auto& r : doc.reports) breakdowns.push_back(r.breakdown);
        doc.comparisons = compare_to_wattmeter(breakdowns, active);
        if (!idle_path.empty())
            doc.idle = idle_baseline(active, load_trace(idle_path));
        if (!baseline_path.empty())
            doc.overhead = overhead_report(active, load_trace(baseline_path));
        emit(doc, opts);
        return kExitOk;
    }

    if (app.got_subcommand(track)) {
        if (child_cmd.empty())
            raise(Errc::invalid_argument, "track needs a child command after --");

        SamplerConfig config;
        const auto strategies = selected_strategies(
            opts, std::vector<Strategy>(kAllStrategies.begin(),
                                        kAllStrategies.end()));
        if (interval > 0.0) {
            config.interval_s = interval;
        } else if (strategies.size() == 1 &&
                   strategy_defaults(strategies[0]).sampling_interval_s) {
            config.interval_s =
                *strategy_defaults(strategies[0]).sampling_interval_s;
        } else {
            config.interval_s = 10.0;
        }
        config.command = child_cmd;
        config.epoch_marks_file = marks_file;

        HardwareSpec spec = detect_hardware(config.paths);
        spec.region_code = opts.region;
        if (opts.pue) spec.pue = opts.pue;

        RecordResult rec = record(config, spec);
        for (const auto& w : rec.warnings)
            std::cerr << "wattprint: warning: " << w << '\n';
        save_trace(rec.trace, trace_out);

        ReportDocument doc = build_replay(rec.trace, opts, ctx);
        for (const auto& w : rec.warnings) doc.warnings.push_back(w);
        emit(doc, opts);
        return rec.child_exit_code;
    }

    return kExitUsage;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const Error& e) {
        std::cerr << "wattprint: error (" << errc_name(e.code())
                  << "): " << e.what() << '\n';
        switch (e.code()) {
        case Errc::sensor_unavailable:
        case Errc::permission_denied:
            return kExitSensor;
        case Errc::spawn_failed:
            return kExitSpawn;
        default:
            return kExitUsage;
        }
    } catch (const std::exception& e) {
        std::cerr << "wattprint: error: " << e.what() << '\n';
        return kExitUsage;
    }
}
