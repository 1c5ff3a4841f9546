#pragma once

// Shared test fixtures: an independent straight-line oracle for the scalar
// estimators, closed-form channel integrals for synthetic traces, and seeded
// random generators. Oracle code multiplies the inputs out directly and never
// calls into the library's estimation path.

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "wattprint/estimators.hpp"
#include "wattprint/telemetry.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using namespace wattprint;

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        dir_ = fs::temp_directory_path() /
               ("wattprint-test-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter++));
        fs::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(dir_, ec);
    }
    fs::path path() const { return dir_; }
    std::string file(const std::string& name, const std::string& content) const {
        const fs::path p = dir_ / name;
        fs::create_directories(p.parent_path());
        std::ofstream out(p);
        out << content;
        return p.string();
    }

private:
    fs::path dir_;
};

inline TdpCatalog sample_catalog(const TempDir& tmp) {
    TdpCatalog catalog;
    catalog.load_cpu_csv(tmp.file("cpu.csv",
                                  "model,tdp_watts,cores\n"
                                  "Intel Xeon E5-2698 v4,135,20\n"
                                  "Intel Xeon E5-2609 v4,85,8\n"
                                  "AMD Ryzen 5 2600 Six-Core Processor,65,6\n"));
    catalog.load_gpu_csv(tmp.file("gpu.csv",
                                  "model,tdp_watts\n"
                                  "NVIDIA Tesla V100-SXM2-32GB,250\n"
                                  "NVIDIA TITAN Xp,250\n"
                                  "NVIDIA TITAN V,250\n"));
    return catalog;
}

/// 2-socket 20-core 135 W chips, 8 GPUs at 250 W, 512 GB.
inline HardwareSpec big_node() {
    HardwareSpec spec;
    spec.cpu.model_name = "Intel Xeon E5-2698 v4";
    spec.cpu.sockets = 2;
    spec.cpu.cores_per_socket = 20;
    spec.cpu.logical_cores = 80;
    spec.gpus.model_name = "NVIDIA Tesla V100-SXM2-32GB";
    spec.gpus.count = 8;
    spec.memory_total_gb = 512.0;
    return spec;
}

inline HardwareSpec small_spec(int logical_cores = 16, int gpus = 1,
                               double memory_gb = 64.0) {
    HardwareSpec spec;
    spec.cpu.model_name = "UnknownChip";
    spec.cpu.sockets = 1;
    spec.cpu.cores_per_socket = logical_cores;
    spec.cpu.logical_cores = logical_cores;
    spec.gpus.model_name = "UnknownGPU";
    spec.gpus.count = gpus;
    spec.memory_total_gb = memory_gb;
    return spec;
}

// ---------------------------------------------------------------------------
// Independent scalar oracle (straight-line arithmetic only)

struct ScalarOracleInput {
    int sockets = 1;
    int cores_per_socket = 1;
    double chip_tdp_w = 0.0;   // 0 = unknown model
    int gpu_count = 0;
    double gpu_tdp_w = 0.0;    // 0 = unknown model
    double memory_gb = 0.0;
    double runtime_s = 0.0;
    double cpu_usage = 1.0;
    double gpu_usage = 1.0;
    double bytes = 0.0;
};

struct ScalarOracleResult {
    double cpu_wh = 0.0;
    double gpu_wh = 0.0;
    double mem_wh = 0.0;
    double total_wh = 0.0;
};

inline ScalarOracleResult oracle_green_algorithms(const ScalarOracleInput& in) {
    const double hours = in.runtime_s / 3600.0;
    const double cpu_power =
        in.chip_tdp_w > 0.0 ? in.chip_tdp_w * in.sockets
                            : 12.0 * in.sockets * in.cores_per_socket;
    const double gpu_tdp = in.gpu_tdp_w > 0.0 ? in.gpu_tdp_w : 200.0;
    ScalarOracleResult r;
    r.cpu_wh = cpu_power * in.cpu_usage * hours;
    r.gpu_wh = in.gpu_count > 0 ? in.gpu_count * gpu_tdp * in.gpu_usage * hours
                                : 0.0;
    r.mem_wh = in.memory_gb * 0.3725 * hours;
    r.total_wh = r.cpu_wh + r.gpu_wh + r.mem_wh;
    return r;
}

inline double oracle_mlco2_wh(const ScalarOracleInput& in) {
    return in.gpu_count * in.gpu_tdp_w * in.runtime_s / 3600.0;
}

inline double oracle_cumulator_gpu_wh(const ScalarOracleInput& in) {
    const double tdp = in.gpu_tdp_w > 0.0 ? in.gpu_tdp_w : 250.0;
    return tdp * in.runtime_s / 3600.0 + in.bytes * 6.894e-11 * 1000.0;
}

// ---------------------------------------------------------------------------
// Closed-form channel integrals of a synthetic generator

struct TraceOracle {
    double duration_s = 0.0;
    double rapl_pkg_wh = 0.0;
    double rapl_dram_wh = 0.0;
    double gpu_wh = 0.0;
    double mean_util = 0.0;
    double proc_cpu_s = 0.0;
    double mach_cpu_s = 0.0;
    double mean_proc_rss_gb = 0.0;
    double mean_mach_mem_gb = 0.0;
    double mean_rss_frac = 0.0;
    double wattmeter_wh = 0.0;
};

inline TraceOracle oracle_integrals(const SynthSpec& spec) {
    TraceOracle o;
    const double logical = spec.hardware.cpu.logical_cores;
    for (const auto& seg : spec.segments) o.duration_s += seg.duration_s;
    for (const auto& seg : spec.segments) {
        const auto& lv = seg.levels;
        const double d = seg.duration_s;
        for (double w : lv.package_power_w) o.rapl_pkg_wh += w * d / 3600.0;
        for (double w : lv.dram_power_w) o.rapl_dram_wh += w * d / 3600.0;
        for (double w : lv.gpu_power_w) o.gpu_wh += w * d / 3600.0;
        if (!lv.gpu_utilization.empty()) {
            double u = 0.0;
            for (double x : lv.gpu_utilization) u += x;
            o.mean_util += u / lv.gpu_utilization.size() * d / o.duration_s;
        }
        o.proc_cpu_s += lv.process_cpu_load.value_or(0.0) * logical * d;
        o.mach_cpu_s += lv.machine_cpu_load.value_or(0.0) * logical * d;
        o.mean_proc_rss_gb += lv.process_rss_gb.value_or(0.0) * d / o.duration_s;
        o.mean_mach_mem_gb +=
            lv.machine_memory_gb.value_or(0.0) * d / o.duration_s;
        if (lv.machine_memory_gb && *lv.machine_memory_gb > 0.0)
            o.mean_rss_frac += lv.process_rss_gb.value_or(0.0) /
                               *lv.machine_memory_gb * d / o.duration_s;
        o.wattmeter_wh += lv.wattmeter_w.value_or(0.0) * d / 3600.0;
    }
    return o;
}

// Expected trace-driven estimator components, computed from the oracle
// integrals with the strategies' published formulas spelled out inline.
struct ExpectedComponents {
    double cc_cpu, cc_gpu, cc_mem_machine, cc_mem_process;
    double e2_cpu_process, e2_cpu_machine, e2_gpu, e2_mem_machine,
        e2_mem_process;
    double ct_total;
    double eit_cpu, eit_gpu, eit_mem;
};

inline ExpectedComponents oracle_estimates(const SynthSpec& spec,
                                           double e2_machine_tdp_w) {
    const TraceOracle o = oracle_integrals(spec);
    const double hours = o.duration_s / 3600.0;
    const double logical = spec.hardware.cpu.logical_cores;
    ExpectedComponents e{};
    e.cc_cpu = o.rapl_pkg_wh;
    e.cc_gpu = o.gpu_wh;
    e.cc_mem_machine = 0.375 * o.mean_mach_mem_gb * hours;
    e.cc_mem_process = 0.375 * o.mean_proc_rss_gb * hours;
    const double proc_frac = o.proc_cpu_s / (o.duration_s * logical);
    const double mach_frac = o.mach_cpu_s / (o.duration_s * logical);
    e.e2_cpu_process = e2_machine_tdp_w * proc_frac * hours;
    e.e2_cpu_machine = e2_machine_tdp_w * mach_frac * hours;
    e.e2_gpu = o.gpu_wh;
    e.e2_mem_machine = e.cc_mem_machine;
    e.e2_mem_process = e.cc_mem_process;
    e.ct_total = o.rapl_pkg_wh + o.rapl_dram_wh + o.gpu_wh;
    e.eit_cpu = o.rapl_pkg_wh * proc_frac;
    e.eit_gpu = o.gpu_wh * o.mean_util;
    e.eit_mem = o.rapl_dram_wh * o.mean_rss_frac;
    return e;
}

// ---------------------------------------------------------------------------
// Random generators (seeded, deterministic)

/// Random piecewise-constant generator with every channel populated and the
/// process levels bounded by the machine levels.
inline SynthSpec random_synth_spec(std::mt19937& rng, int max_segments = 5) {
    std::uniform_int_distribution<int> nseg(1, max_segments);
    std::uniform_real_distribution<double> dur(20.0, 400.0);
    std::uniform_real_distribution<double> power(0.0, 400.0);
    std::uniform_real_distribution<double> frac(0.0, 1.0);
    std::uniform_real_distribution<double> mem(1.0, 128.0);
    std::uniform_real_distribution<double> interval(1.0, 30.0);

    SynthSpec spec;
    spec.hardware = small_spec(16, 2, 256.0);
    spec.hardware.cpu.tdp_watts = 120.0;
    spec.hardware.gpus.tdp_watts = 300.0;
    spec.interval_s = interval(rng);
    const int packages = 1 + (rng() % 2);
    const int devices = 1 + (rng() % 2);
    const int n = nseg(rng);
    for (int i = 0; i < n; ++i) {
        SynthSegment seg;
        seg.duration_s = dur(rng);
        for (int p = 0; p < packages; ++p) {
            seg.levels.package_power_w.push_back(power(rng));
            seg.levels.dram_power_w.push_back(power(rng) / 10.0);
        }
        for (int d = 0; d < devices; ++d) {
            seg.levels.gpu_power_w.push_back(power(rng));
            seg.levels.gpu_utilization.push_back(frac(rng));
        }
        const double mach_load = frac(rng);
        seg.levels.machine_cpu_load = mach_load;
        seg.levels.process_cpu_load = mach_load * frac(rng);
        const double mach_mem = mem(rng);
        seg.levels.machine_memory_gb = mach_mem;
        seg.levels.process_rss_gb = mach_mem * frac(rng);
        seg.levels.wattmeter_w = power(rng);
        spec.segments.push_back(std::move(seg));
    }
    return spec;
}

inline double rel_err(double actual, double expected) {
    const double denom = std::max(std::abs(expected), 1e-30);
    return std::abs(actual - expected) / denom;
}

} // namespace testsupport
