#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wattprint/telemetry.hpp"

namespace wattprint {

enum class Channel {
    rapl_package,
    rapl_dram,
    gpu,
    process_accounting,
    machine_accounting,
};

/// Filesystem / command roots the sensors read from. Tests point these at
/// fixture trees; defaults are the live platform paths.
struct SensorPaths {
    std::string powercap_root = "/sys/class/powercap";
    std::string proc_root = "/proc";
    std::string nvidia_smi = "nvidia-smi";
};

struct ChannelProbe {
    std::set<Channel> available;
    std::vector<std::string> warnings; // e.g. permission-denied zones
    std::vector<std::string> probed_paths;
    double rapl_max_energy_range_uj = kDefaultRaplRangeUj;
};

ChannelProbe probe_channels(const SensorPaths& paths = {});

/// Reads one sample of the requested channels. Channels listed but not
/// obtainable raise: Errc::permission_denied when energy counters exist but
/// are unreadable, Errc::sensor_unavailable (listing probed paths) when
/// nothing backs the request. `pid` = 0 samples the calling process.
PowerSample sample_live(const std::set<Channel>& channels,
                        const SensorPaths& paths = {}, int pid = 0);

struct SamplerConfig {
    double interval_s = 10.0;
    std::set<Channel> channels; // empty = everything available
    std::optional<double> duration_s;
    std::vector<std::string> command; // child argv; empty = fixed duration
    std::string epoch_marks_file;     // lines appended by the child mark epochs
    SensorPaths paths;
};

struct RecordResult {
    TelemetryTrace trace;
    int child_exit_code = 0; // 0 when no child was run
    std::vector<std::string> warnings;
};

/// Samples at the configured interval until the duration elapses or the
/// tracked child exits (final sample taken at termination). Process channels
/// cover the child and its descendants. Throws Errc::spawn_failed /
/// Errc::empty_trace.
RecordResult record(const SamplerConfig& config, const HardwareSpec& spec);

/// Best-effort machine description from the platform (CPU model/topology from
/// proc, memory total, GPU inventory via the vendor query).
HardwareSpec detect_hardware(const SensorPaths& paths = {});

} // namespace wattprint
