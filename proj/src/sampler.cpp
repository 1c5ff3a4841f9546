#include "wattprint/sampler.hpp"

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "wattprint/error.hpp"

namespace fs = std::filesystem;

namespace wattprint {

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch())
        .count();
}

std::optional<std::string> read_first_line(const fs::path& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::string line;
    std::getline(in, line);
    return line;
}

bool readable(const fs::path& path) {
    return ::access(path.c_str(), R_OK) == 0;
}

// One powercap zone we sample: energy_uj file plus its counter range.
struct RaplZone {
    fs::path energy_file;
    double max_range_uj = kDefaultRaplRangeUj;
};

struct RaplLayout {
    std::vector<RaplZone> packages;
    std::vector<RaplZone> dram;
    std::vector<std::string> probed;
    std::vector<std::string> permission_denied;
};

RaplLayout scan_powercap(const std::string& root) {
    RaplLayout layout;
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        layout.probed.push_back(root);
        return layout;
    }
    std::vector<fs::path> zones;
    for (const auto& entry : fs::directory_iterator(root, ec)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("intel-rapl:", 0) == 0) zones.push_back(entry.path());
    }
    std::sort(zones.begin(), zones.end());
    for (const auto& zone : zones) {
        const auto zone_name = read_first_line(zone / "name");
        if (!zone_name) continue;
        const fs::path energy = zone / "energy_uj";
        layout.probed.push_back(energy.string());
        const bool is_package = zone_name->rfind("package", 0) == 0;
        const bool is_dram = *zone_name == "dram";
        if (!is_package && !is_dram) continue;
        if (!readable(energy)) {
            layout.permission_denied.push_back(energy.string());
            continue;
        }
        RaplZone z;
        z.energy_file = energy;
        if (auto range = read_first_line(zone / "max_energy_range_uj"))
            z.max_range_uj = std::strtod(range->c_str(), nullptr);
        (is_package ? layout.packages : layout.dram).push_back(std::move(z));
    }
    return layout;
}

double read_counter(const RaplZone& zone) {
    const auto line = read_first_line(zone.energy_file);
    if (!line) {
        if (errno == EACCES)
            raise(Errc::permission_denied,
                  "permission denied reading energy counter " +
                      zone.energy_file.string());
        raise(Errc::sensor_unavailable,
              "cannot read energy counter " + zone.energy_file.string());
    }
    return std::strtod(line->c_str(), nullptr);
}

struct GpuReading {
    std::vector<double> power_mw;
    std::vector<double> utilization;
};

std::optional<GpuReading> query_gpus(const std::string& nvidia_smi) {
    const std::string cmd =
        nvidia_smi +
        " --query-gpu=power.draw,utilization.gpu"
        " --format=csv,noheader,nounits 2>/dev/null";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) return std::nullopt;
    GpuReading out;
    char buf[256];
    while (std::fgets(buf, sizeof(buf), pipe)) {
        double power_w = 0.0, util_pct = 0.0;
        if (std::sscanf(buf, "%lf , %lf", &power_w, &util_pct) == 2 ||
            std::sscanf(buf, "%lf, %lf", &power_w, &util_pct) == 2) {
            out.power_mw.push_back(power_w * 1000.0);
            out.utilization.push_back(std::clamp(util_pct / 100.0, 0.0, 1.0));
        }
    }
    if (::pclose(pipe) != 0 || out.power_mw.empty()) return std::nullopt;
    return out;
}

// /proc/<pid>/stat fields we need; comm may contain spaces so parsing starts
// after the last ')'.
struct ProcStat {
    int pid = 0;
    int ppid = 0;
    double cpu_s = 0.0;          // utime + stime
    double children_cpu_s = 0.0; // cutime + cstime (reaped children)
    double rss_bytes = 0.0;
};

std::optional<ProcStat> read_proc_stat(const fs::path& stat_file) {
    const auto line = read_first_line(stat_file);
    if (!line) return std::nullopt;
    const auto close = line->rfind(')');
    if (close == std::string::npos) return std::nullopt;
    ProcStat st;
    st.pid = std::atoi(line->c_str());
    std::istringstream rest(line->substr(close + 1));
    std::string state;
    rest >> state >> st.ppid;
    // fields 5..13 after ppid are uninteresting
    unsigned long long skip;
    for (int i = 0; i < 9; ++i) rest >> skip;
    unsigned long long utime = 0, stime = 0, cutime = 0, cstime = 0;
    rest >> utime >> stime >> cutime >> cstime;
    long long priority, nice, threads, itrealvalue;
    unsigned long long starttime, vsize_unused;
    rest >> priority >> nice >> threads >> itrealvalue >> starttime >>
        vsize_unused;
    long long rss_pages = 0;
    rest >> rss_pages;
    if (!rest) return std::nullopt;
    const double tick = static_cast<double>(::sysconf(_SC_CLK_TCK));
    st.cpu_s = (utime + stime) / tick;
    st.children_cpu_s = (cutime + cstime) / tick;
    st.rss_bytes =
        static_cast<double>(rss_pages) * ::sysconf(_SC_PAGESIZE);
    return st;
}

struct ProcessAccount {
    double cpu_s = 0.0;
    double rss_bytes = 0.0;
};

// Sums the process and all live descendants; reaped children are covered by
// the root's cutime/cstime.
std::optional<ProcessAccount> account_process_tree(const std::string& proc_root,
                                                   int root_pid) {
    std::error_code ec;
    std::vector<ProcStat> all;
    for (const auto& entry : fs::directory_iterator(proc_root, ec)) {
        const std::string name = entry.path().filename().string();
        if (name.empty() || !std::isdigit(static_cast<unsigned char>(name[0])))
            continue;
        if (auto st = read_proc_stat(entry.path() / "stat"))
            all.push_back(*st);
    }
    if (ec) return std::nullopt;

    std::optional<ProcStat> root;
    for (const auto& st : all)
        if (st.pid == root_pid) root = st;
    if (!root) return std::nullopt;

    ProcessAccount acc;
    std::vector<int> frontier = {root_pid};
    std::vector<int> tree = {root_pid};
    while (!frontier.empty()) {
        std::vector<int> next;
        for (const auto& st : all)
            if (std::find(frontier.begin(), frontier.end(), st.ppid) !=
                frontier.end())
                next.push_back(st.pid);
        for (int pid : next) tree.push_back(pid);
        frontier = std::move(next);
    }
    for (const auto& st : all)
        if (std::find(tree.begin(), tree.end(), st.pid) != tree.end()) {
            acc.cpu_s += st.cpu_s;
            acc.rss_bytes += st.rss_bytes;
        }
    acc.cpu_s += root->children_cpu_s;
    return acc;
}

std::optional<double> machine_cpu_seconds(const std::string& proc_root) {
    const auto line = read_first_line(fs::path(proc_root) / "stat");
    if (!line || line->rfind("cpu ", 0) != 0) return std::nullopt;
    std::istringstream in(line->substr(4));
    // user nice system idle iowait irq softirq steal; later fields optional
    double user = 0, nice = 0, system = 0, idle = 0;
    if (!(in >> user >> nice >> system >> idle)) return std::nullopt;
    double iowait = 0, irq = 0, softirq = 0, steal = 0;
    in >> iowait >> irq >> softirq >> steal;
    const double tick = static_cast<double>(::sysconf(_SC_CLK_TCK));
    return (user + nice + system + irq + softirq + steal) / tick;
}

std::optional<double> machine_memory_used_bytes(const std::string& proc_root) {
    std::ifstream in(fs::path(proc_root) / "meminfo");
    if (!in) return std::nullopt;
    std::string key;
    double total_kb = -1, available_kb = -1, free_kb = -1;
    double value;
    std::string unit;
    while (in >> key >> value) {
        std::getline(in, unit);
        if (key == "MemTotal:") total_kb = value;
        else if (key == "MemAvailable:") available_kb = value;
        else if (key == "MemFree:") free_kb = value;
    }
    if (total_kb < 0) return std::nullopt;
    const double avail = available_kb >= 0 ? available_kb
                         : free_kb >= 0    ? free_kb
                                           : 0.0;
    return (total_kb - avail) * 1024.0;
}

struct LiveSampler {
    SensorPaths paths;
    std::set<Channel> channels;
    RaplLayout rapl;
    int pid = 0;

    // Last good readings; reused when a source vanishes mid-run (child
    // exited, flaky GPU query) so channel shapes stay consistent.
    GpuReading last_gpu;
    double last_proc_cpu = 0.0;
    double last_proc_rss = 0.0;

    PowerSample take() {
        PowerSample s;
        s.timestamp = now_seconds();
        if (channels.count(Channel::rapl_package))
            for (const auto& z : rapl.packages)
                s.rapl_package_energy_uj.push_back(read_counter(z));
        if (channels.count(Channel::rapl_dram))
            for (const auto& z : rapl.dram)
                s.rapl_dram_energy_uj.push_back(read_counter(z));
        if (channels.count(Channel::gpu)) {
            if (auto gpu = query_gpus(paths.nvidia_smi)) last_gpu = *gpu;
            s.gpu_power_mw = last_gpu.power_mw;
            s.gpu_utilization = last_gpu.utilization;
        }
        if (channels.count(Channel::machine_accounting)) {
            s.machine_cpu_time_s = machine_cpu_seconds(paths.proc_root);
            s.machine_memory_used_bytes =
                machine_memory_used_bytes(paths.proc_root);
        }
        if (channels.count(Channel::process_accounting)) {
            const int target = pid > 0 ? pid : static_cast<int>(::getpid());
            if (auto acc = account_process_tree(paths.proc_root, target)) {
                last_proc_cpu = std::max(last_proc_cpu, acc->cpu_s);
                last_proc_rss = acc->rss_bytes;
            }
            s.process_cpu_time_s = last_proc_cpu;
            s.process_rss_bytes = last_proc_rss;
            if (s.machine_cpu_time_s &&
                *s.process_cpu_time_s > *s.machine_cpu_time_s)
                s.process_cpu_time_s = s.machine_cpu_time_s;
            if (s.machine_memory_used_bytes &&
                *s.process_rss_bytes > *s.machine_memory_used_bytes)
                s.process_rss_bytes = s.machine_memory_used_bytes;
        }
        return s;
    }
};

int spawn_child(const std::vector<std::string>& argv_in) {
    if (argv_in.empty()) raise(Errc::spawn_failed, "empty child command");
    int err_pipe[2];
    if (::pipe2(err_pipe, O_CLOEXEC) != 0)
        raise(Errc::spawn_failed, "pipe failed");
    const pid_t pid = ::fork();
    if (pid < 0) {
        ::close(err_pipe[0]);
        ::close(err_pipe[1]);
        raise(Errc::spawn_failed, "fork failed");
    }
    if (pid == 0) {
        ::close(err_pipe[0]);
        std::vector<char*> argv;
        for (const auto& a : argv_in) argv.push_back(const_cast<char*>(a.c_str()));
        argv.push_back(nullptr);
        ::execvp(argv[0], argv.data());
        const int err = errno;
        (void)!::write(err_pipe[1], &err, sizeof(err));
        ::_exit(127);
    }
    ::close(err_pipe[1]);
    int child_errno = 0;
    const ssize_t n = ::read(err_pipe[0], &child_errno, sizeof(child_errno));
    ::close(err_pipe[0]);
    if (n > 0) {
        ::waitpid(pid, nullptr, 0);
        raise(Errc::spawn_failed, "cannot execute '" + argv_in[0] +
                                      "': " + std::strerror(child_errno));
    }
    return pid;
}

const char* channel_name(Channel c) {
    switch (c) {
    case Channel::rapl_package: return "rapl-package";
    case Channel::rapl_dram: return "rapl-dram";
    case Channel::gpu: return "gpu";
    case Channel::process_accounting: return "process-accounting";
    case Channel::machine_accounting: return "machine-accounting";
    }
    return "?";
}

std::size_t count_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) return 0;
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++n;
    return n;
}

} // namespace

ChannelProbe probe_channels(const SensorPaths& paths) {
    ChannelProbe probe;
    auto rapl = scan_powercap(paths.powercap_root);
    probe.probed_paths = rapl.probed;
    if (!rapl.packages.empty()) {
        probe.available.insert(Channel::rapl_package);
        for (const auto& z : rapl.packages)
            probe.rapl_max_energy_range_uj =
                std::max(probe.rapl_max_energy_range_uj, z.max_range_uj);
    }
    if (!rapl.dram.empty()) probe.available.insert(Channel::rapl_dram);
    for (const auto& p : rapl.permission_denied)
        probe.warnings.push_back("permission denied on energy counter " + p);
    if (rapl.packages.empty() && rapl.dram.empty() &&
        rapl.permission_denied.empty())
        probe.warnings.push_back("no energy counters under " +
                                 paths.powercap_root);

    if (query_gpus(paths.nvidia_smi)) {
        probe.available.insert(Channel::gpu);
    } else {
        probe.warnings.push_back("no GPU power query available via " +
                                 paths.nvidia_smi);
        probe.probed_paths.push_back(paths.nvidia_smi);
    }

    if (machine_cpu_seconds(paths.proc_root)) {
        probe.available.insert(Channel::machine_accounting);
        probe.available.insert(Channel::process_accounting);
    } else {
        probe.warnings.push_back("no process accounting under " +
                                 paths.proc_root);
        probe.probed_paths.push_back(paths.proc_root);
    }
    return probe;
}

PowerSample sample_live(const std::set<Channel>& channels,
                        const SensorPaths& paths, int pid) {
    if (channels.empty())
        raise(Errc::invalid_argument, "no channels requested");
    const auto probe = probe_channels(paths);
    auto rapl = scan_powercap(paths.powercap_root);
    for (Channel c : channels) {
        if (probe.available.count(c)) continue;
        if ((c == Channel::rapl_package || c == Channel::rapl_dram) &&
            !rapl.permission_denied.empty())
            raise(Errc::permission_denied,
                  "permission denied reading energy counter " +
                      rapl.permission_denied.front());
        std::string msg = "requested channel unavailable; probed:";
        for (const auto& p : probe.probed_paths) msg += " " + p;
        raise(Errc::sensor_unavailable, msg);
    }
    LiveSampler sampler;
    sampler.paths = paths;
    sampler.channels = channels;
    sampler.rapl = std::move(rapl);
    sampler.pid = pid;
    return sampler.take();
}

RecordResult record(const SamplerConfig& config, const HardwareSpec& spec) {
    if (config.interval_s <= 0.0)
        raise(Errc::invalid_argument, "interval must be > 0");
    const bool has_child = !config.command.empty();
    if (!has_child) {
        if (!config.duration_s)
            raise(Errc::invalid_argument,
                  "record needs a duration or a child command");
        if (*config.duration_s <= 0.0)
            raise(Errc::empty_trace, "record duration must be > 0");
    }

    RecordResult result;
    const auto probe = probe_channels(config.paths);
    result.warnings = probe.warnings;

    std::set<Channel> channels;
    if (config.channels.empty()) {
        channels = probe.available;
    } else {
        for (Channel c : config.channels) {
            if (probe.available.count(c))
                channels.insert(c);
            else
                result.warnings.push_back(std::string("requested channel '") +
                                          channel_name(c) +
                                          "' unavailable; dropped");
        }
    }

    LiveSampler sampler;
    sampler.paths = config.paths;
    sampler.channels = channels;
    sampler.rapl = scan_powercap(config.paths.powercap_root);

    int child_pid = 0;
    if (has_child) {
        child_pid = spawn_child(config.command);
        sampler.pid = child_pid;
    }

    TelemetryTrace trace;
    trace.hardware = spec;
    trace.nominal_interval_s = config.interval_s;
    trace.rapl_max_energy_range_uj = probe.rapl_max_energy_range_uj;

    const double t0 = now_seconds();
    std::size_t marks_seen =
        config.epoch_marks_file.empty() ? 0 : count_lines(config.epoch_marks_file);

    trace.samples.push_back(sampler.take());
    double next_tick = t0 + config.interval_s;
    const double poll_s = std::min(0.05, config.interval_s / 4.0);

    bool done = false;
    while (!done) {
        std::this_thread::sleep_for(std::chrono::duration<double>(poll_s));
        const double now = now_seconds();

        if (!config.epoch_marks_file.empty()) {
            const std::size_t n = count_lines(config.epoch_marks_file);
            for (std::size_t i = marks_seen; i < n; ++i)
                trace.epoch_marks.push_back(now - t0);
            marks_seen = std::max(marks_seen, n);
        }

        if (has_child) {
            int status = 0;
            const pid_t r = ::waitpid(child_pid, &status, WNOHANG);
            if (r == child_pid) {
                result.child_exit_code = WIFEXITED(status)
                                             ? WEXITSTATUS(status)
                                             : 128 + WTERMSIG(status);
                done = true;
            }
        } else if (now - t0 >= *config.duration_s) {
            done = true;
        }

        if (!done && now >= next_tick) {
            trace.samples.push_back(sampler.take());
            next_tick += config.interval_s;
        }
    }
    // close the trace with a sample at termination
    auto last = sampler.take();
    if (last.timestamp > trace.samples.back().timestamp)
        trace.samples.push_back(std::move(last));

    if (trace.samples.size() < 2)
        raise(Errc::empty_trace, "no samples captured");

    // rebase timestamps and marks to the trace start
    const double base = trace.samples.front().timestamp;
    for (auto& s : trace.samples) s.timestamp -= base;
    std::sort(trace.epoch_marks.begin(), trace.epoch_marks.end());
    for (double& m : trace.epoch_marks)
        m = std::clamp(m, 0.0, trace.samples.back().timestamp);

    validate(trace);
    result.trace = std::move(trace);
    return result;
}

HardwareSpec detect_hardware(const SensorPaths& paths) {
    HardwareSpec spec;
    spec.cpu.model_name = "unknown";
    std::ifstream cpuinfo(fs::path(paths.proc_root) / "cpuinfo");
    int logical = 0;
    int cores_per_socket = 0;
    int siblings = 0;
    std::set<std::string> physical_ids;
    std::string line;
    while (std::getline(cpuinfo, line)) {
        const auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        std::string key = line.substr(0, colon);
        key.erase(key.find_last_not_of(" \t") + 1);
        std::string value = line.substr(colon + 1);
        const auto b = value.find_first_not_of(" \t");
        value = b == std::string::npos ? "" : value.substr(b);
        if (key == "processor") ++logical;
        else if (key == "model name") spec.cpu.model_name = value;
        else if (key == "physical id") physical_ids.insert(value);
        else if (key == "cpu cores") cores_per_socket = std::atoi(value.c_str());
        else if (key == "siblings") siblings = std::atoi(value.c_str());
    }
    spec.cpu.logical_cores = std::max(1, logical);
    spec.cpu.sockets = std::max<int>(1, physical_ids.size());
    spec.cpu.cores_per_socket =
        cores_per_socket > 0
            ? cores_per_socket
            : std::max(1, spec.cpu.logical_cores / spec.cpu.sockets);
    if (spec.cpu.sockets * spec.cpu.cores_per_socket > spec.cpu.logical_cores)
        spec.cpu.cores_per_socket =
            std::max(1, spec.cpu.logical_cores / spec.cpu.sockets);
    spec.cpu.hyperthreading = siblings > cores_per_socket && cores_per_socket > 0;

    std::ifstream meminfo(fs::path(paths.proc_root) / "meminfo");
    while (std::getline(meminfo, line)) {
        if (line.rfind("MemTotal:", 0) == 0) {
            const double kb = std::strtod(line.c_str() + 9, nullptr);
            spec.memory_total_gb = kb * 1024.0 / kBytesPerGb;
            break;
        }
    }
    if (spec.memory_total_gb <= 0.0) spec.memory_total_gb = 1.0;

    const std::string cmd =
        paths.nvidia_smi + " --query-gpu=name --format=csv,noheader 2>/dev/null";
    if (FILE* pipe = ::popen(cmd.c_str(), "r")) {
        char buf[256];
        std::vector<std::string> names;
        while (std::fgets(buf, sizeof(buf), pipe)) {
            std::string name(buf);
            name.erase(name.find_last_not_of(" \r\n") + 1);
            if (!name.empty()) names.push_back(name);
        }
        if (::pclose(pipe) == 0 && !names.empty()) {
            spec.gpus.model_name = names.front();
            spec.gpus.count = static_cast<int>(names.size());
            spec.gpus.vendor_supports_power_query = true;
        }
    }
    return spec;
}

} // namespace wattprint
