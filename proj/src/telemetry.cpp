#include "wattprint/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wattprint/error.hpp"

namespace wattprint {

double TelemetryTrace::duration_s() const {
    if (samples.size() < 2) return 0.0;
    return samples.back().timestamp - samples.front().timestamp;
}

namespace {

void check_consistent_arity(const TelemetryTrace& t) {
    const auto& first = t.samples.front();
    for (std::size_t i = 1; i < t.samples.size(); ++i) {
        const auto& s = t.samples[i];
        const auto at = [&](const char* ch) {
            raise(Errc::validation, std::string("sample ") +
                                        std::to_string(i) + ": channel '" +
                                        ch + "' changes shape mid-trace");
        };
        if (s.rapl_package_energy_uj.size() != first.rapl_package_energy_uj.size())
            at("rapl_package_energy_uj");
        if (s.rapl_dram_energy_uj.size() != first.rapl_dram_energy_uj.size())
            at("rapl_dram_energy_uj");
        if (s.gpu_power_mw.size() != first.gpu_power_mw.size())
            at("gpu_power_mw");
        if (s.gpu_utilization.size() != first.gpu_utilization.size())
            at("gpu_utilization");
        if (s.process_cpu_time_s.has_value() != first.process_cpu_time_s.has_value())
            at("process_cpu_time_s");
        if (s.machine_cpu_time_s.has_value() != first.machine_cpu_time_s.has_value())
            at("machine_cpu_time_s");
        if (s.process_rss_bytes.has_value() != first.process_rss_bytes.has_value())
            at("process_rss_bytes");
        if (s.machine_memory_used_bytes.has_value() !=
            first.machine_memory_used_bytes.has_value())
            at("machine_memory_used_bytes");
        if (s.wattmeter_power_w.has_value() != first.wattmeter_power_w.has_value())
            at("wattmeter_power_w");
    }
}

} // namespace

void validate(const TelemetryTrace& trace) {
    if (trace.samples.empty())
        raise(Errc::empty_trace, "trace has no samples");
    validate(trace.hardware);
    if (trace.nominal_interval_s <= 0.0)
        raise(Errc::validation, "nominal_interval_s must be > 0");
    if (trace.rapl_max_energy_range_uj <= 0.0)
        raise(Errc::validation, "rapl_max_energy_range_uj must be > 0");

    const double range = trace.rapl_max_energy_range_uj;
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        const auto& s = trace.samples[i];
        const auto bad = [&](const std::string& msg) {
            raise(Errc::validation,
                  "sample " + std::to_string(i) + ": " + msg);
        };
        if (i > 0 && !(s.timestamp > trace.samples[i - 1].timestamp))
            bad("timestamp does not strictly increase");
        for (double v : s.rapl_package_energy_uj)
            if (v < 0.0 || v > range) bad("rapl package counter out of range");
        for (double v : s.rapl_dram_energy_uj)
            if (v < 0.0 || v > range) bad("rapl dram counter out of range");
        for (double v : s.gpu_power_mw)
            if (v < 0.0) bad("negative gpu power");
        for (double v : s.gpu_utilization)
            if (v < 0.0 || v > 1.0) bad("gpu utilization outside [0,1]");
        if (s.process_cpu_time_s && *s.process_cpu_time_s < 0.0)
            bad("negative process cpu time");
        if (s.machine_cpu_time_s && *s.machine_cpu_time_s < 0.0)
            bad("negative machine cpu time");
        if (s.process_cpu_time_s && s.machine_cpu_time_s &&
            *s.process_cpu_time_s > *s.machine_cpu_time_s + 1e-9)
            bad("process cpu time exceeds machine cpu time");
        if (i > 0) {
            const auto& p = trace.samples[i - 1];
            if (s.process_cpu_time_s && p.process_cpu_time_s &&
                *s.process_cpu_time_s < *p.process_cpu_time_s)
                bad("process cpu time decreases");
            if (s.machine_cpu_time_s && p.machine_cpu_time_s &&
                *s.machine_cpu_time_s < *p.machine_cpu_time_s)
                bad("machine cpu time decreases");
        }
        if (s.process_rss_bytes && *s.process_rss_bytes < 0.0)
            bad("negative process rss");
        if (s.machine_memory_used_bytes && *s.machine_memory_used_bytes < 0.0)
            bad("negative machine memory");
        if (s.process_rss_bytes && s.machine_memory_used_bytes &&
            *s.process_rss_bytes > *s.machine_memory_used_bytes + 0.5)
            bad("process rss exceeds machine memory used");
        if (s.wattmeter_power_w && *s.wattmeter_power_w < 0.0)
            bad("negative wattmeter power");
    }
    check_consistent_arity(trace);

    if (!trace.epoch_marks.empty()) {
        if (!std::is_sorted(trace.epoch_marks.begin(), trace.epoch_marks.end()))
            raise(Errc::validation, "epoch marks not sorted");
        if (trace.epoch_marks.front() < trace.samples.front().timestamp ||
            trace.epoch_marks.back() > trace.samples.back().timestamp)
            raise(Errc::validation, "epoch marks outside trace span");
    }
}

double counter_delta(double prev, double curr, double max_range) {
    if (max_range <= 0.0)
        raise(Errc::invalid_argument, "counter range must be > 0");
    if (prev < 0.0 || prev > max_range || curr < 0.0 || curr > max_range)
        raise(Errc::invalid_argument, "counter reading outside [0, range]");
    if (curr >= prev) return curr - prev;
    return curr - prev + max_range;
}

double integrate_power(std::span<const double> timestamps,
                       std::span<const double> watts) {
    if (timestamps.size() != watts.size())
        raise(Errc::invalid_argument, "timestamp/power size mismatch");
    if (timestamps.size() < 2)
        raise(Errc::ordering, "integration needs at least 2 samples");
    double ws = 0.0;
    for (std::size_t i = 0; i + 1 < timestamps.size(); ++i) {
        const double dt = timestamps[i + 1] - timestamps[i];
        if (dt <= 0.0)
            raise(Errc::ordering, "timestamps not strictly increasing at index " +
                                      std::to_string(i + 1));
        ws += watts[i] * dt;
    }
    return ws / 3600.0;
}

double StepSeries::integrate() const {
    if (empty())
        raise(Errc::ordering, "integration needs at least 2 samples");
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < time.size(); ++i)
        acc += value[i] * (time[i + 1] - time[i]);
    return acc;
}

double StepSeries::integrate(double a, double b) const {
    if (empty())
        raise(Errc::ordering, "integration needs at least 2 samples");
    if (a > b || a < start() - 1e-9 || b > end() + 1e-9)
        raise(Errc::invalid_argument, "segment outside series span");
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < time.size(); ++i) {
        const double lo = std::max(a, time[i]);
        const double hi = std::min(b, time[i + 1]);
        if (hi > lo) acc += value[i] * (hi - lo);
    }
    return acc;
}

double StepSeries::mean() const {
    const double span = end() - start();
    if (span <= 0.0)
        raise(Errc::ordering, "mean needs a positive time span");
    return integrate() / span;
}

namespace {

std::vector<double> trace_times(const TelemetryTrace& t) {
    std::vector<double> out;
    out.reserve(t.samples.size());
    for (const auto& s : t.samples) out.push_back(s.timestamp);
    return out;
}

} // namespace

std::optional<StepSeries> wattmeter_series(const TelemetryTrace& t) {
    if (t.samples.empty() || !t.samples.front().wattmeter_power_w)
        return std::nullopt;
    StepSeries out;
    out.time = trace_times(t);
    for (const auto& s : t.samples) out.value.push_back(*s.wattmeter_power_w);
    return out;
}

std::optional<StepSeries> gpu_power_series(const TelemetryTrace& t) {
    if (t.samples.empty() || t.samples.front().gpu_power_mw.empty())
        return std::nullopt;
    StepSeries out;
    out.time = trace_times(t);
    for (const auto& s : t.samples) {
        double w = 0.0;
        for (double mw : s.gpu_power_mw) w += mw / 1000.0;
        out.value.push_back(w);
    }
    return out;
}

std::optional<StepSeries> gpu_utilization_series(const TelemetryTrace& t) {
    if (t.samples.empty() || t.samples.front().gpu_utilization.empty())
        return std::nullopt;
    StepSeries out;
    out.time = trace_times(t);
    for (const auto& s : t.samples) {
        double sum = 0.0;
        for (double u : s.gpu_utilization) sum += u;
        out.value.push_back(sum / static_cast<double>(s.gpu_utilization.size()));
    }
    return out;
}

namespace {

// Interval-average power (W) recovered from per-package cumulative uJ
// counters, wrap-corrected, summed across packages. The last step's value is
// repeated so the series keeps one value per sample (it carries no weight).
std::optional<StepSeries> counter_power_series(
    const TelemetryTrace& t,
    const std::vector<double> PowerSample::*channel) {
    if (t.samples.size() < 2 || (t.samples.front().*channel).empty())
        return std::nullopt;
    StepSeries out;
    out.time = trace_times(t);
    for (std::size_t i = 0; i + 1 < t.samples.size(); ++i) {
        const auto& a = t.samples[i].*channel;
        const auto& b = t.samples[i + 1].*channel;
        double delta_uj = 0.0;
        for (std::size_t p = 0; p < a.size(); ++p)
            delta_uj += counter_delta(a[p], b[p], t.rapl_max_energy_range_uj);
        const double dt = t.samples[i + 1].timestamp - t.samples[i].timestamp;
        out.value.push_back(delta_uj / 1e6 / dt);
    }
    out.value.push_back(out.value.back());
    return out;
}

std::optional<double> counter_energy_wh(
    const TelemetryTrace& t,
    const std::vector<double> PowerSample::*channel) {
    if (t.samples.size() < 2 || (t.samples.front().*channel).empty())
        return std::nullopt;
    double total_uj = 0.0;
    for (std::size_t i = 0; i + 1 < t.samples.size(); ++i) {
        const auto& a = t.samples[i].*channel;
        const auto& b = t.samples[i + 1].*channel;
        for (std::size_t p = 0; p < a.size(); ++p)
            total_uj += counter_delta(a[p], b[p], t.rapl_max_energy_range_uj);
    }
    return total_uj / 3.6e9; // uJ -> Wh
}

std::optional<double> scalar_delta(
    const TelemetryTrace& t, const std::optional<double> PowerSample::*field) {
    if (t.samples.size() < 2 || !(t.samples.front().*field))
        return std::nullopt;
    return *(t.samples.back().*field) - *(t.samples.front().*field);
}

} // namespace

std::optional<StepSeries> rapl_package_power_series(const TelemetryTrace& t) {
    return counter_power_series(t, &PowerSample::rapl_package_energy_uj);
}

std::optional<StepSeries> rapl_dram_power_series(const TelemetryTrace& t) {
    return counter_power_series(t, &PowerSample::rapl_dram_energy_uj);
}

std::optional<double> rapl_package_energy_wh(const TelemetryTrace& t) {
    return counter_energy_wh(t, &PowerSample::rapl_package_energy_uj);
}

std::optional<double> rapl_dram_energy_wh(const TelemetryTrace& t) {
    return counter_energy_wh(t, &PowerSample::rapl_dram_energy_uj);
}

std::optional<double> process_cpu_delta_s(const TelemetryTrace& t) {
    return scalar_delta(t, &PowerSample::process_cpu_time_s);
}

std::optional<double> machine_cpu_delta_s(const TelemetryTrace& t) {
    return scalar_delta(t, &PowerSample::machine_cpu_time_s);
}

std::optional<StepSeries> memory_series(const TelemetryTrace& t, Mode mode) {
    const auto field = mode == Mode::process
                           ? &PowerSample::process_rss_bytes
                           : &PowerSample::machine_memory_used_bytes;
    if (t.samples.empty() || !(t.samples.front().*field)) return std::nullopt;
    StepSeries out;
    out.time = trace_times(t);
    for (const auto& s : t.samples)
        out.value.push_back(*(s.*field) / kBytesPerGb);
    return out;
}

std::optional<StepSeries> rss_fraction_series(const TelemetryTrace& t) {
    if (t.samples.empty() || !t.samples.front().process_rss_bytes ||
        !t.samples.front().machine_memory_used_bytes)
        return std::nullopt;
    StepSeries out;
    out.time = trace_times(t);
    for (const auto& s : t.samples) {
        const double used = *s.machine_memory_used_bytes;
        out.value.push_back(used > 0.0 ? *s.process_rss_bytes / used : 0.0);
    }
    return out;
}

TelemetryTrace synth_trace(const SynthSpec& spec) {
    double total = 0.0;
    for (const auto& seg : spec.segments) {
        if (seg.duration_s < 0.0)
            raise(Errc::validation, "negative segment duration");
        const auto& lv = seg.levels;
        for (double v : lv.package_power_w)
            if (v < 0.0) raise(Errc::validation, "negative package power");
        for (double v : lv.dram_power_w)
            if (v < 0.0) raise(Errc::validation, "negative dram power");
        for (double v : lv.gpu_power_w)
            if (v < 0.0) raise(Errc::validation, "negative gpu power");
        for (double v : lv.gpu_utilization)
            if (v < 0.0 || v > 1.0)
                raise(Errc::validation, "gpu utilization outside [0,1]");
        if (lv.wattmeter_w && *lv.wattmeter_w < 0.0)
            raise(Errc::validation, "negative wattmeter power");
        total += seg.duration_s;
    }
    if (spec.segments.empty() || total <= 0.0)
        raise(Errc::empty_trace, "synthetic trace has zero duration");
    if (spec.interval_s <= 0.0)
        raise(Errc::validation, "interval must be > 0");

    // Sample on every tick and every segment boundary so sample-and-hold
    // integration is exact on each constant piece.
    std::vector<double> times;
    for (double tick = 0.0; tick < total; tick += spec.interval_s)
        times.push_back(tick);
    times.push_back(total);
    double boundary = 0.0;
    for (const auto& seg : spec.segments) {
        boundary += seg.duration_s;
        times.push_back(boundary);
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end(),
                            [](double a, double b) {
                                return std::abs(a - b) < 1e-12;
                            }),
                times.end());

    const auto level_at = [&](double t) -> const SynthLevels& {
        double acc = 0.0;
        for (const auto& seg : spec.segments) {
            acc += seg.duration_s;
            if (t < acc) return seg.levels;
        }
        return spec.segments.back().levels;
    };

    // Closed-form cumulative integrals up to time t.
    const auto integral_to = [&](double t, auto&& level_fn) {
        double acc = 0.0, start = 0.0;
        for (const auto& seg : spec.segments) {
            const double end = start + seg.duration_s;
            const double hi = std::min(t, end);
            if (hi > start) acc += level_fn(seg.levels) * (hi - start);
            start = end;
            if (t <= end) break;
        }
        return acc;
    };

    const double logical = spec.hardware.cpu.logical_cores;
    const double range = spec.rapl_max_energy_range_uj.value_or(0.0);
    const auto wrap = [&](double uj) {
        if (range > 0.0) return std::fmod(uj, range);
        return uj;
    };

    TelemetryTrace trace;
    trace.hardware = spec.hardware;
    trace.nominal_interval_s = spec.interval_s;
    trace.epoch_marks = spec.epoch_marks;
    if (spec.rapl_max_energy_range_uj) {
        trace.rapl_max_energy_range_uj = *spec.rapl_max_energy_range_uj;
    } else {
        // unwrapped counters must stay inside the declared range
        double peak_w = 0.0;
        for (const auto& seg : spec.segments) {
            for (double w : seg.levels.package_power_w)
                peak_w = std::max(peak_w, w);
            for (double w : seg.levels.dram_power_w)
                peak_w = std::max(peak_w, w);
        }
        trace.rapl_max_energy_range_uj = std::max(
            kDefaultRaplRangeUj, 2.0 * peak_w * total * 1e6);
    }

    const auto& first = spec.segments.front().levels;
    for (double t : times) {
        PowerSample s;
        s.timestamp = t;
        const auto& lv = t < total ? level_at(t) : spec.segments.back().levels;
        for (std::size_t p = 0; p < first.package_power_w.size(); ++p)
            s.rapl_package_energy_uj.push_back(wrap(integral_to(t,
                [p](const SynthLevels& l) { return l.package_power_w[p]; }) * 1e6));
        for (std::size_t p = 0; p < first.dram_power_w.size(); ++p)
            s.rapl_dram_energy_uj.push_back(wrap(integral_to(t,
                [p](const SynthLevels& l) { return l.dram_power_w[p]; }) * 1e6));
        for (std::size_t g = 0; g < first.gpu_power_w.size(); ++g)
            s.gpu_power_mw.push_back(lv.gpu_power_w[g] * 1000.0);
        for (std::size_t g = 0; g < first.gpu_utilization.size(); ++g)
            s.gpu_utilization.push_back(lv.gpu_utilization[g]);
        if (first.process_cpu_load)
            s.process_cpu_time_s = integral_to(t, [logical](const SynthLevels& l) {
                return l.process_cpu_load.value_or(0.0) * logical;
            });
        if (first.machine_cpu_load)
            s.machine_cpu_time_s = integral_to(t, [logical](const SynthLevels& l) {
                return l.machine_cpu_load.value_or(0.0) * logical;
            });
        if (first.process_rss_gb)
            s.process_rss_bytes = lv.process_rss_gb.value_or(0.0) * kBytesPerGb;
        if (first.machine_memory_gb)
            s.machine_memory_used_bytes =
                lv.machine_memory_gb.value_or(0.0) * kBytesPerGb;
        if (first.wattmeter_w) s.wattmeter_power_w = lv.wattmeter_w.value_or(0.0);
        trace.samples.push_back(std::move(s));
    }

    validate(trace);
    return trace;
}

} // namespace wattprint
