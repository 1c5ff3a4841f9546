#include "wattprint/analysis.hpp"

#include <algorithm>

#include "wattprint/error.hpp"

namespace wattprint {

namespace {

/// Power channels a trace can expose, as sample-and-hold series in W.
std::map<std::string, StepSeries> power_channels(const TelemetryTrace& t) {
    std::map<std::string, StepSeries> out;
    if (auto s = rapl_package_power_series(t)) out["cpu"] = std::move(*s);
    if (auto s = rapl_dram_power_series(t)) out["dram"] = std::move(*s);
    if (auto s = gpu_power_series(t)) out["gpu"] = std::move(*s);
    if (auto s = wattmeter_series(t)) out["wattmeter"] = std::move(*s);
    return out;
}

StepSeries require_wattmeter(const TelemetryTrace& t, const char* who) {
    auto wm = wattmeter_series(t);
    if (!wm)
        raise(Errc::channel_missing,
              std::string(who) + " requires the wattmeter channel");
    return std::move(*wm);
}

} // namespace

std::vector<EpochProfile> split_by_epochs(const TelemetryTrace& trace) {
    validate(trace);
    if (trace.epoch_marks.size() < 2)
        raise(Errc::marks_required,
              "epoch segmentation needs at least 2 epoch marks");

    const auto channels = power_channels(trace);
    std::vector<EpochProfile> profiles;
    for (std::size_t i = 0; i + 1 < trace.epoch_marks.size(); ++i) {
        EpochProfile p;
        p.epoch_index = static_cast<int>(i);
        const double a = trace.epoch_marks[i];
        const double b = trace.epoch_marks[i + 1];
        p.duration_s = b - a;
        if (p.duration_s <= 0.0)
            raise(Errc::validation, "epoch " + std::to_string(i) +
                                        " has non-positive duration");
        for (const auto& [name, series] : channels) {
            const double wh = series.integrate(a, b) / 3600.0;
            p.energy_wh[name] = wh;
            p.total_wh += wh;
        }
        profiles.push_back(std::move(p));
    }
    return profiles;
}

Extrapolation extrapolate(const std::vector<EpochProfile>& profiles,
                          int total_epochs) {
    if (profiles.empty())
        raise(Errc::insufficient_data,
              "extrapolation needs at least one epoch profile");
    if (total_epochs < static_cast<int>(profiles.size()))
        raise(Errc::invalid_argument,
              "total epochs must be >= number of observed epochs");

    Extrapolation out;
    out.epochs_observed = static_cast<int>(profiles.size());
    out.epochs_total = total_epochs;

    const double k = static_cast<double>(profiles.size());
    double mean_duration = 0.0;
    std::map<std::string, double> mean_energy;
    for (const auto& p : profiles) {
        mean_duration += p.duration_s / k;
        for (const auto& [name, wh] : p.energy_wh) mean_energy[name] += wh / k;
    }
    out.duration_s = mean_duration * total_epochs;
    for (const auto& [name, wh] : mean_energy) {
        out.channel_energy_wh[name] = wh * total_epochs;
        out.energy_wh += wh * total_epochs;
    }
    return out;
}

IdleBaseline idle_baseline_from(double active_energy_wh,
                                double active_duration_s,
                                double idle_energy_wh,
                                double idle_duration_s) {
    if (idle_duration_s <= 0.0)
        raise(Errc::invalid_argument, "idle duration must be > 0");
    if (active_duration_s <= 0.0)
        raise(Errc::invalid_argument, "active duration must be > 0");

    IdleBaseline out;
    out.active_energy_wh = active_energy_wh;
    out.active_duration_s = active_duration_s;
    out.idle_power_w = idle_energy_wh / (idle_duration_s / 3600.0);
    const double idle_share_wh =
        out.idle_power_w * (active_duration_s / 3600.0);
    out.dynamic_energy_wh = active_energy_wh - idle_share_wh;
    out.idle_fraction =
        active_energy_wh > 0.0 ? idle_share_wh / active_energy_wh : 0.0;
    return out;
}

IdleBaseline idle_baseline(const TelemetryTrace& active,
                           const TelemetryTrace& idle) {
    const auto wm_active = require_wattmeter(active, "idle analysis");
    const auto wm_idle = require_wattmeter(idle, "idle analysis");
    return idle_baseline_from(wm_active.integrate() / 3600.0,
                              active.duration_s(),
                              wm_idle.integrate() / 3600.0, idle.duration_s());
}

std::vector<ComparisonRow> compare_to_wattmeter(
    const std::vector<EnergyBreakdown>& breakdowns,
    const TelemetryTrace& trace) {
    const auto wm = require_wattmeter(trace, "wattmeter comparison");
    const double wm_wh = wm.integrate() / 3600.0;
    if (wm_wh <= 0.0)
        raise(Errc::degenerate_ground_truth,
              "wattmeter integral is zero; nothing to compare against");

    std::vector<ComparisonRow> rows;
    rows.reserve(breakdowns.size());
    for (const auto& b : breakdowns) {
        ComparisonRow row;
        row.strategy = b.strategy;
        row.mode = b.mode;
        row.energy_wo_pue_wh = b.total_wh;
        row.wattmeter_wh = wm_wh;
        row.percentage = b.total_wh / wm_wh;
        rows.push_back(row);
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.strategy != b.strategy) return a.strategy < b.strategy;
        return a.mode < b.mode;
    });
    return rows;
}

OverheadReport overhead_from_measurements(double duration_with_s,
                                          double duration_without_s,
                                          double energy_parallel_wh,
                                          double energy_extra_wh) {
    OverheadReport out;
    out.raw_extra_time_s = duration_with_s - duration_without_s;
    out.extra_time_s = std::max(0.0, out.raw_extra_time_s);
    out.extra_energy_wh = out.extra_time_s > 0.0 ? energy_extra_wh : 0.0;
    out.total_energy_wh = energy_parallel_wh + out.extra_energy_wh;
    out.overload_fraction = out.total_energy_wh > 0.0
                                ? out.extra_energy_wh / out.total_energy_wh
                                : 0.0;
    return out;
}

OverheadReport overhead_report(const TelemetryTrace& with_tracker,
                               const TelemetryTrace& without) {
    const auto wm_with = require_wattmeter(with_tracker, "overhead analysis");
    require_wattmeter(without, "overhead analysis");

    const double dur_with = with_tracker.duration_s();
    const double dur_without = without.duration_s();
    const double start = wm_with.start();
    double energy_parallel = 0.0;
    double energy_extra = 0.0;
    if (dur_with > dur_without) {
        energy_parallel =
            wm_with.integrate(start, start + dur_without) / 3600.0;
        energy_extra =
            wm_with.integrate(start + dur_without, wm_with.end()) / 3600.0;
    } else {
        energy_parallel = wm_with.integrate() / 3600.0;
    }
    return overhead_from_measurements(dur_with, dur_without, energy_parallel,
                                      energy_extra);
}

} // namespace wattprint
