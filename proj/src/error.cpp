#include "wattprint/error.hpp"

namespace wattprint {

const char* errc_name(Errc c) {
    switch (c) {
    case Errc::parse: return "parse";
    case Errc::validation: return "validation";
    case Errc::empty_catalog: return "empty-catalog";
    case Errc::unsupported_strategy: return "unsupported-strategy";
    case Errc::unknown_gpu: return "unknown-gpu";
    case Errc::channel_missing: return "channel-missing";
    case Errc::sensor_unavailable: return "sensor-unavailable";
    case Errc::permission_denied: return "permission-denied";
    case Errc::spawn_failed: return "spawn-failed";
    case Errc::empty_trace: return "empty-trace";
    case Errc::ordering: return "ordering";
    case Errc::version: return "version";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::intensity_required: return "intensity-required";
    case Errc::not_found: return "not-found";
    case Errc::degenerate_ground_truth: return "degenerate-ground-truth";
    case Errc::insufficient_data: return "insufficient-data";
    case Errc::marks_required: return "marks-required";
    case Errc::rapl_required: return "rapl-required";
    case Errc::no_measurable_component: return "no-measurable-component";
    case Errc::division: return "division";
    case Errc::io: return "io";
    }
    return "unknown";
}

} // namespace wattprint
