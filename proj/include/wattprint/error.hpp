#pragma once

#include <stdexcept>
#include <string>

namespace wattprint {

/// Failure categories surfaced by the library. The CLI maps these onto
/// exit codes and per-strategy error rows.
enum class Errc {
    parse,
    validation,
    empty_catalog,
    unsupported_strategy,
    unknown_gpu,
    channel_missing,
    sensor_unavailable,
    permission_denied,
    spawn_failed,
    empty_trace,
    ordering,
    version,
    invalid_argument,
    intensity_required,
    not_found,
    degenerate_ground_truth,
    insufficient_data,
    marks_required,
    rapl_required,
    no_measurable_component,
    division,
    io,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) {
    throw Error(code, what);
}

} // namespace wattprint
