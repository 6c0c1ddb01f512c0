#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace sonine::cli {

inline constexpr const char* kVersion = "0.1.0";

// Fixed numeric formatting for every CSV cell the driver writes: 15
// significant digits, locale-independent, so identical configurations yield
// byte-identical numeric fields regardless of threading.
std::string csv_number(double v);

// FNV-1a 64-bit content hash used by the run manifest, as a 16-digit hex string.
std::uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

// Applies one `--set dotted.path=value` override onto the configuration.
// The value text is parsed as JSON when possible (numbers, arrays, booleans)
// and taken as a plain string otherwise; intermediate objects are created on
// demand.  Throws std::invalid_argument on a malformed assignment.
void apply_override(nlohmann::json& config, const std::string& assignment);

struct RunOutcome {
    int exit_code = 0;    // 0 = all checks pass, 1 = numerical failure, 2 = config violation
    std::string message;  // one-line human-readable summary or error
};

// Executes the pipeline selected by config["command"], writing its artifact
// files and a `run.json` manifest (config echo, version, wall clock, verdicts,
// output hashes) into the output directory.  `out_dir_override`, when
// nonempty, replaces config["output"]["dir"]; `threads` > 0 pins the OpenMP
// thread count.  Never throws: every failure is mapped onto the exit code and
// message, and configuration errors carry the path to the offending field.
RunOutcome run(nlohmann::json config, const std::string& out_dir_override, int threads);

}  // namespace sonine::cli
