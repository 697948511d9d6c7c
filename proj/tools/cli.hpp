#pragma once

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace pdm::cli {

/// Exit codes of the command-line tool.
enum Exit : int { ok = 0, invariant_failure = 1, config_error = 2, guard_violation = 3 };

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "PDM_OUTPUT_DIR";

/// Runs the tool on argv-style arguments (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// One verification check; printed as a JSON line.
struct Check {
    std::string suite;
    std::string name;
    bool pass = false;
    nlohmann::json data;
};

/// Suites: geometry, mosaic, morse, theory, bp, wendel, boundary, all.
std::vector<std::string> suite_names();
std::vector<Check> run_suite(const std::string& suite, std::uint64_t seed);

/// Removes "wall_time" members recursively; outputs agree bit for bit
/// after this canonicalization.
nlohmann::json strip_timing(nlohmann::json j);

} // namespace pdm::cli
