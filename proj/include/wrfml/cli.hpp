#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace wrfml::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitExperimentFailure = 1;
inline constexpr int kExitUsage = 2;

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    bool strict = false;
    bool quiet = false;
};

struct ValidateArgs {
    std::filesystem::path met;
    std::filesystem::path nwp;
    std::optional<std::string> target;
    std::vector<std::string> neighbors;
};

/// Each command reports through `out` (suppressed by --quiet) and `err`, and
/// returns an exit code instead of throwing.
int cmd_synth(const std::filesystem::path& config, const std::filesystem::path& out_dir, const GlobalOptions& opts,
              std::ostream& out, std::ostream& err);
int cmd_run(const std::filesystem::path& config, const GlobalOptions& opts, std::ostream& out, std::ostream& err);
int cmd_validate(const ValidateArgs& args, const GlobalOptions& opts, std::ostream& out, std::ostream& err);

/// Full command line entry point (argv[0] is the program name).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace wrfml::cli
