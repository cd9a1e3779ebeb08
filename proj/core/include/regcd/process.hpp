#pragma once

#include <string>
#include <vector>

namespace regcd {

struct ProcessResult {
    int exit_code = -1;
    std::string output; // interleaved stdout + stderr
};

/// Run argv[0] with the given argument vector, capturing combined
/// stdout/stderr. Throws PluginError if the program cannot be spawned or
/// terminates on a signal.
ProcessResult run_process(const std::vector<std::string>& argv);

/// Create a unique scratch directory (under TMPDIR or /tmp) and return its
/// path. The caller owns cleanup.
std::string make_temp_dir(const std::string& prefix);

} // namespace regcd
