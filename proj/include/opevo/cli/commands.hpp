#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace opevo::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitConfig = 2, kExitBackend = 3, kExitAborted = 4 };

/// Mean metric per instance (rows) and method (columns), with the best
/// method of each row flagged.
struct MetricTable {
    std::string metric_name;
    bool lower_is_better = true;
    std::vector<std::string> methods;
    std::vector<std::string> instances;
    std::vector<std::vector<double>> values;  // [instance][method]

    /// Column index of the best method per row (first on ties).
    std::vector<std::size_t> best() const;
    std::string to_csv() const;
    std::string to_text() const;
};

/// Entry point shared by the executable and the tests. args excludes the
/// program name. Errors print one line "error: <kind>: <reason>" to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace opevo::cli
