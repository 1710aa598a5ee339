#pragma once

#include <sys/types.h>

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace opevo::sandbox {

using Clock = std::chrono::steady_clock;

/// The worker executable cannot be started. A configuration problem, never
/// attributed to the operator under test.
class WorkerLaunchError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A child process in its own process group, talking line-delimited text
/// over stdin/stdout with stderr captured. Destruction kills the whole group
/// and reaps every member.
class WorkerProcess {
public:
    enum class Io { Ok, Timeout, Closed };

    static WorkerProcess spawn(const std::vector<std::string>& argv, std::size_t stderr_cap = 20000);

    WorkerProcess(WorkerProcess&& other) noexcept;
    WorkerProcess& operator=(WorkerProcess&& other) noexcept;
    WorkerProcess(const WorkerProcess&) = delete;
    WorkerProcess& operator=(const WorkerProcess&) = delete;
    ~WorkerProcess();

    /// Writes `line` plus a newline.
    Io write_line(std::string_view line, Clock::time_point deadline);
    /// Reads the next newline-terminated line (without the newline).
    Io read_line(std::string& line, Clock::time_point deadline);

    /// SIGKILL to the process group, then reap the leader and any group
    /// members reparented to this process. Idempotent.
    void terminate();

    /// Captured stderr, keeping the most recent stderr_cap characters.
    const std::string& stderr_text() const { return stderr_; }
    /// Wait status of the leader once reaped.
    std::optional<int> exit_status() const { return status_; }
    /// Human-readable exit description, e.g. "exited with status 3".
    std::string describe_exit();

    pid_t pid() const { return pid_; }

private:
    WorkerProcess() = default;
    void drain_stderr();
    void close_fds();
    bool try_reap_leader();

    pid_t pid_ = -1;
    int stdin_fd_ = -1;
    int stdout_fd_ = -1;
    int stderr_fd_ = -1;
    std::size_t stderr_cap_ = 20000;
    std::string stdout_buf_;
    std::string stderr_;
    std::optional<int> status_;
    bool terminated_ = false;
};

/// Resolves argv[0] against PATH; throws WorkerLaunchError when no
/// executable is found.
std::string resolve_executable(const std::string& name);

/// Live or zombie processes whose process group is `pgid`.
std::vector<pid_t> processes_in_group(pid_t pgid);
/// Processes whose parent is `parent`.
std::vector<pid_t> child_processes(pid_t parent);

} // namespace opevo::sandbox
