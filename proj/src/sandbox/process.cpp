#include "opevo/sandbox/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/prctl.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace opevo::sandbox {

namespace fs = std::filesystem;

namespace {

int remaining_ms(Clock::time_point deadline) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0) return 0;
    return static_cast<int>(std::min<long long>(left, 1000 * 60 * 60));
}

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

void close_fd(int& fd) {
    if (fd >= 0) ::close(fd);
    fd = -1;
}

// Orphaned grandchildren of a killed worker are reparented here instead of
// to init, so they can be reaped and counted.
void become_subreaper() {
    static std::once_flag once;
    std::call_once(once, [] { ::prctl(PR_SET_CHILD_SUBREAPER, 1, 0, 0, 0); });
}

struct ProcStat {
    pid_t pid;
    pid_t ppid;
    pid_t pgrp;
};

std::vector<ProcStat> scan_proc() {
    std::vector<ProcStat> out;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator("/proc", ec)) {
        const std::string name = entry.path().filename().string();
        if (name.empty() || name.find_first_not_of("0123456789") != std::string::npos) continue;
        std::ifstream in(entry.path() / "stat");
        std::string content;
        if (!std::getline(in, content)) continue;
        // comm may contain spaces or parentheses; fields resume after the last ')'.
        auto close = content.rfind(')');
        if (close == std::string::npos) continue;
        std::istringstream rest(content.substr(close + 1));
        char state;
        long ppid = 0, pgrp = 0;
        if (!(rest >> state >> ppid >> pgrp)) continue;
        out.push_back({static_cast<pid_t>(std::stol(name)), static_cast<pid_t>(ppid), static_cast<pid_t>(pgrp)});
    }
    return out;
}

} // namespace

std::string resolve_executable(const std::string& name) {
    if (name.empty()) throw WorkerLaunchError("worker command is empty");
    if (name.find('/') != std::string::npos) {
        if (::access(name.c_str(), X_OK) == 0 && !fs::is_directory(name)) return name;
        throw WorkerLaunchError("worker executable not found or not executable: " + name);
    }
    const char* path = std::getenv("PATH");
    std::istringstream dirs(path ? path : "/usr/local/bin:/usr/bin:/bin");
    std::string dir;
    while (std::getline(dirs, dir, ':')) {
        if (dir.empty()) continue;
        fs::path candidate = fs::path(dir) / name;
        if (::access(candidate.c_str(), X_OK) == 0 && !fs::is_directory(candidate)) return candidate.string();
    }
    throw WorkerLaunchError("worker executable not found on PATH: " + name);
}

std::vector<pid_t> processes_in_group(pid_t pgid) {
    std::vector<pid_t> out;
    for (const auto& p : scan_proc())
        if (p.pgrp == pgid) out.push_back(p.pid);
    return out;
}

std::vector<pid_t> child_processes(pid_t parent) {
    std::vector<pid_t> out;
    for (const auto& p : scan_proc())
        if (p.ppid == parent) out.push_back(p.pid);
    return out;
}

WorkerProcess WorkerProcess::spawn(const std::vector<std::string>& argv, std::size_t stderr_cap) {
    if (argv.empty()) throw WorkerLaunchError("worker command is empty");
    const std::string exe = resolve_executable(argv[0]);
    become_subreaper();

    std::vector<std::string> args = argv;
    std::vector<char*> cargs;
    for (auto& a : args) cargs.push_back(a.data());
    cargs.push_back(nullptr);

    int in_sv[2], out_p[2], err_p[2], exec_p[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, in_sv) != 0)
        throw WorkerLaunchError(std::string("socketpair: ") + std::strerror(errno));
    if (::pipe2(out_p, O_CLOEXEC) != 0 || ::pipe2(err_p, O_CLOEXEC) != 0 || ::pipe2(exec_p, O_CLOEXEC) != 0)
        throw WorkerLaunchError(std::string("pipe2: ") + std::strerror(errno));

    const pid_t pid = ::fork();
    if (pid < 0) throw WorkerLaunchError(std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
        // Child: only async-signal-safe calls until exec.
        ::setpgid(0, 0);
        ::dup2(in_sv[1], STDIN_FILENO);
        ::dup2(out_p[1], STDOUT_FILENO);
        ::dup2(err_p[1], STDERR_FILENO);
        ::signal(SIGPIPE, SIG_DFL);
        sigset_t none;
        sigemptyset(&none);
        ::sigprocmask(SIG_SETMASK, &none, nullptr);
        ::execv(exe.c_str(), cargs.data());
        int err = errno;
        [[maybe_unused]] auto n = ::write(exec_p[1], &err, sizeof err);
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    ::close(in_sv[1]);
    ::close(out_p[1]);
    ::close(err_p[1]);
    ::close(exec_p[1]);

    WorkerProcess w;
    w.pid_ = pid;
    w.stdin_fd_ = in_sv[0];
    w.stdout_fd_ = out_p[0];
    w.stderr_fd_ = err_p[0];
    w.stderr_cap_ = stderr_cap;

    int child_errno = 0;
    ssize_t n;
    do {
        n = ::read(exec_p[0], &child_errno, sizeof child_errno);
    } while (n < 0 && errno == EINTR);
    ::close(exec_p[0]);
    if (n == sizeof child_errno) {
        w.terminate();
        throw WorkerLaunchError("cannot execute worker " + exe + ": " + std::strerror(child_errno));
    }
    set_nonblocking(w.stdin_fd_);
    set_nonblocking(w.stdout_fd_);
    set_nonblocking(w.stderr_fd_);
    return w;
}

WorkerProcess::WorkerProcess(WorkerProcess&& o) noexcept { *this = std::move(o); }

WorkerProcess& WorkerProcess::operator=(WorkerProcess&& o) noexcept {
    if (this != &o) {
        terminate();
        pid_ = std::exchange(o.pid_, -1);
        stdin_fd_ = std::exchange(o.stdin_fd_, -1);
        stdout_fd_ = std::exchange(o.stdout_fd_, -1);
        stderr_fd_ = std::exchange(o.stderr_fd_, -1);
        stderr_cap_ = o.stderr_cap_;
        stdout_buf_ = std::move(o.stdout_buf_);
        stderr_ = std::move(o.stderr_);
        status_ = o.status_;
        terminated_ = std::exchange(o.terminated_, true);
    }
    return *this;
}

WorkerProcess::~WorkerProcess() { terminate(); }

void WorkerProcess::drain_stderr() {
    if (stderr_fd_ < 0) return;
    char buf[4096];
    for (;;) {
        ssize_t n = ::read(stderr_fd_, buf, sizeof buf);
        if (n > 0) {
            stderr_.append(buf, static_cast<std::size_t>(n));
            if (stderr_.size() > stderr_cap_) stderr_.erase(0, stderr_.size() - stderr_cap_);
            continue;
        }
        if (n == 0) close_fd(stderr_fd_);
        return;  // EAGAIN or error
    }
}

WorkerProcess::Io WorkerProcess::write_line(std::string_view line, Clock::time_point deadline) {
    if (stdin_fd_ < 0) return Io::Closed;
    std::string data(line);
    data += '\n';
    std::size_t sent = 0;
    while (sent < data.size()) {
        ssize_t n = ::send(stdin_fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL | MSG_DONTWAIT);
        if (n > 0) {
            sent += static_cast<std::size_t>(n);
            continue;
        }
        if (n < 0 && errno == EINTR) continue;
        if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK) return Io::Closed;
        int wait = remaining_ms(deadline);
        if (wait == 0) return Io::Timeout;
        pollfd fds[2] = {{stdin_fd_, POLLOUT, 0}, {stderr_fd_, POLLIN, 0}};
        ::poll(fds, stderr_fd_ >= 0 ? 2 : 1, wait);
        if (fds[1].revents) drain_stderr();
        if (fds[0].revents & (POLLERR | POLLHUP)) return Io::Closed;
    }
    return Io::Ok;
}

WorkerProcess::Io WorkerProcess::read_line(std::string& line, Clock::time_point deadline) {
    for (;;) {
        auto nl = stdout_buf_.find('\n');
        if (nl != std::string::npos) {
            line.assign(stdout_buf_, 0, nl);
            stdout_buf_.erase(0, nl + 1);
            return Io::Ok;
        }
        if (stdout_fd_ < 0) return Io::Closed;
        int wait = remaining_ms(deadline);
        pollfd fds[2] = {{stdout_fd_, POLLIN, 0}, {stderr_fd_, POLLIN, 0}};
        int rc = ::poll(fds, stderr_fd_ >= 0 ? 2 : 1, wait);
        if (rc < 0 && errno == EINTR) continue;
        if (stderr_fd_ >= 0 && fds[1].revents) drain_stderr();
        if (fds[0].revents) {
            char buf[65536];
            ssize_t n = ::read(stdout_fd_, buf, sizeof buf);
            if (n > 0) {
                stdout_buf_.append(buf, static_cast<std::size_t>(n));
                continue;
            }
            if (n == 0) {
                close_fd(stdout_fd_);
                drain_stderr();
                return Io::Closed;
            }
            if (errno != EAGAIN && errno != EINTR) return Io::Closed;
        }
        if (rc == 0 && remaining_ms(deadline) == 0) return Io::Timeout;
    }
}

bool WorkerProcess::try_reap_leader() {
    if (status_) return true;
    int st = 0;
    pid_t r = ::waitpid(pid_, &st, WNOHANG);
    if (r == pid_) {
        status_ = st;
        return true;
    }
    return false;
}

std::string WorkerProcess::describe_exit() {
    try_reap_leader();
    if (!status_) return "still running";
    if (WIFEXITED(*status_)) return "exited with status " + std::to_string(WEXITSTATUS(*status_));
    if (WIFSIGNALED(*status_)) return std::string("killed by signal ") + ::strsignal(WTERMSIG(*status_));
    return "terminated";
}

void WorkerProcess::close_fds() {
    close_fd(stdin_fd_);
    close_fd(stdout_fd_);
    close_fd(stderr_fd_);
}

void WorkerProcess::terminate() {
    if (terminated_ || pid_ <= 0) {
        terminated_ = true;
        return;
    }
    terminated_ = true;
    // The unreaped leader keeps the group id reserved, so this cannot hit
    // an unrelated group.
    ::kill(-pid_, SIGKILL);
    if (!status_) {
        int st = 0;
        while (::waitpid(pid_, &st, 0) < 0 && errno == EINTR) {
        }
        status_ = st;
    }
    drain_stderr();
    close_fds();
    const auto give_up = Clock::now() + std::chrono::seconds(5);
    for (;;) {
        int st;
        while (::waitpid(-pid_, &st, WNOHANG) > 0) {
        }
        if (processes_in_group(pid_).empty() || Clock::now() > give_up) break;
        ::kill(-pid_, SIGKILL);
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
}

} // namespace opevo::sandbox
