#include "llmloop/toolchain.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <cstring>

namespace llmloop {

namespace {

void drain_fd(int fd, std::string& sink) {
    char buffer[4096];
    for (;;) {
        const ssize_t n = ::read(fd, buffer, sizeof(buffer));
        if (n <= 0) return;
        sink.append(buffer, static_cast<std::size_t>(n));
    }
}

}  // namespace

ExecResult run_command(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                       int timeout_seconds) {
    if (argv.empty()) throw SetupError("run_command: empty argv");

    int out_pipe[2];
    int err_pipe[2];
    if (::pipe(out_pipe) != 0 || ::pipe(err_pipe) != 0)
        throw IoError("run_command: pipe failed: " + std::string(std::strerror(errno)));

    const pid_t pid = ::fork();
    if (pid < 0) throw IoError("run_command: fork failed: " + std::string(std::strerror(errno)));

    if (pid == 0) {
        // Child: own process group so a timeout can kill the whole tree.
        ::setpgid(0, 0);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::dup2(err_pipe[1], STDERR_FILENO);
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        ::close(err_pipe[0]);
        ::close(err_pipe[1]);
        if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) _exit(127);
        std::vector<char*> raw;
        raw.reserve(argv.size() + 1);
        for (const auto& arg : argv) raw.push_back(const_cast<char*>(arg.c_str()));
        raw.push_back(nullptr);
        ::execvp(raw[0], raw.data());
        _exit(127);
    }

    ::setpgid(pid, pid);  // also from the parent to close the race
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);

    ExecResult result;
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::seconds(timeout_seconds);
    struct pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
    bool open[2] = {true, true};

    while (open[0] || open[1]) {
        const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                                   deadline - std::chrono::steady_clock::now())
                                   .count();
        if (remaining <= 0) {
            result.timed_out = true;
            ::kill(-pid, SIGKILL);
            break;
        }
        fds[0].fd = open[0] ? out_pipe[0] : -1;
        fds[1].fd = open[1] ? err_pipe[0] : -1;
        const int rc = ::poll(fds, 2, static_cast<int>(std::min<long long>(remaining, 1000)));
        if (rc < 0) {
            if (errno == EINTR) continue;
            break;
        }
        for (int i = 0; i < 2; ++i) {
            if (!open[i] || fds[i].fd < 0) continue;
            if (fds[i].revents & (POLLIN | POLLHUP)) {
                char buffer[4096];
                const ssize_t n = ::read(fds[i].fd, buffer, sizeof(buffer));
                if (n > 0) {
                    (i == 0 ? result.stdout_text : result.stderr_text)
                        .append(buffer, static_cast<std::size_t>(n));
                } else {
                    open[i] = false;
                }
            } else if (fds[i].revents & (POLLERR | POLLNVAL)) {
                open[i] = false;
            }
        }
    }

    // After a kill the pipes may still hold buffered bytes.
    drain_fd(out_pipe[0], result.stdout_text);
    drain_fd(err_pipe[0], result.stderr_text);
    ::close(out_pipe[0]);
    ::close(err_pipe[0]);

    int status = 0;
    ::waitpid(pid, &status, 0);
    if (result.timed_out) {
        result.exit_code = -1;
    } else if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.exit_code = 128 + WTERMSIG(status);
    }
    return result;
}

bool command_exists(const std::string& name) {
    if (name.empty()) return false;
    if (name.find('/') != std::string::npos)
        return ::access(name.c_str(), X_OK) == 0;
    const char* path_env = std::getenv("PATH");
    if (path_env == nullptr) return false;
    std::string path(path_env);
    std::size_t start = 0;
    while (start <= path.size()) {
        const std::size_t end = path.find(':', start);
        const std::string dir =
            path.substr(start, end == std::string::npos ? std::string::npos : end - start);
        if (!dir.empty()) {
            const std::string candidate = dir + "/" + name;
            if (::access(candidate.c_str(), X_OK) == 0) return true;
        }
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return false;
}

}  // namespace llmloop
