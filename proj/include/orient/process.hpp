#pragma once

#include <csignal>
#include <cstdio>
#include <string>

#include <fcntl.h>
#include <sys/wait.h>
#include <time.h>
#include <unistd.h>

#include "orient/error.hpp"

namespace orient {

struct CommandResult {
    int exit_code = -1;
    bool timed_out = false;
    std::string output;  // combined stdout+stderr, tail-truncated
};

/// Run `command` through /bin/sh with a wall-clock timeout. The child gets its
/// own process group so a timeout kills the whole tree. Output is captured to
/// a pipe and trimmed to the last few KB for diagnostics.
inline CommandResult run_command(const std::string& command, double timeout_sec) {
    int fds[2];
    if (pipe(fds) != 0) throw Error("run_command: pipe failed");

    const pid_t pid = fork();
    if (pid < 0) {
        close(fds[0]);
        close(fds[1]);
        throw Error("run_command: fork failed");
    }
    if (pid == 0) {
        setpgid(0, 0);
        dup2(fds[1], 1);
        dup2(fds[1], 2);
        close(fds[0]);
        close(fds[1]);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }

    close(fds[1]);
    const int flags = fcntl(fds[0], F_GETFL, 0);
    fcntl(fds[0], F_SETFL, flags | O_NONBLOCK);

    CommandResult res;
    constexpr std::size_t kKeep = 8192;
    struct timespec start {};
    clock_gettime(CLOCK_MONOTONIC, &start);
    auto elapsed = [&]() {
        struct timespec now {};
        clock_gettime(CLOCK_MONOTONIC, &now);
        return (now.tv_sec - start.tv_sec) + 1e-9 * (now.tv_nsec - start.tv_nsec);
    };

    char buf[4096];
    int status = 0;
    bool done = false;
    while (!done) {
        for (;;) {
            const ssize_t got = read(fds[0], buf, sizeof buf);
            if (got <= 0) break;
            res.output.append(buf, static_cast<std::size_t>(got));
            if (res.output.size() > 2 * kKeep)
                res.output.erase(0, res.output.size() - kKeep);
        }
        const pid_t r = waitpid(pid, &status, WNOHANG);
        if (r == pid) {
            done = true;
        } else if (elapsed() > timeout_sec) {
            kill(-pid, SIGKILL);
            waitpid(pid, &status, 0);
            res.timed_out = true;
            done = true;
        } else {
            struct timespec nap {0, 5 * 1000 * 1000};
            nanosleep(&nap, nullptr);
        }
    }
    // Drain whatever is left in the pipe.
    for (;;) {
        const ssize_t got = read(fds[0], buf, sizeof buf);
        if (got <= 0) break;
        res.output.append(buf, static_cast<std::size_t>(got));
    }
    close(fds[0]);
    if (res.output.size() > kKeep) res.output.erase(0, res.output.size() - kKeep);

    if (!res.timed_out) {
        if (WIFEXITED(status))
            res.exit_code = WEXITSTATUS(status);
        else if (WIFSIGNALED(status))
            res.exit_code = 128 + WTERMSIG(status);
    }
    return res;
}

}  // namespace orient
