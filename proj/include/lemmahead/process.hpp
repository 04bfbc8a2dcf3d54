#pragma once

#include <sys/types.h>
#include <sys/wait.h>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <string>

#include "lemmahead/errors.hpp"

namespace lemmahead {

struct ProcessResult {
    int exit_code = -1;
    bool timed_out = false;
    bool spawn_failed = false;
    std::string out;  // stdout and stderr interleaved per stream
    std::string err;
    long elapsed_ms = 0;
};

// Runs `command` through /bin/sh -c with a wall-clock limit. The child is
// killed (whole process group) when the limit expires; partial output is kept.
inline ProcessResult run_process(const std::string& command, double timeout_s) {
    ProcessResult res;
    int out_pipe[2], err_pipe[2];
    if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0)
        throw ProcessError("pipe() failed: " + std::string(std::strerror(errno)));

    auto start = std::chrono::steady_clock::now();
    pid_t pid = fork();
    if (pid < 0) throw ProcessError("fork() failed: " + std::string(std::strerror(errno)));
    if (pid == 0) {
        setpgid(0, 0);
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(err_pipe[1], STDERR_FILENO);
        close(out_pipe[0]); close(out_pipe[1]);
        close(err_pipe[0]); close(err_pipe[1]);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(out_pipe[1]);
    close(err_pipe[1]);
    fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
    fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

    auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                std::chrono::duration<double>(timeout_s));
    bool open_out = true, open_err = true;
    char buf[4096];
    while (open_out || open_err) {
        if (std::chrono::steady_clock::now() >= deadline) {
            res.timed_out = true;
            kill(-pid, SIGKILL);
            break;
        }
        struct pollfd fds[2];
        nfds_t n = 0;
        if (open_out) fds[n++] = {out_pipe[0], POLLIN, 0};
        if (open_err) fds[n++] = {err_pipe[0], POLLIN, 0};
        int rv = poll(fds, n, 50);
        if (rv < 0 && errno != EINTR) break;
        for (nfds_t i = 0; i < n; ++i) {
            if (!(fds[i].revents & (POLLIN | POLLHUP))) continue;
            ssize_t got = read(fds[i].fd, buf, sizeof buf);
            if (got > 0) {
                (fds[i].fd == out_pipe[0] ? res.out : res.err).append(buf, static_cast<size_t>(got));
            } else if (got == 0 || (got < 0 && errno != EAGAIN && errno != EINTR)) {
                if (fds[i].fd == out_pipe[0]) open_out = false; else open_err = false;
            }
        }
    }
    // Drain whatever arrived before a kill.
    for (int fd : {out_pipe[0], err_pipe[0]}) {
        ssize_t got;
        while ((got = read(fd, buf, sizeof buf)) > 0)
            (fd == out_pipe[0] ? res.out : res.err).append(buf, static_cast<size_t>(got));
    }
    close(out_pipe[0]);
    close(err_pipe[0]);

    int status = 0;
    waitpid(pid, &status, 0);
    if (WIFEXITED(status)) {
        res.exit_code = WEXITSTATUS(status);
        if (res.exit_code == 127 && res.out.empty()) res.spawn_failed = true;
    } else {
        res.exit_code = -1;
    }
    res.elapsed_ms = static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                           std::chrono::steady_clock::now() - start)
                                           .count());
    return res;
}

}  // namespace lemmahead
