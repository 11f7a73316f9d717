// Copyright 2026 The bbdiff Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bbdiff/subprocess.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace bbdiff {

namespace {

using Clock = std::chrono::steady_clock;

// Predictor child processes may exit before reading all of their stdin; the
// resulting EPIPE must not take the harness down.
struct SigpipeGuard {
  SigpipeGuard() { std::signal(SIGPIPE, SIG_IGN); }
};

double remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                        deadline - Clock::now())
                        .count();
  return static_cast<double>(left);
}

} // namespace

RunResult run_command(const std::string &command, const std::string &input,
                      double timeout_seconds,
                      const std::map<std::string, std::string> &env) {
  static SigpipeGuard sigpipe_guard;
  RunResult result;

  int in_pipe[2] = {-1, -1};
  int out_pipe[2] = {-1, -1};
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) {
    result.spawn_failed = true;
    result.error = std::strerror(errno);
    return result;
  }

  const pid_t pid = fork();
  if (pid < 0) {
    result.spawn_failed = true;
    result.error = std::strerror(errno);
    return result;
  }

  if (pid == 0) {
    // Child. Own process group so a timeout can kill grandchildren too.
    setpgid(0, 0);
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    for (const auto &[k, v] : env)
      setenv(k.c_str(), v.c_str(), 1);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char *>(nullptr));
    _exit(127);
  }

  close(in_pipe[0]);
  close(out_pipe[1]);

  // Requests are tiny (well under the pipe buffer), so a single blocking
  // write cannot stall.
  const char *data = input.data();
  std::size_t left = input.size();
  while (left > 0) {
    const ssize_t n = write(in_pipe[1], data, left);
    if (n <= 0)
      break; // child is gone or not reading; it will show in the exit status
    data += n;
    left -= static_cast<std::size_t>(n);
  }
  close(in_pipe[1]);

  const auto deadline =
      Clock::now() + std::chrono::microseconds(
                         static_cast<long long>(timeout_seconds * 1e6));
  bool deadline_hit = false;
  char buf[4096];
  while (true) {
    const double ms = remaining_ms(deadline);
    if (ms <= 0) {
      deadline_hit = true;
      break;
    }
    struct pollfd pfd = {out_pipe[0], POLLIN, 0};
    const int pr = poll(&pfd, 1, static_cast<int>(ms) + 1);
    if (pr <= 0) {
      if (pr < 0 && errno == EINTR)
        continue;
      deadline_hit = true;
      break;
    }
    const ssize_t n = read(out_pipe[0], buf, sizeof buf);
    if (n < 0) {
      if (errno == EINTR)
        continue;
      break;
    }
    if (n == 0)
      break; // EOF
    result.stdout_text.append(buf, static_cast<std::size_t>(n));
  }
  close(out_pipe[0]);

  // Reap, still honoring the deadline: a child may close stdout and linger.
  int status = 0;
  bool reaped = false;
  while (!deadline_hit) {
    const pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid || r < 0) {
      reaped = r == pid;
      break;
    }
    if (remaining_ms(deadline) <= 0) {
      deadline_hit = true;
      break;
    }
    usleep(2000);
  }
  if (deadline_hit) {
    result.timed_out = true;
    kill(-pid, SIGKILL); // whole group
    kill(pid, SIGKILL);
    waitpid(pid, &status, 0);
    return result;
  }
  if (!reaped)
    waitpid(pid, &status, 0);

  if (WIFEXITED(status))
    result.exit_code = WEXITSTATUS(status);
  else if (WIFSIGNALED(status))
    result.exit_code = 128 + WTERMSIG(status);
  return result;
}

} // namespace bbdiff
