#include "texsan/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

namespace texsan {

namespace {

std::uint64_t file_size_or_zero(const fs::path& p) {
  struct stat st{};
  if (::stat(p.c_str(), &st) != 0) return 0;
  return std::uint64_t(st.st_size);
}

}  // namespace

std::vector<std::string> split_command(std::string_view cmd) {
  std::vector<std::string> out;
  std::string cur;
  bool in_word = false;
  char quote = 0;
  for (std::size_t i = 0; i < cmd.size(); ++i) {
    char c = cmd[i];
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else {
        cur += c;
      }
      continue;
    }
    if (c == '\'' || c == '"') {
      quote = c;
      in_word = true;
      continue;
    }
    if (c == '\\' && i + 1 < cmd.size()) {
      cur += cmd[++i];
      in_word = true;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (in_word) {
        out.push_back(cur);
        cur.clear();
        in_word = false;
      }
      continue;
    }
    cur += c;
    in_word = true;
  }
  if (in_word) out.push_back(cur);
  return out;
}

RunResult run_process(const std::vector<std::string>& argv, const RunOptions& opts) {
  if (argv.empty()) throw Error(Errc::usage_error, "empty command");

  int outpipe[2] = {-1, -1};
  if (opts.capture_stdout && ::pipe(outpipe) != 0)
    throw Error(Errc::write_failure, "pipe() failed");

  pid_t pid = ::fork();
  if (pid < 0) throw Error(Errc::write_failure, "fork() failed");

  if (pid == 0) {
    ::setpgid(0, 0);
    if (opts.capture_stdout) {
      ::dup2(outpipe[1], STDOUT_FILENO);
      ::close(outpipe[0]);
      ::close(outpipe[1]);
    }
    if (!opts.cwd.empty() && ::chdir(opts.cwd.c_str()) != 0) _exit(127);
    for (const auto& [k, v] : opts.env) ::setenv(k.c_str(), v.c_str(), 1);
    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);
    ::execvp(cargv[0], cargv.data());
    _exit(127);
  }

  ::setpgid(pid, pid);  // may race with the child's own call; both set the same group
  if (opts.capture_stdout) ::close(outpipe[1]);

  RunResult res;
  auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  bool killed = false;
  auto kill_group = [&] {
    if (!killed) {
      ::kill(-pid, SIGKILL);
      killed = true;
    }
  };

  int rfd = opts.capture_stdout ? outpipe[0] : -1;
  if (rfd >= 0) ::fcntl(rfd, F_SETFL, O_NONBLOCK);
  char buf[16384];
  bool out_open = rfd >= 0;
  int status = 0;
  bool exited = false;

  while (true) {
    if (out_open) {
      struct pollfd pfd{rfd, POLLIN, 0};
      int pr = ::poll(&pfd, 1, 50);
      if (pr > 0) {
        ssize_t n;
        while ((n = ::read(rfd, buf, sizeof(buf))) > 0) {
          if (res.out.size() + std::size_t(n) <= opts.stdout_limit_bytes)
            res.out.append(buf, std::size_t(n));
        }
        if (n == 0) out_open = false;
      }
    } else {
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }

    if (!exited) {
      pid_t w = ::waitpid(pid, &status, WNOHANG);
      if (w == pid) exited = true;
    }
    if (exited && !out_open) break;
    if (exited && out_open) {
      // Drain whatever remains, then stop once EOF is seen.
      ssize_t n;
      while ((n = ::read(rfd, buf, sizeof(buf))) > 0) {
        if (res.out.size() + std::size_t(n) <= opts.stdout_limit_bytes)
          res.out.append(buf, std::size_t(n));
      }
      if (n == 0) out_open = false;
      if (!out_open) break;
      continue;
    }

    if (opts.timeout_seconds > 0 && elapsed() > opts.timeout_seconds) {
      res.timed_out = true;
      kill_group();
    }
    if (opts.log_limit_bytes > 0 && !opts.watch_log.empty() &&
        file_size_or_zero(opts.watch_log) > opts.log_limit_bytes) {
      res.log_overflow = true;
      kill_group();
    }
  }

  if (rfd >= 0) ::close(rfd);
  res.wall_seconds = elapsed();
  if (WIFEXITED(status)) {
    res.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    res.signaled = true;
    res.exit_code = 128 + WTERMSIG(status);
  }
  return res;
}

}  // namespace texsan
