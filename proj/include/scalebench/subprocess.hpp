#pragma once

#include <sys/types.h>

#include <chrono>
#include <string>
#include <string_view>

namespace scalebench {

// A child process whose stdin and stdout are one end of a socket pair, so
// writes to a dead child fail with an error instead of raising SIGPIPE.
class ChildProcess {
 public:
  using Clock = std::chrono::steady_clock;

  // Runs `command` through /bin/sh. Throws Error when spawning fails.
  explicit ChildProcess(const std::string& command);
  ~ChildProcess();
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  // Sends `line` plus a newline. Returns false once the peer is gone.
  bool write_line(std::string_view line);

  enum class ReadStatus { Line, Timeout, Eof };
  ReadStatus read_line(std::string& out, Clock::time_point deadline);

  // Half-closes the child's stdin.
  void close_input();

  // Waits up to `grace` for exit, then kills. Returns true if it exited on its own.
  bool terminate(std::chrono::milliseconds grace);

  pid_t pid() const { return pid_; }

 private:
  int fd_ = -1;
  pid_t pid_ = -1;
  bool reaped_ = false;
  bool input_closed_ = false;
  std::string buffer_;
};

}  // namespace scalebench
