#include "hypermads/external_blackbox.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "hypermads/format.hpp"

namespace hypermads {

namespace {

class ChildProcess {
 public:
  explicit ChildProcess(const std::string& command) {
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) throw std::runtime_error(std::string("pipe: ") + std::strerror(errno));
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw std::runtime_error(std::string("pipe: ") + std::strerror(errno));
    }
    pid_ = ::fork();
    if (pid_ < 0) {
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
      throw std::runtime_error(std::string("fork: ") + std::strerror(errno));
    }
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
  }

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  ~ChildProcess() {
    close_pipes();
    if (pid_ > 0 && !reaped_) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
  }

  bool write_line(const std::string& line) {
    std::string data = line + "\n";
    const char* p = data.data();
    std::size_t left = data.size();
    while (left > 0) {
      ssize_t n = ::write(write_fd_, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
    return true;
  }

  enum class ReadStatus { line, eof, timeout, error };

  ReadStatus read_line(std::string& line, std::chrono::milliseconds timeout) {
    while (true) {
      auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        line = buffer_.substr(0, nl);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        buffer_.erase(0, nl + 1);
        return ReadStatus::line;
      }
      if (eof_) {
        if (buffer_.empty()) return ReadStatus::eof;
        line = std::move(buffer_);
        buffer_.clear();
        return ReadStatus::line;
      }
      pollfd pfd{read_fd_, POLLIN, 0};
      int ready = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
      if (ready < 0) {
        if (errno == EINTR) continue;
        return ReadStatus::error;
      }
      if (ready == 0) return ReadStatus::timeout;
      char chunk[4096];
      ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR) continue;
        return ReadStatus::error;
      }
      if (n == 0)
        eof_ = true;
      else
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  // Exit status of a normally terminated child, -1 otherwise.
  int wait() {
    close_pipes();
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
    reaped_ = true;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

 private:
  void close_pipes() {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    write_fd_ = read_fd_ = -1;
  }

  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  bool reaped_ = false;
  bool eof_ = false;
  std::string buffer_;
};

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

// EPOCH <e> ACC <a> LOSS <l> LR <r>
bool parse_epoch_line(const std::string& line, EpochRecord& out, std::string& error) {
  std::istringstream in(line);
  std::string k1, e, k2, a, k3, l, k4, r, extra;
  if (!(in >> k1 >> e >> k2 >> a >> k3 >> l >> k4 >> r) || (in >> extra) || k1 != "EPOCH" || k2 != "ACC" ||
      k3 != "LOSS" || k4 != "LR") {
    error = "malformed epoch line";
    return false;
  }
  try {
    out.epoch = static_cast<int>(parse_int(e));
    out.val_accuracy = parse_double(a);
    out.val_loss = parse_double(l);
    out.learning_rate = parse_double(r);
  } catch (const std::invalid_argument& ex) {
    error = ex.what();
    return false;
  }
  if (!(out.val_accuracy >= 0.0 && out.val_accuracy <= 1.0)) {
    error = "accuracy outside [0, 1]";
    return false;
  }
  if (!(out.val_loss >= 0.0) || !(out.learning_rate > 0.0)) {
    error = "loss must be >= 0 and learning rate > 0";
    return false;
  }
  return true;
}

}  // namespace

std::string format_config_line(const EvaluationRequest& request) {
  return "CONFIG " + serialize(request.config) + " EPOCHS " + std::to_string(request.max_epochs) + " FRACTION " +
         format_double(request.data_fraction) + " SEED " + std::to_string(request.seed);
}

EvaluationResult external_evaluate(const EvaluationRequest& request, const ProcessAdapterSettings& settings) {
  request.check();
  ignore_sigpipe();

  std::string transcript;
  auto fail = [&](const std::string& why) {
    auto r = EvaluationResult::failure(why + "\n" + transcript);
    if (settings.log)
      settings.log(r.detail);
    else
      std::cerr << "external evaluation failed: " << why << "\n" << transcript;
    return r;
  };

  std::unique_ptr<ChildProcess> child;
  try {
    child = std::make_unique<ChildProcess>(settings.command);
  } catch (const std::runtime_error& ex) {
    return fail(ex.what());
  }

  auto send = [&](const std::string& line) {
    transcript += "> " + line + "\n";
    return child->write_line(line);
  };

  if (!send(format_config_line(request))) return fail("could not write to trainer");

  EvaluationResult result;
  bool stopped = false;
  while (true) {
    std::string line;
    auto status = child->read_line(line, settings.line_timeout);
    if (status == ChildProcess::ReadStatus::timeout) return fail("timed out waiting for trainer output");
    if (status == ChildProcess::ReadStatus::error) return fail("read error");
    if (status == ChildProcess::ReadStatus::eof) return fail("trainer exited before DONE");
    transcript += "< " + line + "\n";

    if (line == "DONE") break;
    if (stopped) continue;  // tolerate trailing output between STOP and DONE

    EpochRecord record;
    std::string error;
    if (!parse_epoch_line(line, record, error)) return fail(error + ": '" + line + "'");
    if (record.epoch != result.history.current_epoch() + 1) return fail("unexpected epoch number: '" + line + "'");
    if (record.epoch > request.max_epochs) return fail("trainer exceeded the epoch budget");
    result.history.append(record);

    bool stop = false;
    if (request.monitor) {
      MonitorDecision d = request.monitor(result.history);
      if (d.verdict.stop) {
        stop = true;
        result.stop_reason = d.verdict.reason;
        result.detail = d.verdict.detail;
      }
    }
    if (!send(stop ? "STOP" : "CONTINUE")) return fail("could not write to trainer");
    stopped = stop;
  }

  int exit_code = child->wait();
  if (exit_code != 0) return fail("trainer exited with status " + std::to_string(exit_code));
  if (result.history.empty()) return fail("trainer reported no epochs");

  result.epochs_used = static_cast<int>(result.history.size());
  result.final_val_accuracy = result.history.best_accuracy();
  result.wall_cost = result.epochs_used * request.data_fraction;
  return result;
}

ExternalBlackbox::ExternalBlackbox(ProcessAdapterSettings settings) : settings_(std::move(settings)) {
  if (settings_.command.empty()) throw std::invalid_argument("external blackbox: empty launch command");
}

}  // namespace hypermads
