#pragma once

// Adapter for real trainers running as a child process. Line protocol:
//   parent -> child  CONFIG <serialized-config> EPOCHS <n> FRACTION <f> SEED <s>
//   child  -> parent EPOCH <e> ACC <a> LOSS <l> LR <r>      (once per epoch)
//   parent -> child  STOP | CONTINUE                        (after each epoch line)
//   child  -> parent DONE
// The trainer owns its learning-rate schedule and reports the rate it used;
// the monitor only decides whether to continue.

#include <chrono>
#include <functional>
#include <string>
#include <string_view>

#include "hypermads/blackbox.hpp"

namespace hypermads {

struct ProcessAdapterSettings {
  std::string command;  // run through /bin/sh -c
  std::chrono::milliseconds line_timeout{std::chrono::minutes(30)};
  // Receives a message and the raw transcript for every failed evaluation;
  // defaults to stderr.
  std::function<void(std::string_view)> log;
};

std::string format_config_line(const EvaluationRequest& request);

// Throws nothing for child-side problems: crashes, malformed lines and
// timeouts come back as failed results carrying the transcript.
EvaluationResult external_evaluate(const EvaluationRequest& request, const ProcessAdapterSettings& settings);

class ExternalBlackbox final : public Blackbox {
 public:
  explicit ExternalBlackbox(ProcessAdapterSettings settings);
  EvaluationResult evaluate(const EvaluationRequest& request) const override {
    return external_evaluate(request, settings_);
  }

 private:
  ProcessAdapterSettings settings_;
};

}  // namespace hypermads
