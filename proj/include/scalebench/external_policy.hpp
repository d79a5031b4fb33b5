#pragma once

#include <memory>
#include <string>
#include <vector>

#include "scalebench/decision_store.hpp"
#include "scalebench/sim.hpp"
#include "scalebench/subprocess.hpp"

namespace scalebench {

constexpr std::string_view kProtocolName = "scalebench.policy";
constexpr int kProtocolVersion = 1;

struct TokenPricing {
  double input_per_token = 3.0e-6;
  double output_per_token = 15.0e-6;

  double cost(std::int64_t tokens_in, std::int64_t tokens_out) const {
    return static_cast<double>(tokens_in) * input_per_token + static_cast<double>(tokens_out) * output_per_token;
  }
};

struct ExternalPolicyOptions {
  std::string command;
  std::string name = "external";
  double timeout = 10.0;            // seconds of wall clock per decision
  double handshake_timeout = 10.0;
  TokenPricing pricing;
  std::int64_t token_bound = kDefaultTokenBound;
  const DecisionStore* history = nullptr;  // backs the lookup_history tool
};

struct ExternalCallResult {
  PolicyReply reply;
  std::string raw_response;  // last frame read, for protocol logs
};

// Host side of the newline-delimited frame protocol. The constructor spawns
// the command and completes the hello exchange.
class ExternalPolicy final : public Policy {
 public:
  explicit ExternalPolicy(ExternalPolicyOptions options);
  ~ExternalPolicy() override;

  std::string name() const override { return options_.name; }
  PolicyReply decide(const Observation& obs) override;

  ExternalCallResult call(const Observation& obs, double timeout);

  // Sends "bye", closes the child's input and waits for it to exit.
  bool shutdown(double grace_seconds);

  const std::string& peer_name() const { return peer_name_; }
  // Raw frames that failed to parse or validate.
  const std::vector<std::string>& protocol_log() const { return protocol_log_; }
  std::int64_t next_seq() const { return seq_; }

 private:
  Json answer_tool(const Json& frame, const Observation& obs) const;

  ExternalPolicyOptions options_;
  std::unique_ptr<ChildProcess> child_;
  std::string peer_name_;
  std::int64_t seq_ = 0;
  std::vector<std::string> protocol_log_;
  bool shut_down_ = false;
};

// One request/response exchange: observation out, action in, ledger entry
// appended to the reply. Timeouts and malformed frames come back as faults.
ExternalCallResult external_policy_call(ExternalPolicy& handle, const Observation& obs, double timeout);

// Canonical request frame; the observation text is embedded byte-for-byte.
std::string make_request_frame(std::int64_t seq, const std::string& observation_text);
std::string make_host_hello();

struct ConformanceCase {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ConformanceReport {
  std::vector<ConformanceCase> cases;
  int faults = 0;
  bool held_previous_target = true;  // every faulted tick kept the prior target
  bool all_passed() const;
  Json to_json() const;
};

// Conformance suite against an external policy command. Every exchange is
// bounded by the configured timeouts, so a wedged client cannot hang it.
ConformanceReport protocol_check(const ExternalPolicyOptions& options);

}  // namespace scalebench
