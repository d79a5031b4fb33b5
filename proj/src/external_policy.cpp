#include "scalebench/external_policy.hpp"

#include <chrono>

namespace scalebench {

namespace {

using Clock = std::chrono::steady_clock;

Clock::time_point deadline_after(double seconds) {
  return Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds));
}

std::string clip(const std::string& s, std::size_t n = 512) { return s.size() <= n ? s : s.substr(0, n) + "..."; }

}  // namespace

std::string make_host_hello() {
  return canonical_dump(
      Json{{"type", "hello"}, {"protocol", kProtocolName}, {"version", kProtocolVersion}, {"role", "host"}});
}

std::string make_request_frame(std::int64_t seq, const std::string& observation_text) {
  // Keys in sorted order: observation, seq, type.
  return "{\"observation\":" + observation_text + ",\"seq\":" + std::to_string(seq) + ",\"type\":\"decide\"}";
}

ExternalPolicy::ExternalPolicy(ExternalPolicyOptions options) : options_(std::move(options)) {
  if (options_.command.empty()) throw ConfigError("external policy needs a command");
  child_ = std::make_unique<ChildProcess>(options_.command);
  if (!child_->write_line(make_host_hello())) throw ProtocolError("handshake: policy process closed its input");
  std::string line;
  const auto status = child_->read_line(line, deadline_after(options_.handshake_timeout));
  if (status == ChildProcess::ReadStatus::Timeout) throw ProtocolError("handshake: timed out waiting for hello");
  if (status == ChildProcess::ReadStatus::Eof) throw ProtocolError("handshake: policy process exited");
  Json hello;
  try {
    hello = Json::parse(line);
  } catch (const Json::exception&) {
    throw ProtocolError("handshake: malformed hello frame", line);
  }
  if (!hello.is_object() || hello.value("type", "") != "hello" || hello.value("protocol", "") != kProtocolName ||
      hello.value("role", "") != "policy") {
    throw ProtocolError("handshake: unexpected hello frame", line);
  }
  if (hello.value("version", 0) != kProtocolVersion) {
    throw ProtocolError("handshake: unsupported protocol version", line);
  }
  peer_name_ = hello.value("name", std::string());
}

ExternalPolicy::~ExternalPolicy() { shutdown(0.2); }

bool ExternalPolicy::shutdown(double grace_seconds) {
  if (shut_down_ || !child_) return true;
  shut_down_ = true;
  child_->write_line(canonical_dump(Json{{"type", "bye"}}));
  child_->close_input();
  return child_->terminate(std::chrono::milliseconds(static_cast<long>(grace_seconds * 1000.0)));
}

PolicyReply ExternalPolicy::decide(const Observation& obs) { return call(obs, options_.timeout).reply; }

Json ExternalPolicy::answer_tool(const Json& frame, const Observation& obs) const {
  Json reply{{"type", "tool_result"}, {"seq", frame.value("seq", Json(nullptr))},
             {"call_id", frame.value("call_id", Json(nullptr))}};
  const auto name = frame.value("name", std::string());
  const Json args = frame.value("args", Json::object());
  if (name == "cost_query") {
    reply["result"] = Json{{"rate_per_vcpu_hour", obs.rate_per_vcpu_hour},
                           {"accrued_dollars", obs.accrued_dollars},
                           {"vcpus_per_executor", obs.vcpus_per_executor}};
  } else if (name == "lookup_history") {
    if (options_.history == nullptr) {
      reply["result"] = Json::array();
      return reply;
    }
    try {
      HistoryQuery q;
      q.subclass_id = args.value("subclass", std::string());
      const auto f = args.at("features").get<std::vector<double>>();
      if (f.size() != kFeatureDim) throw InvalidInput("features must have 3 entries");
      std::copy(f.begin(), f.end(), q.features.begin());
      Json hits = Json::array();
      for (const auto& e : options_.history->query(q, args.value("k", 3))) hits.push_back(to_json(e));
      reply["result"] = std::move(hits);
    } catch (const std::exception& e) {
      reply["error"] = e.what();
    }
  } else {
    reply["error"] = "unknown tool: " + name;
  }
  return reply;
}

ExternalCallResult ExternalPolicy::call(const Observation& obs, double timeout) {
  ExternalCallResult result;
  const auto serialized = serialize_observation(obs, options_.token_bound);
  const std::int64_t seq = seq_++;
  LedgerEntry ledger;
  ledger.tokens_in = serialized.tokens;

  const auto start = Clock::now();
  auto finish = [&](std::optional<PolicyFaultInfo> fault) {
    ledger.wall_latency = std::chrono::duration<double>(Clock::now() - start).count();
    ledger.monetary_cost = options_.pricing.cost(ledger.tokens_in, ledger.tokens_out);
    result.reply.ledger = ledger;
    result.reply.fault = std::move(fault);
    return result;
  };

  if (!child_->write_line(make_request_frame(seq, serialized.text))) {
    throw PolicyUnavailable("policy process closed its input");
  }
  const auto deadline = start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(timeout));
  for (;;) {
    std::string line;
    const auto status = child_->read_line(line, deadline);
    if (status == ChildProcess::ReadStatus::Timeout) {
      return finish(PolicyFaultInfo{"timeout", "no response for seq " + std::to_string(seq)});
    }
    if (status == ChildProcess::ReadStatus::Eof) throw PolicyUnavailable("policy process exited");
    result.raw_response = line;

    auto malformed = [&](const std::string& why) {
      protocol_log_.push_back(line);
      return finish(PolicyFaultInfo{"malformed", why + ": " + clip(line)});
    };
    Json frame;
    try {
      frame = Json::parse(line);
    } catch (const Json::exception&) {
      return malformed("unparseable frame");
    }
    if (!frame.is_object() || !frame.contains("type") || !frame["type"].is_string()) {
      return malformed("frame without type");
    }
    const auto type = frame["type"].get<std::string>();
    if (!frame.contains("seq") || !frame["seq"].is_number_integer()) return malformed("frame without integer seq");
    const auto frame_seq = frame["seq"].get<std::int64_t>();
    if (frame_seq < seq) continue;  // late answer to an earlier, already-faulted request
    if (frame_seq > seq) return malformed("frame for a future seq");

    if (type == "tool") {
      if (!child_->write_line(canonical_dump(answer_tool(frame, obs)))) {
        throw PolicyUnavailable("policy process closed its input");
      }
      continue;
    }
    if (type == "error") {
      return finish(PolicyFaultInfo{"error_frame", clip(frame.value("message", std::string()))});
    }
    if (type != "action") return malformed("unexpected frame type");
    if (!frame.contains("target_executors") || !frame["target_executors"].is_number_integer()) {
      return malformed("action without integer target_executors");
    }
    ScalingAction action;
    action.target_executors = frame["target_executors"].get<int>();
    if (frame.contains("justification") && !frame["justification"].is_null()) {
      if (!frame["justification"].is_string()) return malformed("justification is not a string");
      action.justification = frame["justification"].get<std::string>();
    }
    ledger.tokens_out = action.justification ? count_tokens(*action.justification) : 0;
    if (frame.contains("tokens_in")) {
      if (!frame["tokens_in"].is_number_integer()) return malformed("tokens_in is not an integer");
      ledger.tokens_in = frame["tokens_in"].get<std::int64_t>();
    }
    if (frame.contains("tokens_out")) {
      if (!frame["tokens_out"].is_number_integer()) return malformed("tokens_out is not an integer");
      ledger.tokens_out = frame["tokens_out"].get<std::int64_t>();
    }
    result.reply.action = std::move(action);
    return finish(std::nullopt);
  }
}

ExternalCallResult external_policy_call(ExternalPolicy& handle, const Observation& obs, double timeout) {
  return handle.call(obs, timeout);
}

}  // namespace scalebench
