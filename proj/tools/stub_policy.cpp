// Deterministic policy process for exercising the host side of the frame
// protocol. Reads request frames on stdin, writes one frame per line on stdout.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "scalebench/canonical.hpp"
#include "scalebench/observation.hpp"
#include "scalebench/policy.hpp"

using scalebench::Json;

namespace {

struct Options {
  std::string mode = "echo";   // echo | reactive | misbehave | crash
  long timeout_on = -1;        // misbehave: answer this seq late
  long malformed_on = -1;      // misbehave: send garbage for this seq
  long error_on = -1;          // misbehave: send an error frame for this seq
  long crash_on = -1;          // crash: exit when this seq arrives
  double sleep = 2.0;          // seconds to stall on timeout_on
  bool tokens = false;         // report tokens_in / tokens_out
  bool justify = false;        // attach a justification
  bool tool = false;           // ask cost_query before every answer
  bool bad_hello = false;
  bool silent_hello = false;
};

void emit(const std::string& line) {
  std::cout << line << '\n';
  std::cout.flush();
}

int decide(const Options& o, const scalebench::Observation& obs) {
  if (o.mode == "reactive") return scalebench::reactive_policy(obs).target_executors;
  return obs.current_target;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"stub policy for protocol tests"};
  app.add_option("--mode", o.mode)->check(CLI::IsMember({"echo", "reactive", "misbehave", "crash"}));
  app.add_option("--timeout-on", o.timeout_on);
  app.add_option("--malformed-on", o.malformed_on);
  app.add_option("--error-on", o.error_on);
  app.add_option("--crash-on", o.crash_on);
  app.add_option("--sleep", o.sleep);
  app.add_flag("--tokens", o.tokens);
  app.add_flag("--justify", o.justify);
  app.add_flag("--tool", o.tool);
  app.add_flag("--bad-hello", o.bad_hello);
  app.add_flag("--silent-hello", o.silent_hello);
  CLI11_PARSE(app, argc, argv);

  std::string line;
  if (!std::getline(std::cin, line)) return 1;
  if (o.silent_hello) {
    std::this_thread::sleep_for(std::chrono::duration<double>(o.sleep));
    return 0;
  }
  emit(scalebench::canonical_dump(Json{{"type", "hello"},
                                       {"protocol", o.bad_hello ? "other.protocol" : "scalebench.policy"},
                                       {"version", 1},
                                       {"role", "policy"},
                                       {"name", "stub-" + o.mode}}));

  while (std::getline(std::cin, line)) {
    Json frame;
    try {
      frame = Json::parse(line);
    } catch (const Json::exception&) {
      continue;
    }
    const auto type = frame.value("type", std::string());
    if (type == "bye") return 0;
    if (type != "decide") continue;
    const auto seq = frame.value("seq", -1L);

    if (o.mode == "crash" && seq == o.crash_on) std::_Exit(3);
    if (o.mode == "misbehave" && seq == o.malformed_on) {
      emit("{\"type\":\"action\",\"seq\":" + std::to_string(seq) + ",\"target_executors\":");
      continue;
    }
    if (o.mode == "misbehave" && seq == o.error_on) {
      emit(scalebench::canonical_dump(Json{{"type", "error"}, {"seq", seq}, {"message", "stub refused"}}));
      continue;
    }
    if (o.mode == "misbehave" && seq == o.timeout_on) {
      std::this_thread::sleep_for(std::chrono::duration<double>(o.sleep));
    }

    const auto obs = scalebench::observation_from_json(frame.at("observation"));
    if (o.tool) {
      emit(scalebench::canonical_dump(
          Json{{"type", "tool"}, {"seq", seq}, {"call_id", 0}, {"name", "cost_query"}, {"args", Json::object()}}));
      if (!std::getline(std::cin, line)) return 1;
    }
    Json reply{{"type", "action"}, {"seq", seq}, {"target_executors", decide(o, obs)}};
    if (o.justify) reply["justification"] = "demand " + std::to_string(obs.demand_slots) + " slots";
    if (o.tokens) {
      reply["tokens_in"] = 100 + static_cast<long>(obs.jobs.size());
      reply["tokens_out"] = 7;
    }
    emit(scalebench::canonical_dump(reply));
  }
  return 0;
}
