#pragma once

#include <string>
#include <vector>

#include "cyberteach/env.hpp"
#include "cyberteach/topology.hpp"

namespace cyberteach {

enum class PromptFormat { Json, Sentence };

const char* prompt_format_name(PromptFormat f);
PromptFormat prompt_format_from_name(const std::string& name);

/// The structured prompt handed to an LLM teacher: role preamble, objective,
/// hop-priority block (critical-path hosts ascending), six generic action
/// definitions, one state line per host, and the exact response-format
/// instruction. All host names are generic labels.
struct PromptSpec {
  std::string role;
  std::string objective;
  std::vector<std::string> priority_lines;      // "host8: 0 hops." etc.
  std::vector<std::string> action_definitions;  // action1..action6
  std::vector<std::string> state_lines;         // one per host, priority order
  std::string response_format;

  std::string render() const;
};

PromptSpec build_prompt(const GroundTruthSnapshot& info, const ScenarioConfig& cfg,
                        const PriorityMap& priorities, PromptFormat format);

/// Condensed per-host state serialization (the prompt's state section).
std::string render_state_line(const HostSnapshot& host, const std::string& ip,
                              const std::string& red_ip, PromptFormat format);

/// Host indices in prompt order: critical-path hosts ascending by hops (ties
/// by generic label), then the remaining hosts by generic label.
std::vector<int> prompt_host_order(const ScenarioConfig& cfg, const PriorityMap& priorities);

/// Generic action labels index-aligned with ActionKind (action1 = Analyse...).
std::vector<std::string> generic_action_labels();

/// Generic host labels index-aligned with the scenario host order.
std::vector<std::string> generic_host_labels(const ScenarioConfig& cfg);

}  // namespace cyberteach
