#include "cyberteach/prompt.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace cyberteach {

using nlohmann::json;

const char* prompt_format_name(PromptFormat f) {
  return f == PromptFormat::Json ? "json" : "sentence";
}

PromptFormat prompt_format_from_name(const std::string& name) {
  if (name == "json") return PromptFormat::Json;
  if (name == "sentence") return PromptFormat::Sentence;
  throw std::invalid_argument("unknown prompt format: " + name);
}

std::vector<std::string> generic_action_labels() {
  return {"action1", "action2", "action3", "action4", "action5", "action6"};
}

std::vector<std::string> generic_host_labels(const ScenarioConfig& cfg) {
  std::vector<std::string> labels;
  labels.reserve(cfg.num_hosts());
  for (const auto& h : cfg.hosts) labels.push_back(h.generic_label);
  return labels;
}

std::vector<int> prompt_host_order(const ScenarioConfig& cfg, const PriorityMap& priorities) {
  std::vector<int> order;
  order.reserve(cfg.num_hosts());
  std::vector<char> placed(cfg.num_hosts(), 0);
  for (const auto& id : priorities.critical_path_hosts) {
    int idx = cfg.host_index(id);
    order.push_back(idx);
    placed[idx] = 1;
  }
  std::vector<int> rest;
  for (int h = 0; h < cfg.num_hosts(); ++h) {
    if (!placed[h]) rest.push_back(h);
  }
  std::sort(rest.begin(), rest.end(), [&](int a, int b) {
    return cfg.host(a).generic_label < cfg.host(b).generic_label;
  });
  order.insert(order.end(), rest.begin(), rest.end());
  return order;
}

namespace {

std::string describe_files(const std::vector<FileArtifact>& files) {
  std::ostringstream out;
  out << "[";
  for (size_t i = 0; i < files.size(); ++i) {
    if (i > 0) out << ", ";
    out << files[i].name << " at " << files[i].path << " (Density: " << files[i].density
        << ", Signed: " << (files[i].is_signed ? "Yes" : "No") << ")";
  }
  out << "]";
  return out.str();
}

std::string describe_processes(const std::vector<ProcessArtifact>& procs) {
  // Group by (remote ip, port) so repeated connections read as counts.
  std::map<std::pair<std::string, int>, int> groups;
  for (const auto& p : procs) groups[{p.remote_ip, p.port}] += 1;
  std::ostringstream out;
  out << "[";
  bool first = true;
  for (const auto& [key, count] : groups) {
    if (!first) out << ", ";
    first = false;
    out << count << (count == 1 ? " process" : " processes") << " with: (Remote IP: "
        << key.first << " and Port: " << key.second << ")";
  }
  out << "]";
  return out.str();
}

std::string describe_scans(const HostSnapshot& host, const std::string& red_ip) {
  if (host.compromise != Compromise::Scanned) return "[]";
  std::ostringstream out;
  out << "[1 scan with: (Remote IP: " << red_ip << " and Port: 445)]";
  return out.str();
}

}  // namespace

std::string render_state_line(const HostSnapshot& host, const std::string& ip,
                              const std::string& red_ip, PromptFormat format) {
  if (format == PromptFormat::Sentence) {
    std::ostringstream out;
    out << host.generic_label << "| IP: " << ip << ", "
        << (host.isolated ? "ISOLATED" : "NOT ISOLATED")
        << ", Files: " << describe_files(host.suspicious_files)
        << ", Processes: " << describe_processes(host.suspicious_processes)
        << ", Scans: " << describe_scans(host, red_ip);
    return out.str();
  }

  json doc;
  doc["ip"] = ip;
  doc["isolated"] = host.isolated;
  doc["files"] = json::array();
  for (const auto& f : host.suspicious_files) {
    doc["files"].push_back({{"name", f.name},
                            {"path", f.path},
                            {"density", f.density},
                            {"signed", f.is_signed}});
  }
  std::map<std::pair<std::string, int>, int> groups;
  for (const auto& p : host.suspicious_processes) groups[{p.remote_ip, p.port}] += 1;
  doc["processes"] = json::array();
  for (const auto& [key, count] : groups) {
    doc["processes"].push_back(
        {{"remote_ip", key.first}, {"port", key.second}, {"count", count}});
  }
  doc["scans"] = json::array();
  if (host.compromise == Compromise::Scanned) {
    doc["scans"].push_back({{"remote_ip", red_ip}, {"port", 445}});
  }
  return host.generic_label + "| " + doc.dump();
}

PromptSpec build_prompt(const GroundTruthSnapshot& info, const ScenarioConfig& cfg,
                        const PriorityMap& priorities, PromptFormat format) {
  PromptSpec spec;
  spec.role = "You are an expert at cybersecurity and network defense.";
  spec.objective =
      "You must choose **ONE ACTION** to execute on the most critical host to "
      "maintain network functionality.";

  for (const auto& id : priorities.critical_path_hosts) {
    int idx = cfg.host_index(id);
    spec.priority_lines.push_back(cfg.host(idx).generic_label + ": " +
                                  std::to_string(priorities.hops_of(id)) + " hops.");
  }

  spec.action_definitions = {
      "**action1**: Use to gather additional information on a host, such as active "
      "processes, connections, or files.",
      "**action2**: Use to revert a fully compromised host where the attacker has "
      "gained persistence.",
      "**action3**: Use to terminate non-persistent malicious processes before they "
      "escalate privileges or gain persistence.",
      "**action4**: Use to apply security updates and reduce the likelihood of future "
      "exploitation.",
      "**action5**: Use to block network access to and from a compromised host to "
      "prevent lateral movement.",
      "**action6**: Use to restore network access to a previously isolated host once "
      "it is deemed safe.",
  };

  for (int idx : prompt_host_order(cfg, priorities)) {
    spec.state_lines.push_back(
        render_state_line(info.hosts[idx], host_ip(cfg, idx), info.red_ip, format));
  }

  spec.response_format =
      "Your response must follow this format exactly: <action> <hostname> "
      "(e.g., actionx hostx).";
  return spec;
}

std::string PromptSpec::render() const {
  std::ostringstream out;
  out << "**Role**:\n" << role << "\n\n";
  out << "**Objective**:\n" << objective << "\n\n";
  out << "**Prioritize Hosts by Distance to the Target**\n";
  out << "- Prioritize hosts that are closest to the operational server:\n";
  for (const auto& line : priority_lines) out << "- " << line << "\n";
  out << "\n**Determine the Best Action**\n";
  out << "For the selected host, choose the best action based on the following "
         "definitions:\n";
  for (const auto& line : action_definitions) out << "- " << line << "\n";
  out << "\n### **Current Network State**:\n";
  for (const auto& line : state_lines) out << line << "\n";
  out << "\n" << response_format << "\n\nBest Action:\n";
  return out.str();
}

}  // namespace cyberteach
