#include "gks/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace gks {

namespace {

std::uint64_t get_count(const nlohmann::json& doc, const char* key, std::uint64_t fallback) {
  if (!doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw std::invalid_argument(std::string("config: '") + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string get_string(const nlohmann::json& doc, const char* key, std::string fallback) {
  if (!doc.contains(key)) return fallback;
  if (!doc.at(key).is_string()) throw std::invalid_argument(std::string("config: '") + key + "' must be a string");
  return doc.at(key).get<std::string>();
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("config: top level must be a JSON object");
  static const std::set<std::string> known{"k",    "n",         "policy",     "adversary",  "phases",
                                           "max_steps", "seed", "emit_trace", "trace_path", "summary_path"};
  for (const auto& item : doc.items()) {
    if (!known.count(item.key())) throw std::invalid_argument("config: unknown key '" + item.key() + "'");
  }
  for (const char* key : {"k", "n", "policy"}) {
    if (!doc.contains(key)) throw std::invalid_argument(std::string("config: missing required key '") + key + "'");
  }

  const std::uint64_t k = get_count(doc, "k", 0);
  if (k == 0 || k > 64) throw std::invalid_argument("config: 'k' must be in 1..64");

  ExperimentConfig c;
  const auto& n = doc.at("n");
  if (n.is_number_integer()) {
    if (n.get<std::int64_t>() < 2) throw std::invalid_argument("config: 'n' must be >= 2");
    c.spec = MetricSpec::uniform(static_cast<unsigned>(k), static_cast<std::uint32_t>(n.get<std::int64_t>()));
  } else if (n.is_array()) {
    for (const auto& x : n) {
      if (!x.is_number_integer() || x.get<std::int64_t>() < 0 || x.get<std::int64_t>() > (1LL << 30)) {
        throw std::invalid_argument("config: 'n' entries must be integers");
      }
      c.spec.points.push_back(static_cast<std::uint32_t>(x.get<std::int64_t>()));
    }
    if (c.spec.points.size() != k) {
      throw std::invalid_argument("config: 'n' has " + std::to_string(c.spec.points.size()) + " entries but k = " +
                                  std::to_string(k));
    }
  } else {
    throw std::invalid_argument("config: 'n' must be an integer or an array of k integers");
  }

  const auto& p = doc.at("policy");
  if (p.is_string() && p.get<std::string>() == "uniform") {
    c.policy = MemorylessPolicy::uniform(static_cast<unsigned>(k));
  } else if (p.is_array()) {
    std::vector<Rational> probs;
    for (const auto& x : p) {
      if (!x.is_string()) throw std::invalid_argument("config: 'policy' entries must be \"num/den\" strings");
      probs.push_back(Rational::parse(x.get<std::string>()));
    }
    if (probs.size() != k) {
      throw std::invalid_argument("config: 'policy' has " + std::to_string(probs.size()) + " entries but k = " +
                                  std::to_string(k));
    }
    c.policy = MemorylessPolicy(std::move(probs));
  } else {
    throw std::invalid_argument("config: 'policy' must be \"uniform\" or an array of \"num/den\" strings");
  }

  c.adversary = parse_adversary(get_string(doc, "adversary", "lower_bound"));
  c.phases = get_count(doc, "phases", c.phases);
  c.max_steps = get_count(doc, "max_steps", c.max_steps);
  c.seed = get_count(doc, "seed", c.seed);
  if (doc.contains("emit_trace")) {
    if (!doc.at("emit_trace").is_boolean()) throw std::invalid_argument("config: 'emit_trace' must be true or false");
    c.emit_trace = doc.at("emit_trace").get<bool>();
  }
  c.trace_path = get_string(doc, "trace_path", "");
  c.summary_path = get_string(doc, "summary_path", "");
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config: " + path + ": " + e.what());
  }
  return parse_config(doc);
}

nlohmann::json config_json(const ExperimentConfig& c) {
  nlohmann::json probs = nlohmann::json::array();
  for (const auto& x : c.policy.probs()) probs.push_back(x.to_string());
  nlohmann::json out{{"k", c.spec.k()},           {"n", c.spec.points},     {"policy", probs},
                     {"adversary", to_string(c.adversary)}, {"phases", c.phases}, {"max_steps", c.max_steps},
                     {"seed", c.seed},            {"emit_trace", c.emit_trace}};
  if (!c.trace_path.empty()) out["trace_path"] = c.trace_path;
  if (!c.summary_path.empty()) out["summary_path"] = c.summary_path;
  return out;
}

nlohmann::json summary_json(const RunSummary& s) {
  return {{"alg_cost", s.alg_cost},
          {"adv_cost", s.adv_cost},
          {"ratio", s.ratio},
          {"phases", s.phases},
          {"mean_phase_length", s.mean_phase_length},
          {"max_phase_length", s.max_phase_length},
          {"phase_length_stderr", s.phase_length_stderr},
          {"steps", s.steps},
          {"seed", s.seed},
          {"policy", s.policy},
          {"adversary", s.adversary},
          {"budget_exhausted", s.budget_exhausted}};
}

}  // namespace gks
