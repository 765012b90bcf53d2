#pragma once

#include "fedmdp/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fedmdp {

/// A malformed config document or override. Maps to exit status 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Experiment spec plus the global options that only affect how it runs.
struct RunConfig {
  ExperimentSpec spec;
  int workers = 1;
  int verbosity = 0;
};

namespace config_detail {

using nlohmann::json;

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "id",     "kind",       "family",         "num_states", "num_actions",      "mode",       "gamma",
      "theta_low", "theta_high", "algorithms",  "E_list",     "kappa_list",       "n",          "num_task_seeds",
      "seed",   "T",          "schedule",       "record_every", "eval_d0",        "novel_env_count",
      "include_baseline",     "output_dir",     "workers",    "verbosity"};
  return keys;
}

/// 1-based line of the first occurrence of `"key"` in the document, or 0.
inline int line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find('"' + key + '"');
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

struct Context {
  std::string source;
  std::string text;

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const int line = line_of_key(text, key);
    std::string where = source;
    if (line > 0) where += ":" + std::to_string(line);
    throw ConfigError(where + ": key '" + key + "': " + msg);
  }
};

template <typename T>
T get_as(const Context& ctx, const std::string& key, const json& v) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    ctx.fail(key, "has the wrong type (" + std::string(v.type_name()) + ")");
  }
}

inline CommPeriod parse_period(const Context& ctx, const std::string& key, const json& v) {
  try {
    if (v.is_string()) return CommPeriod::parse(v.get<std::string>());
    if (v.is_number_integer()) {
      const int e = v.get<int>();
      if (e < 1) throw InvalidArgument("must be >= 1");
      return CommPeriod(e);
    }
  } catch (const Error& e) {
    ctx.fail(key, e.what());
  }
  ctx.fail(key, "entries must be positive integers or \"inf\"");
}

inline ScheduleSpec parse_schedule(const Context& ctx, const std::string& key, const json& v) {
  if (!v.is_object()) ctx.fail(key, "schedule must be an object");
  ScheduleSpec s;
  for (const auto& [k, x] : v.items()) {
    if (k == "kind") {
      try {
        s.kind = schedule_kind_from_string(get_as<std::string>(ctx, key, x));
      } catch (const InvalidArgument& e) {
        ctx.fail(key, e.what());
      }
    } else if (k == "eta") {
      s.eta_constant = get_as<double>(ctx, key, x);
    } else if (k == "L") {
      s.smoothness_L = get_as<double>(ctx, key, x);
    } else {
      ctx.fail(k, "unknown schedule field");
    }
  }
  if (s.kind == ScheduleKind::constant && !s.eta_constant) ctx.fail(key, "constant schedule needs 'eta'");
  if (s.kind == ScheduleKind::pavg_theoretical && !s.smoothness_L) ctx.fail(key, "pavg_theoretical schedule needs 'L'");
  return s;
}

/// Per-algorithm value: either one value for every algorithm, or an object keyed by algorithm name.
template <typename V, typename Parse>
std::map<Algorithm, V> per_algorithm(const Context& ctx, const std::string& key, const json& v,
                                     const std::vector<Algorithm>& algorithms, bool object_is_value, Parse parse) {
  std::map<Algorithm, V> out;
  const bool keyed = v.is_object() && (!object_is_value || v.contains("qavg") || v.contains("projpavg") ||
                                       v.contains("softpavg"));
  if (!keyed) {
    const V value = parse(v);
    for (Algorithm a : {Algorithm::qavg, Algorithm::projpavg, Algorithm::softpavg}) out[a] = value;
    (void)algorithms;
    return out;
  }
  for (const auto& [name, x] : v.items()) {
    Algorithm a;
    try {
      a = algorithm_from_string(name);
    } catch (const InvalidArgument& e) {
      ctx.fail(key, e.what());
    }
    out[a] = parse(x);
  }
  return out;
}

inline RunConfig from_json(const Context& ctx, const json& doc) {
  if (!doc.is_object()) throw ConfigError(ctx.source + ": config must be a JSON object");
  for (const auto& [k, v] : doc.items()) {
    if (!known_keys().count(k)) ctx.fail(k, "unknown key");
  }
  RunConfig rc;
  ExperimentSpec& s = rc.spec;
  auto enum_field = [&](const char* key, auto parse) {
    try {
      parse(get_as<std::string>(ctx, key, doc.at(key)));
    } catch (const InvalidArgument& e) {
      ctx.fail(key, e.what());
    }
  };
  if (!doc.contains("kind")) throw ConfigError(ctx.source + ": missing required key 'kind'");
  enum_field("kind", [&](const std::string& x) { s.kind = experiment_kind_from_string(x); });
  if (doc.contains("id")) s.id = get_as<std::string>(ctx, "id", doc["id"]);
  if (doc.contains("family")) {
    enum_field("family", [&](const std::string& x) {
      if (x == "random") s.family.kind = FamilyKind::random;
      else if (x == "windy_cliff") s.family.kind = FamilyKind::windy_cliff;
      else throw InvalidArgument("unknown family '" + x + "' (expected random or windy_cliff)");
    });
  }
  if (s.family.kind == FamilyKind::windy_cliff) s.family.gamma = 0.95;
  if (doc.contains("num_states")) s.family.num_states = get_as<std::size_t>(ctx, "num_states", doc["num_states"]);
  if (doc.contains("num_actions")) s.family.num_actions = get_as<std::size_t>(ctx, "num_actions", doc["num_actions"]);
  if (doc.contains("mode")) enum_field("mode", [&](const std::string& x) { s.family.mode = transition_mode_from_string(x); });
  if (doc.contains("gamma")) s.family.gamma = get_as<double>(ctx, "gamma", doc["gamma"]);
  if (doc.contains("theta_low")) s.family.theta_low = get_as<double>(ctx, "theta_low", doc["theta_low"]);
  if (doc.contains("theta_high")) s.family.theta_high = get_as<double>(ctx, "theta_high", doc["theta_high"]);
  if (doc.contains("algorithms")) {
    s.algorithms.clear();
    const json& list = doc["algorithms"];
    if (!list.is_array()) ctx.fail("algorithms", "must be a list");
    for (const json& x : list) {
      try {
        s.algorithms.push_back(algorithm_from_string(get_as<std::string>(ctx, "algorithms", x)));
      } catch (const InvalidArgument& e) {
        ctx.fail("algorithms", e.what());
      }
    }
  }
  if (doc.contains("E_list")) {
    s.E_list.clear();
    const json& list = doc["E_list"];
    if (!list.is_array()) ctx.fail("E_list", "must be a list");
    for (const json& x : list) s.E_list.push_back(parse_period(ctx, "E_list", x));
  }
  if (doc.contains("kappa_list")) {
    if (!doc["kappa_list"].is_array()) ctx.fail("kappa_list", "must be a list");
    s.kappa_list = get_as<std::vector<double>>(ctx, "kappa_list", doc["kappa_list"]);
  }
  if (doc.contains("n")) s.n = get_as<std::size_t>(ctx, "n", doc["n"]);
  if (doc.contains("num_task_seeds")) s.num_task_seeds = get_as<int>(ctx, "num_task_seeds", doc["num_task_seeds"]);
  if (doc.contains("seed")) s.seed = get_as<std::uint64_t>(ctx, "seed", doc["seed"]);
  if (doc.contains("T")) {
    s.T = per_algorithm<int>(ctx, "T", doc["T"], s.algorithms, false,
                             [&](const json& x) { return get_as<int>(ctx, "T", x); });
  }
  if (doc.contains("schedule")) {
    s.schedule = per_algorithm<ScheduleSpec>(ctx, "schedule", doc["schedule"], s.algorithms, true,
                                             [&](const json& x) { return parse_schedule(ctx, "schedule", x); });
  }
  if (doc.contains("record_every")) s.record_every = get_as<int>(ctx, "record_every", doc["record_every"]);
  if (doc.contains("eval_d0")) {
    enum_field("eval_d0", [&](const std::string& x) {
      if (x == "task") s.eval_d0 = EvalD0::task;
      else if (x == "uniform") s.eval_d0 = EvalD0::uniform;
      else throw InvalidArgument("unknown eval_d0 '" + x + "' (expected task or uniform)");
    });
  }
  if (doc.contains("novel_env_count")) s.novel_env_count = get_as<int>(ctx, "novel_env_count", doc["novel_env_count"]);
  if (doc.contains("include_baseline")) s.include_baseline = get_as<bool>(ctx, "include_baseline", doc["include_baseline"]);
  if (doc.contains("output_dir")) s.output_dir = get_as<std::string>(ctx, "output_dir", doc["output_dir"]);
  if (doc.contains("workers")) rc.workers = get_as<int>(ctx, "workers", doc["workers"]);
  if (doc.contains("verbosity")) rc.verbosity = get_as<int>(ctx, "verbosity", doc["verbosity"]);
  try {
    s.validate();
    for (const auto& [a, sched] : s.schedule) {
      FedConfig c = s.config_for(a, s.E_list.front());
      c.validate();
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(ctx.source + ": " + e.what());
  }
  if (rc.workers < 1) ctx.fail("workers", "must be at least 1");
  return rc;
}

}  // namespace config_detail

/// Applies `key=value` overrides to a parsed document. The value is read as
/// JSON when it parses, otherwise as a plain string.
inline void apply_overrides(nlohmann::json& doc, const std::vector<std::string>& overrides) {
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not of the form key=value");
    const std::string key = o.substr(0, eq);
    const std::string raw = o.substr(eq + 1);
    nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    if (!config_detail::known_keys().count(key)) throw ConfigError("override: key '" + key + "': unknown key");
    doc[key] = std::move(value);
  }
}

/// Parses a config document held in memory. `source` names it in diagnostics.
inline RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {},
                              const std::string& source = "<config>") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto byte = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte > 0 ? byte - 1 : 0), '\n'));
    throw ConfigError(source + ":" + std::to_string(line) + ": parse error: " + e.what());
  }
  apply_overrides(doc, overrides);
  return config_detail::from_json({source, text}, doc);
}

inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides, path);
}

}  // namespace fedmdp
