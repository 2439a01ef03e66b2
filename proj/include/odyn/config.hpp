#ifndef ODYN_CONFIG_HPP
#define ODYN_CONFIG_HPP

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace odyn {

// Reader for the flat TOML subset the experiment configs use: [section]
// tables one level deep, `key = value` with strings, numbers, booleans and
// one-dimensional arrays, and # comments. Everything funnels into a json
// object so TOML and JSON configs share a single consumption path.
namespace tomlish {

inline std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline nlohmann::json parse_scalar(const std::string& raw, int line_no) {
  const std::string v = strip(raw);
  if (v.empty()) {
    throw std::invalid_argument("toml line " + std::to_string(line_no) +
                                ": empty value");
  }
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') {
      throw std::invalid_argument("toml line " + std::to_string(line_no) +
                                  ": unterminated string");
    }
    return v.substr(1, v.size() - 2);
  }
  if (v == "true") return true;
  if (v == "false") return false;
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) {
      if (v.find_first_of(".eE") == std::string::npos) {
        return static_cast<std::int64_t>(std::stoll(v));
      }
      return d;
    }
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("toml line " + std::to_string(line_no) +
                              ": cannot parse value '" + v + "'");
}

inline nlohmann::json parse(const std::string& text) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* table = &root;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // Strip comments outside of strings.
    bool in_str = false;
    for (size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_str = !in_str;
      if (line[i] == '#' && !in_str) {
        line.resize(i);
        break;
      }
    }
    line = strip(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::invalid_argument("toml line " + std::to_string(line_no) +
                                    ": malformed table header");
      }
      const std::string name = strip(line.substr(1, line.size() - 2));
      table = &root[name];
      if (table->is_null()) *table = nlohmann::json::object();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("toml line " + std::to_string(line_no) +
                                  ": expected key = value");
    }
    const std::string key = strip(line.substr(0, eq));
    std::string value = strip(line.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("toml line " + std::to_string(line_no) +
                                  ": empty key");
    }
    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']') {
        throw std::invalid_argument("toml line " + std::to_string(line_no) +
                                    ": unterminated array");
      }
      nlohmann::json arr = nlohmann::json::array();
      std::string body = value.substr(1, value.size() - 2);
      std::string cell;
      bool in_s = false;
      for (char ch : body) {
        if (ch == '"') in_s = !in_s;
        if (ch == ',' && !in_s) {
          if (!strip(cell).empty()) arr.push_back(parse_scalar(cell, line_no));
          cell.clear();
        } else {
          cell += ch;
        }
      }
      if (!strip(cell).empty()) arr.push_back(parse_scalar(cell, line_no));
      (*table)[key] = std::move(arr);
    } else {
      (*table)[key] = parse_scalar(value, line_no);
    }
  }
  return root;
}

}  // namespace tomlish

/// Experiment description consumed by the CLI commands. Exactly one input
/// source must be set.
struct ExperimentConfig {
  // [input]
  std::string fixture;     // named fixture: "example2" or "karate"
  std::string edge_list;   // edge-list file path
  std::string csv;         // csv matrix file path
  std::string inline_csv;  // literal csv text

  // [system]
  std::string sigma_mode = "auto";  // "sigma" | "shift" | "auto"
  std::optional<double> sigma;      // absent with sigma_critical: sigma = rho(B)
  bool sigma_critical = true;
  std::vector<double> shift_d_diag;
  std::optional<double> shift_d;    // absent: d = rho(C)

  // [scenario]
  std::string scenario = "extremists";

  // [gamma]
  std::string gamma_mode = "auto";  // "auto" | "explicit"
  std::vector<double> gamma;
  int gamma_budget = 5000;

  // [run]
  std::vector<double> x0;
  std::string sampler;              // used when x0 is empty
  std::map<int, double> pinned;     // 1-based agent -> face value
  double step = 1e-2;
  double t_max = 200.0;
  double convergence_tol = 1e-8;
  std::uint64_t seed = 0;

  // [verify]
  int samples = 50;
  double tol = 1e-4;
  double eps = 1e-3;
  int threads = 0;

  // [outputs]
  std::string trajectory_csv;
  std::string summary_json;
  std::string plot_svg;
};

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  auto get = [&](const char* sec, const char* key) -> const nlohmann::json* {
    if (!j.contains(sec)) return nullptr;
    const auto& s = j.at(sec);
    if (!s.contains(key)) return nullptr;
    return &s.at(key);
  };
  auto str = [&](const char* sec, const char* key, std::string& out) {
    if (const auto* v = get(sec, key)) out = v->get<std::string>();
  };

  str("input", "fixture", c.fixture);
  str("input", "edge_list", c.edge_list);
  str("input", "csv", c.csv);
  str("input", "inline_csv", c.inline_csv);
  int sources = !c.fixture.empty() + !c.edge_list.empty() + !c.csv.empty() +
                !c.inline_csv.empty();
  if (sources != 1) {
    throw std::invalid_argument(
        "config: exactly one [input] source required, got " +
        std::to_string(sources));
  }

  str("system", "mode", c.sigma_mode);
  if (const auto* v = get("system", "sigma")) {
    if (v->is_string()) {
      if (v->get<std::string>() != "rho") {
        throw std::invalid_argument("config: system.sigma must be a number or \"rho\"");
      }
      c.sigma_critical = true;
    } else {
      c.sigma = v->get<double>();
      c.sigma_critical = false;
    }
  }
  if (const auto* v = get("system", "D")) {
    c.shift_d_diag = v->get<std::vector<double>>();
  }
  if (const auto* v = get("system", "d")) {
    if (!v->is_string()) c.shift_d = v->get<double>();
  }

  str("scenario", "kind", c.scenario);

  str("gamma", "mode", c.gamma_mode);
  if (const auto* v = get("gamma", "values")) {
    c.gamma = v->get<std::vector<double>>();
    if (c.gamma_mode == "auto") c.gamma_mode = "explicit";
  }
  if (const auto* v = get("gamma", "budget")) c.gamma_budget = v->get<int>();

  if (const auto* v = get("run", "x0")) c.x0 = v->get<std::vector<double>>();
  str("run", "sampler", c.sampler);
  if (const auto* v = get("run", "pinned")) {
    // JSON form: {"3": 1.0, ...} with 1-based agent ids.
    for (auto it = v->begin(); it != v->end(); ++it) {
      c.pinned[std::stoi(it.key())] = it.value().get<double>();
    }
  }
  if (const auto* agents = get("run", "pinned_agents")) {
    // TOML-friendly parallel arrays.
    const auto* values = get("run", "pinned_values");
    if (!values || agents->size() != values->size()) {
      throw std::invalid_argument(
          "config: pinned_agents and pinned_values must have equal length");
    }
    for (size_t k = 0; k < agents->size(); ++k) {
      c.pinned[(*agents)[k].get<int>()] = (*values)[k].get<double>();
    }
  }
  if (const auto* v = get("run", "step")) c.step = v->get<double>();
  if (const auto* v = get("run", "t_max")) c.t_max = v->get<double>();
  if (const auto* v = get("run", "convergence_tol")) {
    c.convergence_tol = v->get<double>();
  }
  if (const auto* v = get("run", "seed")) c.seed = v->get<std::uint64_t>();

  if (const auto* v = get("verify", "samples")) c.samples = v->get<int>();
  if (const auto* v = get("verify", "tol")) c.tol = v->get<double>();
  if (const auto* v = get("verify", "eps")) c.eps = v->get<double>();
  if (const auto* v = get("verify", "threads")) c.threads = v->get<int>();

  str("outputs", "trajectory_csv", c.trajectory_csv);
  str("outputs", "summary_json", c.summary_json);
  str("outputs", "plot_svg", c.plot_svg);

  if (!(c.step > 0) || !(c.t_max > 0) || !(c.convergence_tol > 0) ||
      !(c.tol > 0)) {
    throw std::invalid_argument("config: steps and tolerances must be positive");
  }
  return c;
}

/// Loads a config from a .toml or .json file (decided by extension, JSON
/// accepted either way).
inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string text = ss.str();
  const bool json_like =
      path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  nlohmann::json j;
  if (json_like) {
    j = nlohmann::json::parse(text);
  } else {
    j = tomlish::parse(text);
  }
  return config_from_json(j);
}

}  // namespace odyn

#endif  // ODYN_CONFIG_HPP
