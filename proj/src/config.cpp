#include "sgldr/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "sgldr/errors.hpp"

namespace sgldr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Drops a trailing "# comment" that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

std::string unquote(const std::string& raw, std::size_t line) {
  if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') return raw.substr(1, raw.size() - 2);
  if (!raw.empty() && (raw.front() == '"' || raw.back() == '"')) throw ConfigError("unterminated string", line);
  return raw;
}

std::vector<std::string> split_list(const std::string& raw, std::size_t line) {
  if (raw.size() < 2 || raw.front() != '[' || raw.back() != ']') throw ConfigError("expected a [list]", line);
  std::vector<std::string> items;
  const std::string body = raw.substr(1, raw.size() - 2);
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    items.push_back(item);
  }
  return items;
}

double parse_number(const std::string& text, const std::string& key, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v)) {
    throw ConfigError("key '" + key + "' expects a number, got '" + text + "'", line);
  }
  return v;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"target",
       {"name", "rates", "weights", "dim", "data", "target_col", "split_seed", "test_fraction", "max_rows",
        "batch_size"}},
      {"sampler", {"method", "particles", "iterations", "burn_in", "thin", "noise", "repulsion_cutoff", "seed"}},
      {"step", {"schedule", "epsilon", "a", "b", "gamma"}},
      {"kernel", {"mode", "h"}},
      {"diagnostics", {"metrics", "mode_radius"}},
      {"output", {"dir"}},
  };
  return keys;
}

}  // namespace

ConfigDocument ConfigDocument::parse(const std::string& text) {
  ConfigDocument doc;
  doc.text_ = text;
  std::stringstream ss(text);
  std::string raw_line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(ss, raw_line)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw_line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header '" + line + "'", line_no);
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError("empty section name", line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value', got '" + line + "'", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key before '='", line_no);
    if (value.empty()) throw ConfigError("missing value for key '" + key + "'", line_no);
    const std::string full = section.empty() ? key : section + "." + key;
    if (doc.entries_.count(full)) throw ConfigError("duplicate key '" + full + "'", line_no);
    doc.entries_[full] = {value, line_no};
  }
  return doc;
}

ConfigDocument ConfigDocument::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::size_t ConfigDocument::line_of(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? 0 : it->second.line;
}

std::optional<std::string> ConfigDocument::get_string(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return unquote(it->second.raw, it->second.line);
}

std::optional<double> ConfigDocument::get_double(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return parse_number(it->second.raw, key, it->second.line);
}

std::optional<std::uint64_t> ConfigDocument::get_uint(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  const std::string& raw = it->second.raw;
  if (raw.empty() || raw.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("key '" + key + "' expects a non-negative integer, got '" + raw + "'", it->second.line);
  }
  try {
    return std::stoull(raw);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' is out of range", it->second.line);
  }
}

std::optional<bool> ConfigDocument::get_bool(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  if (it->second.raw == "true") return true;
  if (it->second.raw == "false") return false;
  throw ConfigError("key '" + key + "' expects true or false", it->second.line);
}

std::optional<std::vector<double>> ConfigDocument::get_double_list(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  std::vector<double> out;
  for (const auto& item : split_list(it->second.raw, it->second.line)) {
    out.push_back(parse_number(item, key, it->second.line));
  }
  return out;
}

std::optional<std::vector<std::string>> ConfigDocument::get_string_list(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& item : split_list(it->second.raw, it->second.line)) out.push_back(unquote(item, it->second.line));
  return out;
}

// ---------------------------------------------------------------------------

ExperimentConfig parse_experiment_config(const std::string& text) {
  const ConfigDocument doc = ConfigDocument::parse(text);
  for (const auto& [key, entry] : doc.entries()) {
    const auto dot = key.find('.');
    const std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
    const auto sec = known_keys().find(section);
    if (sec == known_keys().end()) {
      throw ConfigError(section.empty() ? "key '" + key + "' must appear inside a [section]"
                                        : "unknown key '" + key + "' (unknown section [" + section + "])",
                        entry.line);
    }
    if (!sec->second.count(name)) throw ConfigError("unknown key '" + key + "'", entry.line);
  }

  ExperimentConfig cfg;
  cfg.source_text = text;

  auto wrap = [&](const std::string& key, auto&& fn) {
    try {
      fn();
    } catch (const ArgumentError& e) {
      throw ConfigError(std::string(e.what()) + " (key '" + key + "')", doc.line_of(key));
    }
  };

  // [target]
  TargetSpec& t = cfg.target;
  if (auto v = doc.get_string("target.name")) t.name = *v;
  static const std::set<std::string> targets = {"moe", "mog3x3", "gauss-std", "bnn"};
  if (!targets.count(t.name)) {
    throw ConfigError("unknown target '" + t.name + "' (expected moe, mog3x3, gauss-std or bnn)",
                      doc.line_of("target.name"));
  }
  if (auto v = doc.get_double_list("target.rates")) t.rates = *v;
  if (auto v = doc.get_double_list("target.weights")) t.weights = *v;
  if (auto v = doc.get_uint("target.dim")) t.dim = static_cast<std::size_t>(*v);
  if (auto v = doc.get_string("target.data")) t.data_path = *v;
  if (auto v = doc.get_string("target.target_col")) t.target_column = *v;
  if (auto v = doc.get_uint("target.split_seed")) t.split_seed = *v;
  if (auto v = doc.get_double("target.test_fraction")) t.test_fraction = *v;
  if (auto v = doc.get_uint("target.max_rows")) t.max_rows = static_cast<std::size_t>(*v);
  if (auto v = doc.get_uint("target.batch_size")) t.batch_size = static_cast<std::size_t>(*v);

  auto only_for = [&](const std::string& key, const std::string& target_name) {
    if (doc.has(key) && t.name != target_name) {
      throw ConfigError("key '" + key + "' only applies to target '" + target_name + "'", doc.line_of(key));
    }
  };
  only_for("target.rates", "moe");
  only_for("target.weights", "moe");
  only_for("target.dim", "gauss-std");
  for (const char* key : {"target.data", "target.target_col", "target.split_seed", "target.test_fraction",
                          "target.max_rows", "target.batch_size"}) {
    only_for(key, "bnn");
  }
  if (t.name == "moe") {
    if (t.rates.size() != t.weights.size() || t.rates.empty()) {
      throw ConfigError("target.rates and target.weights must have the same non-zero length",
                        doc.line_of("target.rates"));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < t.rates.size(); ++i) {
      if (!(t.rates[i] > 0.0)) throw ConfigError("target.rates must be positive", doc.line_of("target.rates"));
      if (!(t.weights[i] >= 0.0)) throw ConfigError("target.weights must be non-negative", doc.line_of("target.weights"));
      sum += t.weights[i];
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("target.weights must sum to 1", doc.line_of("target.weights"));
    // Renormalize the decimal rounding of hand-written weights.
    for (double& w : t.weights) w /= sum;
  }
  if (t.name == "gauss-std" && t.dim == 0) throw ConfigError("target.dim must be >= 1", doc.line_of("target.dim"));
  if (t.name == "bnn") {
    if (t.data_path.empty()) throw ConfigError("target 'bnn' requires target.data");
    if (t.target_column.empty()) throw ConfigError("target 'bnn' requires target.target_col");
    if (!(t.test_fraction > 0.0 && t.test_fraction < 1.0)) {
      throw ConfigError("target.test_fraction must lie in (0, 1)", doc.line_of("target.test_fraction"));
    }
    if (t.batch_size == 0) throw ConfigError("target.batch_size must be >= 1", doc.line_of("target.batch_size"));
  }

  // [sampler]
  SamplerConfig& s = cfg.sampler;
  if (auto v = doc.get_string("sampler.method")) wrap("sampler.method", [&] { s.method = parse_method(*v); });
  if (auto v = doc.get_uint("sampler.particles")) s.particle_count = static_cast<std::size_t>(*v);
  if (auto v = doc.get_uint("sampler.iterations")) s.total_iterations = static_cast<std::size_t>(*v);
  if (auto v = doc.get_uint("sampler.burn_in")) s.burn_in = static_cast<std::size_t>(*v);
  if (auto v = doc.get_uint("sampler.thin")) s.thin = static_cast<std::size_t>(*v);
  if (auto v = doc.get_bool("sampler.noise")) s.noise_enabled = *v;
  if (auto v = doc.get_double("sampler.repulsion_cutoff")) s.repulsion_cutoff_fraction = *v;
  if (auto v = doc.get_uint("sampler.seed")) s.seed = *v;

  // [step]
  const std::string schedule = doc.get_string("step.schedule").value_or("constant");
  if (schedule == "constant") {
    for (const char* key : {"step.a", "step.b", "step.gamma"}) {
      if (doc.has(key)) {
        throw ConfigError(std::string("key '") + key + "' only applies to step.schedule = \"polynomial\"",
                          doc.line_of(key));
      }
    }
    s.step = StepSchedule::constant(doc.get_double("step.epsilon").value_or(s.step.epsilon));
  } else if (schedule == "polynomial") {
    if (doc.has("step.epsilon")) {
      throw ConfigError("key 'step.epsilon' only applies to step.schedule = \"constant\"", doc.line_of("step.epsilon"));
    }
    StepSchedule p = StepSchedule::polynomial(1e-3, 1.0, 0.55);
    if (auto v = doc.get_double("step.a")) p.a = *v;
    if (auto v = doc.get_double("step.b")) p.b = *v;
    if (auto v = doc.get_double("step.gamma")) p.gamma = *v;
    s.step = p;
  } else {
    throw ConfigError("step.schedule must be \"constant\" or \"polynomial\"", doc.line_of("step.schedule"));
  }

  // [kernel]
  if (auto v = doc.get_string("kernel.mode")) wrap("kernel.mode", [&] { s.kernel_mode = parse_kernel_mode(*v); });
  if (auto v = doc.get_double("kernel.h")) s.kernel_h = *v;
  if (s.kernel_mode == KernelMode::RbfFixed && !doc.has("kernel.h")) {
    throw ConfigError("kernel.mode = \"rbf-fixed\" requires kernel.h", doc.line_of("kernel.mode"));
  }
  if (s.kernel_mode != KernelMode::RbfFixed && doc.has("kernel.h")) {
    throw ConfigError("kernel.h is only used with kernel.mode = \"rbf-fixed\"", doc.line_of("kernel.h"));
  }

  // [diagnostics]
  if (auto v = doc.get_string_list("diagnostics.metrics")) {
    cfg.diagnostics.ess = cfg.diagnostics.moment_error = cfg.diagnostics.mode_coverage = false;
    for (const auto& m : *v) {
      if (m == "ess") {
        cfg.diagnostics.ess = true;
      } else if (m == "moment_error") {
        cfg.diagnostics.moment_error = true;
      } else if (m == "mode_coverage") {
        cfg.diagnostics.mode_coverage = true;
      } else {
        throw ConfigError("unknown metric '" + m + "' (expected ess, moment_error or mode_coverage)",
                          doc.line_of("diagnostics.metrics"));
      }
    }
  }
  if (auto v = doc.get_double("diagnostics.mode_radius")) {
    if (!(*v > 0.0)) throw ConfigError("diagnostics.mode_radius must be positive", doc.line_of("diagnostics.mode_radius"));
    cfg.diagnostics.mode_radius = *v;
  }

  // [output]
  if (auto v = doc.get_string("output.dir")) cfg.output_dir = *v;

  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("invalid sampler settings: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

}  // namespace sgldr
