#include "kanneal/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <set>

#include "kanneal/errors.hpp"

namespace kanneal {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

const std::set<std::string, std::less<>>& run_keys() {
  static const std::set<std::string, std::less<>> keys = {
      "potential.family",  "potential.dims",         "potential.A",
      "potential.omega",   "potential.tilt",         "potential.splice_radius",
      "potential.curvature",
      "kernel",
      "cooling.E",         "cooling.t0",
      "steps.C1",          "steps.C2",               "steps.cap_policy",
      "steps.cap_override",
      "run.horizon",       "run.replicas",           "run.checkpoints",
      "run.checkpoints_per_decade",                  "run.first_checkpoint",
      "run.delta",         "run.seed",
      "init.x_sigma",      "init.y_sigma",
      "rate.window_lo",    "rate.window_hi",
  };
  return keys;
}

const std::set<std::string, std::less<>>& other_keys() {
  static const std::set<std::string, std::less<>> keys = {
      "sweep.E", "sweep.delta", "sweep.C2", "sweep.kernel", "depth.resolution", "depth.half_width",
  };
  return keys;
}

}  // namespace

ConfigMap parse_config_text(std::string_view text) {
  ConfigMap out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw UsageError("config line " + std::to_string(line_no) + ": empty key");
    if (!out.emplace(key, value).second) {
      throw UsageError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  return out;
}

void apply_assignment(ConfigMap& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw UsageError("override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(trim(assignment.substr(0, eq)));
  if (!is_declared_key(key)) throw UsageError("unknown config key '" + key + "'");
  cfg[key] = std::string(trim(assignment.substr(eq + 1)));
}

std::string canonical_text(const ConfigMap& cfg) {
  std::string out;
  for (const auto& [k, v] : cfg) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool is_declared_key(std::string_view key) {
  return run_keys().contains(key) || other_keys().contains(key);
}

std::string hex64(std::uint64_t v) {
  std::array<char, 17> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, 16);
  std::string digits(buf.data(), end);
  return "0x" + std::string(16 - digits.size(), '0') + digits;
}

std::string format_shortest(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

std::string format_fixed17(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] =
      std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), end);
}

double parse_double(std::string_view key, std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || text.empty()) {
    throw UsageError("config key '" + std::string(key) + "': '" + std::string(text) +
                     "' is not a number");
  }
  return v;
}

std::uint64_t parse_u64(std::string_view key, std::string_view text) {
  text = trim(text);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw UsageError("config key '" + std::string(key) + "': '" + std::string(text) +
                     "' is not a non-negative integer");
  }
  return v;
}

std::vector<std::string> parse_string_list(std::string_view text) {
  std::vector<std::string> out;
  while (true) {
    const auto comma = text.find(',');
    const auto item = trim(text.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
  }
  return out;
}

std::vector<double> parse_double_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  for (const auto& item : parse_string_list(text)) out.push_back(parse_double(key, item));
  return out;
}

RunConfig run_config_from(const ConfigMap& cfg) {
  for (const auto& [k, v] : cfg) {
    if (!is_declared_key(k)) throw UsageError("unknown config key '" + k + "'");
  }
  auto get = [&](std::string_view key) -> const std::string* {
    const auto it = cfg.find(std::string(key));
    return it == cfg.end() ? nullptr : &it->second;
  };
  auto num = [&](std::string_view key, double fallback) {
    const auto* s = get(key);
    return s ? parse_double(key, *s) : fallback;
  };

  RunConfig rc;
  const auto* family = get("potential.family");
  if (!family || family->empty()) throw UsageError("missing required key 'potential.family'");
  rc.potential.family = *family;
  if (const auto* d = get("potential.dims")) {
    rc.potential.dims = static_cast<std::size_t>(parse_u64("potential.dims", *d));
  }
  for (const char* p : {"A", "omega", "tilt", "splice_radius", "curvature"}) {
    const std::string key = std::string("potential.") + p;
    if (const auto* s = get(key)) rc.potential.params[p] = parse_double(key, *s);
  }
  try {
    rc.potential = canonical_spec(rc.potential);
  } catch (const UsageError& e) {
    throw UsageError(std::string(e.what()) + " (potential.family = " + *family + ")");
  }

  if (const auto* k = get("kernel")) rc.kernel = parse_kernel(*k);
  rc.E = num("cooling.E", rc.E);
  rc.t0 = num("cooling.t0", rc.t0);
  rc.C1 = num("steps.C1", rc.C1);
  rc.C2 = num("steps.C2", rc.C2);
  if (const auto* s = get("steps.cap_policy")) rc.cap_policy = parse_cap_policy(*s);
  if (const auto* s = get("steps.cap_override")) {
    rc.cap_override = parse_double("steps.cap_override", *s);
  }
  rc.horizon = num("run.horizon", rc.horizon);
  if (const auto* s = get("run.replicas")) {
    rc.replicas = static_cast<std::size_t>(parse_u64("run.replicas", *s));
  }
  rc.delta = num("run.delta", rc.delta);
  if (const auto* s = get("run.seed")) rc.base_seed = parse_u64("run.seed", *s);
  rc.init.x_sigma = num("init.x_sigma", rc.init.x_sigma);
  rc.init.y_sigma = num("init.y_sigma", rc.init.y_sigma);

  if (const auto* s = get("run.checkpoints")) {
    if (get("run.checkpoints_per_decade") || get("run.first_checkpoint")) {
      throw UsageError("run.checkpoints conflicts with run.checkpoints_per_decade/run.first_checkpoint");
    }
    rc.checkpoints = parse_double_list("run.checkpoints", *s);
  } else {
    const double per_decade = num("run.checkpoints_per_decade", 4.0);
    if (!(per_decade >= 1.0) || per_decade != std::floor(per_decade)) {
      throw UsageError("run.checkpoints_per_decade must be a positive integer");
    }
    const double first = num("run.first_checkpoint", std::min(1.0, rc.horizon));
    rc.checkpoints =
        log_spaced_checkpoints(first, rc.horizon, static_cast<std::size_t>(per_decade));
  }

  const auto* wlo = get("rate.window_lo");
  const auto* whi = get("rate.window_hi");
  if (wlo || whi) {
    const auto def = std::pair{rc.horizon / 100.0, rc.horizon};
    rc.rate_window = std::pair{wlo ? parse_double("rate.window_lo", *wlo) : def.first,
                               whi ? parse_double("rate.window_hi", *whi) : def.second};
  }
  rc.validate();
  return rc;
}

ConfigMap to_config_map(const RunConfig& rc) {
  ConfigMap m;
  m["potential.family"] = rc.potential.family;
  m["potential.dims"] = std::to_string(rc.potential.dims);
  for (const auto& [name, value] : canonical_spec(rc.potential).params) {
    m["potential." + name] = format_shortest(value);
  }
  m["kernel"] = std::string(to_string(rc.kernel));
  m["cooling.E"] = format_shortest(rc.E);
  m["cooling.t0"] = format_shortest(rc.t0);
  m["steps.C1"] = format_shortest(rc.C1);
  m["steps.C2"] = format_shortest(rc.C2);
  m["steps.cap_policy"] = std::string(to_string(rc.cap_policy));
  if (rc.cap_override) m["steps.cap_override"] = format_shortest(*rc.cap_override);
  m["run.horizon"] = format_shortest(rc.horizon);
  m["run.replicas"] = std::to_string(rc.replicas);
  std::string cps;
  for (std::size_t i = 0; i < rc.checkpoints.size(); ++i) {
    if (i) cps += ", ";
    cps += format_shortest(rc.checkpoints[i]);
  }
  m["run.checkpoints"] = cps;
  m["run.delta"] = format_shortest(rc.delta);
  m["run.seed"] = std::to_string(rc.base_seed);
  m["init.x_sigma"] = format_shortest(rc.init.x_sigma);
  m["init.y_sigma"] = format_shortest(rc.init.y_sigma);
  if (rc.rate_window) {
    m["rate.window_lo"] = format_shortest(rc.rate_window->first);
    m["rate.window_hi"] = format_shortest(rc.rate_window->second);
  }
  return m;
}

std::uint64_t config_hash(const RunConfig& cfg) {
  return fnv1a64(canonical_text(to_config_map(cfg)));
}

}  // namespace kanneal
