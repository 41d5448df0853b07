#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "kanneal/config.hpp"
#include "kanneal/errors.hpp"
#include "kanneal/harness.hpp"
#include "kanneal/landscape.hpp"
#include "kanneal/validation.hpp"

namespace kanneal::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir = ".";
  std::optional<std::uint64_t> replicas;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "Key-value config file or a previous run.json");
  cmd->add_option("--set", f.sets, "Override one key, key=value (repeatable)");
  cmd->add_option("--out", f.out_dir, "Output directory");
  cmd->add_option("--replicas", f.replicas, "Shorthand for --set run.replicas=N");
  cmd->add_option("--seed", f.seed, "Shorthand for --set run.seed=S");
  cmd->add_option("--threads", f.threads,
                  "Worker threads (default: $KINETIC_ANNEAL_THREADS, else all cores)");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a sibling temporary so readers never see a partial file.
void write_atomic(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << bytes;
    if (!out.flush()) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

ConfigMap load_config(const CommonFlags& f) {
  ConfigMap cfg;
  if (!f.config_path.empty()) {
    const std::string text = read_file(f.config_path);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
      json doc;
      try {
        doc = json::parse(text);
      } catch (const json::exception& e) {
        throw UsageError("'" + f.config_path + "': " + e.what());
      }
      const json& section = doc.contains("config") ? doc.at("config") : doc;
      if (!section.is_object()) throw UsageError("'" + f.config_path + "': no config object");
      for (const auto& [k, v] : section.items()) {
        cfg[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
    } else {
      cfg = parse_config_text(text);
    }
  }
  for (const auto& s : f.sets) apply_assignment(cfg, s);
  if (f.replicas) cfg["run.replicas"] = std::to_string(*f.replicas);
  if (f.seed) cfg["run.seed"] = std::to_string(*f.seed);
  return cfg;
}

unsigned resolve_threads(const CommonFlags& f) {
  if (f.threads) return std::max(1u, *f.threads);
  if (const char* env = std::getenv("KINETIC_ANNEAL_THREADS"); env && *env) {
    const auto n = parse_u64("KINETIC_ANNEAL_THREADS", env);
    return static_cast<unsigned>(std::clamp<std::uint64_t>(n, 1, 1024));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

json number_or_null(std::optional<double> v) {
  if (v && std::isfinite(*v)) return *v;
  return nullptr;
}

json config_json(const ConfigMap& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

struct RunOutcome {
  int code = kOk;
  std::optional<EnsembleResult> result;
  std::optional<RateEstimate> rate;
};

/// One ensemble into `dir`: ensemble.csv and run.json on success, run.json
/// alone (status "failed") when too many replicas diverged.
RunOutcome run_into(const RunConfig& rc, const fs::path& dir, unsigned threads,
                    std::ostream& err) {
  const PotentialPtr p = make_potential(rc.potential);
  const auto [e_star, source] = resolve_e_star(*p);
  if (e_star && rc.E <= *e_star) {
    err << "warning: E does not exceed critical depth (E = " << format_shortest(rc.E)
        << ", E* = " << format_shortest(*e_star) << ")\n";
  }

  const ConfigMap echo = to_config_map(rc);
  json doc;
  doc["config"] = config_json(echo);
  doc["config_hash"] = hex64(config_hash(rc));
  doc["e_star"] = number_or_null(e_star);
  doc["e_star_source"] = source;
  std::optional<double> expo;
  if (e_star && rc.E > *e_star) expo = theoretical_exponent(rc.delta, rc.E, *e_star);
  doc["theoretical_exponent"] = number_or_null(expo);

  fs::create_directories(dir);
  RunOutcome outcome;
  try {
    EnsembleResult res = run_ensemble(rc, p, EnsembleOptions{threads});
    doc["status"] = "ok";
    doc["replicas"] = res.replicas;
    doc["replicas_used"] = res.used;
    doc["divergences"] = res.divergences.size();
    json recs = json::array();
    for (const auto& d : res.divergences) {
      recs.push_back({{"replica", d.replica}, {"k", d.k}, {"T", d.T}, {"message", d.message}});
    }
    doc["divergence_records"] = recs;
    const auto window = rate_window_of(rc);
    try {
      outcome.rate = fit_rate(res, window);
      doc["rate"] = {{"fitted_slope", outcome.rate->fitted_slope},
                     {"intercept", outcome.rate->intercept},
                     {"window", {window.first, window.second}},
                     {"points", outcome.rate->points},
                     {"theoretical_exponent", number_or_null(outcome.rate->theoretical_exponent)}};
    } catch (const InsufficientDataError& e) {
      doc["rate"] = nullptr;
      doc["rate_error"] = e.what();
    }
    write_atomic(dir / "ensemble.csv", ensemble_csv(res));
    write_atomic(dir / "run.json", doc.dump(2) + "\n");
    if (!res.divergences.empty()) {
      err << "warning: " << res.divergences.size() << " replica(s) diverged and were excluded\n";
    }
    outcome.result = std::move(res);
  } catch (const EnsembleFailedError& e) {
    doc["status"] = "failed";
    doc["error"] = e.what();
    doc["divergences"] = e.divergences().size();
    write_atomic(dir / "run.json", doc.dump(2) + "\n");
    err << "error: " << e.what() << "\n";
    outcome.code = kRunFailed;
  }
  return outcome;
}

int cmd_run(const CommonFlags& f, std::ostream& out, std::ostream& err) {
  const RunConfig rc = run_config_from(load_config(f));
  const unsigned threads = resolve_threads(f);
  const RunOutcome o = run_into(rc, f.out_dir, threads, err);
  if (o.code == kOk) {
    out << "wrote " << (fs::path(f.out_dir) / "ensemble.csv").string() << " and run.json\n";
  }
  return o.code;
}

int cmd_sweep(const CommonFlags& f, std::ostream& out, std::ostream& err) {
  const ConfigMap base = load_config(f);
  const unsigned threads = resolve_threads(f);

  auto axis = [&](const std::string& sweep_key, const std::string& run_key,
                  const std::string& fallback) -> std::vector<std::string> {
    const auto it = base.find(sweep_key);
    if (it == base.end()) {
      const auto b = base.find(run_key);
      return {b == base.end() ? fallback : b->second};
    }
    auto items = parse_string_list(it->second);
    if (items.empty()) throw UsageError("sweep list '" + sweep_key + "' is empty");
    return items;
  };
  const bool any = base.contains("sweep.E") || base.contains("sweep.delta") ||
                   base.contains("sweep.C2") || base.contains("sweep.kernel");
  if (!any) throw UsageError("no sweep.E, sweep.delta, sweep.C2 or sweep.kernel list given");

  const auto Es = axis("sweep.E", "cooling.E", "");
  const auto deltas = axis("sweep.delta", "run.delta", "");
  const auto C2s = axis("sweep.C2", "steps.C2", "");
  const auto kernels = axis("sweep.kernel", "kernel", "");

  std::set<std::uint64_t> seen;
  std::string summary =
      "cell,config_hash,E,delta,C2,kernel,status,final_p_hat,fitted_slope,theoretical_exponent\n";
  std::size_t cells = 0, succeeded = 0;
  fs::create_directories(f.out_dir);
  for (const auto& E : Es) {
    for (const auto& delta : deltas) {
      for (const auto& C2 : C2s) {
        for (const auto& kernel : kernels) {
          ConfigMap m = base;
          if (!E.empty()) m["cooling.E"] = E;
          if (!delta.empty()) m["run.delta"] = delta;
          if (!C2.empty()) m["steps.C2"] = C2;
          if (!kernel.empty()) m["kernel"] = kernel;
          const RunConfig rc = run_config_from(m);
          const std::uint64_t hash = config_hash(rc);
          if (!seen.insert(hash).second) {
            err << "note: skipping duplicate cell " << hex64(hash) << "\n";
            continue;
          }
          const std::string name = "cell-" + hex64(hash).substr(2);
          ++cells;
          std::string status = "ok", p_final, slope, expo;
          try {
            const RunOutcome o = run_into(rc, fs::path(f.out_dir) / name, threads, err);
            if (o.code != kOk) {
              status = "diverged";
            } else {
              ++succeeded;
              p_final = format_fixed17(o.result->checkpoints.back().p_hat);
              if (o.rate) slope = format_fixed17(o.rate->fitted_slope);
              const auto& r = *o.result;
              if (r.e_star && r.E > *r.e_star) {
                expo = format_fixed17(theoretical_exponent(r.delta, r.E, *r.e_star));
              }
            }
          } catch (const std::exception& e) {
            status = "error";
            err << "error: cell " << name << ": " << e.what() << "\n";
          }
          summary += name + "," + hex64(hash) + "," + format_shortest(rc.E) + "," +
                     format_shortest(rc.delta) + "," + format_shortest(rc.C2) + "," +
                     std::string(to_string(rc.kernel)) + "," + status + "," + p_final + "," +
                     slope + "," + expo + "\n";
        }
      }
    }
  }
  write_atomic(fs::path(f.out_dir) / "sweep_summary.csv", summary);
  out << succeeded << " of " << cells << " cells succeeded\n";
  return succeeded > 0 ? kOk : kRunFailed;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

int cmd_rate(const std::string& in_dir, const std::vector<double>& window, std::ostream& out,
             std::ostream& err) {
  const json doc = [&] {
    try {
      return json::parse(read_file(fs::path(in_dir) / "run.json"));
    } catch (const json::exception& e) {
      throw UsageError(std::string("run.json: ") + e.what());
    }
  }();
  const std::string csv = read_file(fs::path(in_dir) / "ensemble.csv");
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  if (line != "checkpoint_T,p_hat,ci_lo,ci_hi,mean_U,mean_speed_sq,mean_R") {
    throw UsageError("ensemble.csv: unexpected header");
  }
  std::vector<double> T, p;
  std::size_t row = 1;
  while (std::getline(lines, line)) {
    ++row;
    const auto cells = split_csv_line(line);
    if (cells.size() != 7) throw UsageError("ensemble.csv row " + std::to_string(row) + ": 7 columns expected");
    T.push_back(parse_double("checkpoint_T", cells[0]));
    p.push_back(parse_double("p_hat", cells[1]));
  }

  const RunConfig rc = run_config_from([&] {
    ConfigMap m;
    for (const auto& [k, v] : doc.at("config").items()) m[k] = v.get<std::string>();
    return m;
  }());
  std::pair<double, double> w = rate_window_of(rc);
  if (!window.empty()) {
    if (window.size() != 2) throw UsageError("--window takes two values");
    w = {window[0], window[1]};
  }
  try {
    RateEstimate est = fit_loglog(T, p, w);
    json r = {{"fitted_slope", est.fitted_slope},
              {"intercept", est.intercept},
              {"window", {w.first, w.second}},
              {"points", est.points},
              {"theoretical_exponent", doc.value("theoretical_exponent", json(nullptr))}};
    out << r.dump(2) << "\n";
    return kOk;
  } catch (const InsufficientDataError& e) {
    err << "error: " << e.what() << "\n";
    return kNoRate;
  }
}

int cmd_depth(const CommonFlags& f, std::ostream& out) {
  const ConfigMap m = load_config(f);
  ConfigMap pm;
  for (const auto& [k, v] : m) {
    if (k.rfind("potential.", 0) == 0) pm[k] = v;
  }
  const RunConfig rc = run_config_from(pm);
  const PotentialPtr p = make_potential(rc.potential);
  if (p->dims() > 2) throw UsageError("depth: only 1D and 2D potentials are supported");
  GridSpec grid = default_depth_grid(*p);
  if (const auto it = m.find("depth.half_width"); it != m.end()) {
    grid = GridSpec::cube(p->dims(), parse_double(it->first, it->second), grid.resolution);
  }
  if (const auto it = m.find("depth.resolution"); it != m.end()) {
    grid.resolution = static_cast<std::size_t>(parse_u64(it->first, it->second));
  }
  const DepthReport rep = critical_depth(*p, grid);
  json minima = json::array();
  for (const auto& lm : rep.local_minima) {
    minima.push_back({{"location", lm.location}, {"value", lm.value}});
  }
  json doc = {{"family", std::string(p->family())},
              {"e_star", rep.e_star},
              {"grid_e_star", rep.grid_e_star},
              {"witness_min", rep.witness_min},
              {"witness_barrier", rep.witness_barrier},
              {"witness_saddle", rep.witness_saddle},
              {"local_minima", minima},
              {"global_minima", rep.global_minima},
              {"grid", {{"lo", grid.lo}, {"hi", grid.hi}, {"resolution", grid.resolution}}}};
  const std::string text = doc.dump(2) + "\n";
  out << text;
  if (!f.out_dir.empty() && f.out_dir != ".") {
    fs::create_directories(f.out_dir);
    write_atomic(fs::path(f.out_dir) / "depth.json", text);
  }
  return kOk;
}

int cmd_validate(const std::string& fault, double min_dt, std::ostream& out) {
  ValidationOptions opts;
  opts.min_dt = min_dt;
  if (fault == "s12_sign") {
    opts.covariance = noise_cov_s12_flipped;
  } else if (fault != "none") {
    throw UsageError("unknown fault '" + fault + "' (none|s12_sign)");
  }
  bool all = true;
  for (const auto& r : run_validation(opts)) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    all = all && r.passed;
  }
  return all ? kOk : kPropertyFailed;
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kinetic Langevin simulated annealing: ensembles, sweeps and diagnostics", "kanneal"};
  app.require_subcommand(1);

  CommonFlags run_flags, sweep_flags, depth_flags;
  auto* run = app.add_subcommand("run", "Run one replica ensemble");
  add_common(run, run_flags);
  auto* sweep = app.add_subcommand("sweep", "Cartesian sweep over sweep.E/delta/C2/kernel");
  add_common(sweep, sweep_flags);
  auto* depth = app.add_subcommand("depth", "Critical depth of the configured potential");
  add_common(depth, depth_flags);

  std::string rate_in;
  std::vector<double> rate_window;
  auto* rate = app.add_subcommand("rate", "Refit the decay rate of a finished run");
  rate->add_option("--in", rate_in, "Run directory holding ensemble.csv and run.json")->required();
  rate->add_option("--window", rate_window, "T_lo T_hi")->expected(2);

  std::string fault = "none";
  double min_dt = 1e-8;
  auto* validate = app.add_subcommand("validate", "Kernel, covariance and potential properties");
  validate->add_option("--inject-fault", fault)->group("");
  validate->add_option("--min-dt", min_dt)->group("");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(run_flags, out, err);
    if (*sweep) return cmd_sweep(sweep_flags, out, err);
    if (*depth) return cmd_depth(depth_flags, out);
    if (*rate) return cmd_rate(rate_in, rate_window, out, err);
    if (*validate) return cmd_validate(fault, min_dt, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ConstructionError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRunFailed;
  }
  return kConfigError;
}

}  // namespace kanneal::cli
