// nbody: generate initial conditions, run and validate simulations on the
// emulated tile engine, and benchmark time/energy-to-solution.
//
// Exit codes: 0 success/pass, 1 validation failure, 2 usage error,
// 3 runtime failure.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tnbody/bench.hpp"
#include "tnbody/engine.hpp"
#include "tnbody/initial_conditions.hpp"
#include "tnbody/integrator.hpp"
#include "tnbody/oracle.hpp"
#include "tnbody/snapshot.hpp"
#include "tnbody/validation.hpp"

namespace {

using namespace tnbody;

constexpr int kExitOk = 0;
constexpr int kExitValidationFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct EngineFlags {
  std::size_t cores = 1;
  std::size_t cb_capacity = 2;
  double watchdog = 5.0;
  bool oversubscribe = false;

  void add(CLI::App* app) {
    app->add_option("--cores", cores, "Virtual compute cores")->capture_default_str();
    app->add_option("--cb-capacity", cb_capacity, "Circular buffer capacity in tiles")->capture_default_str();
    app->add_option("--watchdog", watchdog, "Deadlock watchdog, seconds")->capture_default_str();
    app->add_flag("--oversubscribe", oversubscribe, "Allow more than 64 virtual cores");
  }

  EngineConfig config(double softening) const {
    EngineConfig e;
    e.num_cores = cores;
    e.cb_capacity_tiles = cb_capacity;
    e.watchdog_seconds = watchdog;
    e.softening = softening;
    e.allow_oversubscription = oversubscribe;
    return e;
  }
};

struct SimFlags {
  std::string ic;
  std::string backend = "engine";
  std::size_t cycles = 10;
  double dt = kDefaultDt;
  double softening = 0.0;
  std::size_t threads = 1;
  EngineFlags engine;

  void add(CLI::App* app, bool with_cycles) {
    app->add_option("--ic", ic, "Initial-condition snapshot")->required();
    app->add_option("--backend", backend, "engine | cpu_reference | oracle")->capture_default_str();
    app->add_option("--softening", softening, "Plummer softening length")->capture_default_str();
    app->add_option("--threads", threads, "Threads for the cpu_reference backend")->capture_default_str();
    if (with_cycles) {
      app->add_option("--cycles", cycles, "Time steps")->capture_default_str();
      app->add_option("--dt", dt, "Shared time step")->capture_default_str();
    }
    engine.add(app);
  }

  SimulationConfig config() const {
    SimulationConfig c;
    c.dt = dt;
    c.cycles = cycles;
    c.backend = parse_backend(backend);
    c.softening = softening;
    c.cpu_threads = threads;
    c.engine = engine.config(softening);
    return c;
  }
};

void print_config(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& kv) {
  for (const auto& [k, v] : kv) os << "# config " << k << '=' << v << '\n';
}

std::string num(double v) { return detail::fmt17(v); }

std::vector<std::pair<std::string, std::string>> sim_config_kv(const SimFlags& f) {
  return {{"ic", f.ic},
          {"backend", f.backend},
          {"cycles", std::to_string(f.cycles)},
          {"dt", num(f.dt)},
          {"softening", num(f.softening)},
          {"threads", std::to_string(f.threads)},
          {"cores", std::to_string(f.engine.cores)},
          {"cb_capacity", std::to_string(f.engine.cb_capacity)},
          {"watchdog", num(f.engine.watchdog)},
          {"accel_tolerance", num(kAccelTolerance)},
          {"jerk_tolerance", num(kJerkTolerance)}};
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::unique_ptr<PowerProvider> make_provider(const std::string& spec, double synthetic_watts, double counter_scale) {
  if (spec == "synthetic") return std::make_unique<SyntheticProvider>(synthetic_watts);
  if (spec.rfind("replay:", 0) == 0) return std::make_unique<ReplayProvider>(ReplayProvider::from_file(spec.substr(7)));
  if (spec.rfind("counters:", 0) == 0) {
    const auto paths = split(spec.substr(9), ',');
    return std::make_unique<CounterFileProvider>(CounterFileProvider::from_paths(paths, counter_scale));
  }
  throw ConfigError("unknown power provider '" + spec + "' (synthetic | replay:FILE | counters:PATH[,PATH...])");
}

std::string stem_without_ext(const std::string& path) {
  std::filesystem::path p(path);
  return (p.parent_path() / p.stem()).string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write " + path);
  os << content;
}

// Splices "--key value" pairs from a key=value config file in right after the
// subcommand name, skipping keys already given on the command line. Unknown
// keys then surface as unknown flags. Keys may use '_' for '-'; a boolean
// value of true/false toggles a flag.
std::vector<std::string> apply_config_file(std::vector<std::string> args, const std::vector<std::string>& subcommands,
                                           std::string path) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (path.empty()) return args;
  auto sub = std::find_if(args.begin(), args.end(), [&](const std::string& a) {
    return std::find(subcommands.begin(), subcommands.end(), a) != subcommands.end();
  });
  if (sub == args.end()) return args;

  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  std::vector<std::string> extra;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string v) {
      const auto b = v.find_first_not_of(" \t\r\"");
      const auto e = v.find_last_not_of(" \t\r\"");
      return b == std::string::npos ? std::string{} : v.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string flag = "--" + key;
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (given) continue;
    if (value == "true") {
      extra.push_back(flag);
    } else if (value != "false") {
      extra.push_back(flag);
      extra.push_back(value);
    }
  }
  args.insert(sub + 1, extra.begin(), extra.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Direct N-body simulation on an emulated tile dataflow engine"};
  app.require_subcommand(1);
  std::string default_config;
  if (const char* env = std::getenv("TNBODY_CONFIG")) default_config = env;

  // generate
  auto* gen = app.add_subcommand("generate", "Write seeded initial conditions");
  std::string gen_model = "plummer", gen_out;
  std::size_t gen_n = 102400;
  std::uint64_t gen_seed = 42;
  double gen_scale = 0.0;
  gen->add_option("--model", gen_model, "plummer | uniform_sphere | two_body_circular")->capture_default_str();
  gen->add_option("--n", gen_n, "Particle count")->capture_default_str();
  gen->add_option("--seed", gen_seed, "PRNG seed")->capture_default_str();
  gen->add_option("--scale", gen_scale, "Scale radius (0 = model default)");
  gen->add_option("--out", gen_out, "Output snapshot")->required();

  // run
  auto* run = app.add_subcommand("run", "Integrate a system for a number of cycles");
  SimFlags run_flags;
  run_flags.engine.cores = 64;
  run_flags.add(run, true);
  std::string run_out;
  std::size_t snapshot_every = 0;
  run->add_option("--out", run_out, "Final snapshot")->required();
  run->add_option("--snapshot-every", snapshot_every, "Also write <out>.<cycle> every k cycles");

  // validate
  auto* val = app.add_subcommand("validate", "Compare a backend's forces with the FP64 oracle");
  SimFlags val_flags;
  val_flags.add(val, false);
  std::string val_kv_out;
  val->add_option("--kv-out", val_kv_out, "Write the report as key=value lines");

  // bench
  auto* bench = app.add_subcommand("bench", "Measure time- and energy-to-solution");
  SimFlags bench_flags;
  bench_flags.add(bench, true);
  std::size_t repeats = 1;
  double sleep_pad = 120.0, interval = 1.0, synthetic_watts = 10.0, counter_scale = 1e-6;
  std::string provider_spec = "synthetic", bench_out, bench_label, trace_out;
  bench->add_option("--repeats", repeats, "Repeats")->capture_default_str();
  bench->add_option("--sleep-pad", sleep_pad, "Idle seconds before and after each run")->capture_default_str();
  bench->add_option("--interval", interval, "Power sampling interval, seconds")->capture_default_str();
  bench->add_option("--provider", provider_spec, "synthetic | replay:FILE | counters:PATH[,PATH...]")
      ->capture_default_str();
  bench->add_option("--synthetic-watts", synthetic_watts, "Reading of the synthetic provider")->capture_default_str();
  bench->add_option("--counter-scale", counter_scale, "Joules per counter unit")->capture_default_str();
  bench->add_option("--label", bench_label, "Report label (default: backend name)");
  bench->add_option("--trace-out", trace_out, "Write each run's power trace to <prefix>.<k>.csv");
  bench->add_option("--out", bench_out, "Report file")->required();

  // report
  auto* rep = app.add_subcommand("report", "Summarise and compare benchmark reports");
  std::vector<std::string> rep_in;
  std::string rep_out;
  rep->add_option("--in", rep_in, "Report files: candidate first, then reference")->required()->expected(1, 2);
  rep->add_option("--out", rep_out, "Comparison CSV")->required();

  std::string config_path;
  for (auto* sub : {gen, run, val, bench, rep})
    sub->add_option("--config", config_path, "key=value file of default flag values (also $TNBODY_CONFIG)");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = apply_config_file(args, {"generate", "run", "validate", "bench", "report"}, default_config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  std::reverse(args.begin(), args.end());

  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen) {
      ICSpec spec;
      spec.model = parse_ic_model(gen_model);
      spec.n = gen_n;
      spec.seed = gen_seed;
      if (gen_scale > 0.0) spec.scale_radius = gen_scale;
      print_config(std::cout, {{"model", gen_model},
                               {"n", std::to_string(gen_n)},
                               {"seed", std::to_string(gen_seed)},
                               {"scale", num(spec.scale())},
                               {"out", gen_out}});
      save_snapshot(gen_out, generate(spec));
      std::cout << "wrote " << gen_n << " particles to " << gen_out << '\n';
      return kExitOk;
    }

    if (*run) {
      auto cfg = run_flags.config();
      cfg.snapshot_every = snapshot_every;
      auto kv = sim_config_kv(run_flags);
      kv.emplace_back("out", run_out);
      print_config(std::cout, kv);
      const auto ic = load_snapshot(run_flags.ic);
      const auto e0 = total_energy(ic, cfg.softening);
      auto res = run_simulation(cfg, ic, [&](std::size_t c, const ParticleSystem& s) {
        save_snapshot(run_out + "." + std::to_string(c), s);
      });
      save_snapshot(run_out, res.final_state);
      const auto e1 = total_energy(res.final_state, cfg.softening);
      std::cout << "time_to_solution_s=" << num(res.timing.time_to_solution_s) << '\n';
      std::cout << "cycles=" << res.cycles << '\n';
      std::cout << "energy_initial=" << num(e0) << '\n';
      std::cout << "energy_final=" << num(e1) << '\n';
      std::cout << "relative_energy_error=" << num(std::abs((e1 - e0) / e0)) << '\n';
      return kExitOk;
    }

    if (*val) {
      const auto cfg = val_flags.config();
      cfg.validate();
      print_config(std::cout, sim_config_kv(val_flags));
      const auto ic = load_snapshot(val_flags.ic);
      const auto golden = brute_force_fp64(ic, cfg.softening);
      const auto candidate = make_force_provider(cfg)(ic);
      const auto report = validate(candidate, golden);
      write_text(std::cout, report);
      write_key_values(std::cout, report);
      if (!val_kv_out.empty()) {
        std::ofstream os(val_kv_out);
        write_key_values(os, report);
      }
      return report.pass ? kExitOk : kExitValidationFail;
    }

    if (*bench) {
      const auto job = bench_flags.config();
      job.validate();
      BenchmarkConfig bc;
      bc.repeats = repeats;
      bc.sleep_pad_s = sleep_pad;
      bc.sample_interval_s = interval;
      bc.label = bench_label.empty() ? bench_flags.backend : bench_label;
      auto kv = sim_config_kv(bench_flags);
      kv.insert(kv.end(), {{"repeats", std::to_string(repeats)},
                           {"sleep_pad", num(sleep_pad)},
                           {"interval", num(interval)},
                           {"provider", provider_spec},
                           {"label", bc.label}});
      print_config(std::cout, kv);
      const auto ic = load_snapshot(bench_flags.ic);
      auto provider = make_provider(provider_spec, synthetic_watts, counter_scale);
      SteadyClock clock;
      std::vector<PowerTrace> traces;
      BenchReport report = run_benchmark(bc, job, ic, *provider, clock, &traces);
      for (const auto& [k, v] : kv) report.config[k] = v;
      save_report(bench_out, report);
      if (!trace_out.empty())
        for (std::size_t k = 0; k < traces.size(); ++k)
          save_trace_csv(trace_out + "." + std::to_string(k) + ".csv", traces[k]);
      std::cout << "runs_ok=" << report.runs_ok << " runs_failed=" << report.runs_failed << '\n';
      for (const auto& r : report.runs)
        if (!r.ok) std::cout << "run " << r.index << " failed: " << r.error << '\n';
      if (!report.valid) {
        std::cerr << "all repeats failed; report marked invalid\n";
        return kExitRuntime;
      }
      std::cout << "time_to_solution_s: " << format_mean_sd(report.time, 3) << '\n';
      std::cout << "energy_to_solution_J: " << format_mean_sd(report.energy, 3) << '\n';
      return kExitOk;
    }

    if (*rep) {
      std::vector<BenchReport> reports;
      for (const auto& p : rep_in) reports.push_back(load_report(p));
      const std::string stem = stem_without_ext(rep_out);
      std::ostringstream csv;
      csv << "label,metric,count,mean,stddev\n";
      for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        if (!r.valid) throw InputError("report " + rep_in[i] + " has no valid runs");
        csv << r.label << ",time_to_solution_s," << r.time.count << ',' << num(r.time.mean) << ','
            << num(r.time.stddev) << '\n';
        csv << r.label << ",energy_total_J," << r.energy.count << ',' << num(r.energy.mean) << ','
            << num(r.energy.stddev) << '\n';
        std::cout << r.label << ": time " << format_mean_sd(r.time, 3) << " s, energy "
                  << format_mean_sd(r.energy, 3) << " J over " << r.runs_ok << " runs (" << r.runs_failed
                  << " failed)\n";
        const std::string tag = stem + "." + std::to_string(i) + "." + r.label;
        write_file(tag + ".time_hist.csv", emit_histogram(r, Metric::time_to_solution));
        write_file(tag + ".energy_hist.csv", emit_histogram(r, Metric::energy_to_solution));
      }
      if (reports.size() == 2) {
        const auto cmp = compare(reports[0], reports[1]);
        csv << "ratio,speedup,,"  << num(cmp.speedup) << ",\n";
        csv << "ratio,energy_ratio,," << num(cmp.energy_ratio) << ",\n";
        std::cout << "speedup=" << format_ratio(cmp.speedup) << '\n';
        std::cout << "energy_ratio=" << format_ratio(cmp.energy_ratio) << '\n';
      }
      write_file(rep_out, csv.str());
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
