#include "run.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "config.hpp"
#include "output.hpp"
#include "spinbus/errors.hpp"
#include "spinbus/linalg.hpp"

namespace spinbus::cli {

namespace {

using nlohmann::json;

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::vector<std::string> pair_columns(const std::string& prefix, int m) {
  std::vector<std::string> out;
  for (int v = 1; v <= m; ++v) out.push_back(prefix + std::to_string(v));
  return out;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

json params_json(const HamiltonianParams& p) { return {{"J", p.J}, {"J0", p.J0}, {"h0", p.h0}, {"h", p.h}}; }

std::string params_text(const HamiltonianParams& p) {
  std::string s = "J0=" + format_number(p.J0) + " h0=" + format_number(p.h0) + " h=[";
  for (std::size_t i = 0; i < p.h.size(); ++i) s += (i ? "," : "") + format_number(p.h[i]);
  return s + "]";
}

struct Outcome {
  std::string csv;
  json result;
  std::optional<json> replay;
  std::string summary;
};

Propagator propagator_for(const SystemLayout& l, const HamiltonianParams& p, const std::vector<SectorState>& states,
                          const PropagatorOptions& options) {
  std::vector<int> sectors;
  for (const SectorState& s : states) {
    for (const auto& [k, v] : s.sectors()) {
      if (std::find(sectors.begin(), sectors.end(), k) == sectors.end()) sectors.push_back(k);
    }
  }
  std::sort(sectors.begin(), sectors.end());
  return Propagator(build_hamiltonian(l, p, sectors), options);
}

std::vector<double> absolute_times(std::vector<double> jt, double j) {
  for (double& t : jt) t /= j;
  return jt;
}

Outcome run_evolve(const ExperimentConfig& c) {
  const SystemLayout l = c.layout();
  const int n = l.total_sites();
  const std::vector<SectorState> initial{encode_product_state(l, c.initial)};
  const Propagator prop = propagator_for(l, c.params, initial, c.evaluation.propagator);
  std::map<int, SectorBasis> bases;
  for (const auto& [k, v] : initial[0].sectors()) bases.emplace(k, sector_basis(l, k));

  std::vector<std::string> header{"Jt", "norm"};
  for (int i = 0; i < n; ++i) header.push_back("n" + std::to_string(i));
  CsvTable table(header);
  double max_norm_error = 0.0;
  const std::vector<double> times = absolute_times(c.times, c.params.J);
  prop.sweep(initial, times, [&](std::size_t ti, std::span<const SectorState> states) {
    std::vector<double> occupation(n, 0.0);
    for (const auto& [k, amps] : states[0].sectors()) {
      const SectorBasis& basis = bases.at(k);
      for (std::size_t r = 0; r < basis.dimension(); ++r) {
        const double w = std::norm(amps[static_cast<Eigen::Index>(r)]);
        for (Bits b = basis.state(r); b != 0; b &= b - 1) occupation[std::countr_zero(b)] += w;
      }
    }
    const double norm = states[0].norm();
    max_norm_error = std::max(max_norm_error, std::abs(norm - 1.0));
    std::vector<double> row{c.times[ti], norm};
    row.insert(row.end(), occupation.begin(), occupation.end());
    table.add_row(row);
  });
  Outcome o;
  o.csv = table.str();
  o.result = {{"samples", c.times.size()}, {"max_norm_error", max_norm_error}};
  o.summary = "evolve: " + std::to_string(c.times.size()) + " samples, max |norm-1| " + format_number(max_norm_error);
  return o;
}

Outcome run_fidelity(const ExperimentConfig& c) {
  const SystemLayout l = c.layout();
  CsvTable table(concat({"Jtau", "F"}, pair_columns("F_", c.M)));
  std::size_t index = 0;
  const PointResult r = evaluate_point(l, c.params, c.times, c.evaluation, [&](const FidelityReport& f) {
    std::vector<double> row{c.times[index++], f.mean};
    row.insert(row.end(), f.per_pair.begin(), f.per_pair.end());
    table.add_row(row);
  });
  if (!r.ok) throw NumericalError(r.error);
  Outcome o;
  o.csv = table.str();
  o.result = {{"fidelity", r.fidelity}, {"tau", r.tau}, {"per_pair", r.per_pair}, {"params", params_json(r.params)}};
  o.summary = "fidelity: max F " + format_number(r.fidelity) + " at Jtau " + format_number(r.tau) + " with " +
              params_text(r.params);
  return o;
}

Outcome run_optimize(const ExperimentConfig& c, int workers) {
  const SystemLayout l = c.layout();
  const OptimizationResult r = optimize(l, c.strategy, c.evaluation, workers);
  CsvTable table(concat(concat({"J", "J0", "h0"}, pair_columns("h_", c.M)),
                        concat({"Jtau", "F"}, pair_columns("F_", c.M))));
  for (const PointResult& p : r.landscape) {
    std::vector<double> row{p.params.J, p.params.J0, p.params.h0};
    row.insert(row.end(), p.params.h.begin(), p.params.h.end());
    row.push_back(p.ok ? p.tau : std::nan(""));
    row.push_back(p.ok ? p.fidelity : std::nan(""));
    for (int v = 0; v < c.M; ++v) row.push_back(p.ok ? p.per_pair[v] : std::nan(""));
    table.add_row(row);
  }
  if (!r.best.ok) throw NumericalError("no grid point could be evaluated: " + r.best.error);
  Outcome o;
  o.csv = table.str();
  o.replay = replay_config(c, r.best.params, r.best.tau);
  o.result = {{"fidelity", r.best.fidelity}, {"tau", r.best.tau},       {"per_pair", r.best.per_pair},
              {"params", params_json(r.best.params)}, {"evaluated", r.evaluated}, {"failed", r.failed},
              {"replay", *o.replay}};
  o.summary = "optimize: best F " + format_number(r.best.fidelity) + " at Jtau " + format_number(r.best.tau) + " with " +
              params_text(r.best.params) + " (" +
              std::to_string(r.evaluated) + " points, " + std::to_string(r.failed) + " failed)";
  return o;
}

Outcome run_noise(const ExperimentConfig& c, int workers) {
  const SystemLayout l = c.layout();
  CsvTable table(concat({"gamma_over_J", "F"}, pair_columns("F_", c.M)));
  json rows = json::array();
  for (double g : c.gammas) {
    NoiseSpec spec = c.noise;
    spec.gamma = g;
    const FidelityReport f = noisy_mean_fidelity(l, c.params, c.tau, spec, c.evaluation, workers);
    std::vector<double> row{g, f.mean};
    row.insert(row.end(), f.per_pair.begin(), f.per_pair.end());
    table.add_row(row);
    rows.push_back({{"gamma_over_J", g}, {"fidelity", f.mean}, {"per_pair", f.per_pair}});
  }
  Outcome o;
  o.csv = table.str();
  o.result = {{"tau", c.tau}, {"points", rows}};
  o.summary = "noise: " + std::to_string(c.gammas.size()) + " dephasing rates at Jtau " + format_number(c.tau);
  return o;
}

Outcome run_twoway(const ExperimentConfig& c) {
  const SystemLayout l = c.layout();
  c.scenario.validate(l);
  const std::vector<SectorState> states{encode_product_state(l, c.scenario.initial()),
                                        encode_product_state(l, c.scenario.transmitted()),
                                        encode_product_state(l, c.scenario.crosstalk())};
  const Propagator prop = propagator_for(l, c.params, states, c.evaluation.propagator);
  const std::vector<double> times = absolute_times(c.times, c.params.J);
  const TwoWaySeries s = transmission_and_crosstalk(l, prop, c.scenario, times);
  CsvTable table({"Jt", "transmission", "crosstalk"});
  std::size_t peak_index = 0;
  for (std::size_t i = 0; i < s.samples.size(); ++i) {
    table.add_row({c.times[i], s.samples[i].transmission, s.samples[i].crosstalk});
    if (s.samples[i].transmission > s.samples[peak_index].transmission) peak_index = i;
  }
  Outcome o;
  o.csv = table.str();
  const double peak_jt = s.samples.empty() ? 0.0 : c.times[peak_index];
  o.result = {{"peak_transmission", s.peak.transmission},
              {"peak_Jt", peak_jt},
              {"crosstalk_at_peak", s.peak.crosstalk},
              {"max_crosstalk", s.max_crosstalk}};
  o.summary = "twoway: peak transmission " + format_number(s.peak.transmission) + " at Jt " + format_number(peak_jt) +
              ", max crosstalk " + format_number(s.max_crosstalk);
  return o;
}

}  // namespace

Artifacts run_experiment(const RunOptions& options, std::ostream& summary, std::ostream& log) {
  if (options.workers < 1) throw ConfigError("--workers: expected at least one worker");
  const auto start = std::chrono::steady_clock::now();
  const ExperimentConfig c = parse_config(read_text(options.config), options.seed);
  const std::string name = to_string(c.command) + "-" + hex(fnv1a(c.document.dump()));

  Outcome o;
  switch (c.command) {
    case Command::Evolve: o = run_evolve(c); break;
    case Command::Fidelity: o = run_fidelity(c); break;
    case Command::Optimize: o = run_optimize(c, options.workers); break;
    case Command::Noise: o = run_noise(c, options.workers); break;
    case Command::TwoWay: o = run_twoway(c); break;
  }

  std::error_code ec;
  std::filesystem::create_directories(options.out, ec);
  if (ec) throw std::runtime_error(options.out.string() + ": " + ec.message());
  Artifacts a;
  a.csv = options.out / (name + ".csv");
  a.json = options.out / (name + ".json");
  json doc = {{"command", to_string(c.command)}, {"config", c.document}, {"result", o.result}};
  write_file(a.csv, o.csv);
  write_file(a.json, dump(doc));
  if (o.replay) {
    a.replay = options.out / (name + ".replay.json");
    write_file(a.replay, dump(*o.replay));
  }

  summary << o.summary << "\n";
  if (options.verbose) {
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    log << "elapsed " << format_number(elapsed.count()) << " s, lapack fallbacks " << lapack_fallback_count()
        << "\nwrote " << a.csv.string() << "\nwrote " << a.json.string() << "\n";
    if (!a.replay.empty()) log << "wrote " << a.replay.string() << "\n";
  }
  return a;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Gate transfer through a spin chain bus"};
  RunOptions options;
  std::uint64_t seed = 0;
  app.add_option("--config", options.config, "JSON experiment config")->required();
  app.add_option("--out", options.out, "Output directory")->capture_default_str();
  app.add_option("--workers", options.workers, "Worker threads")->capture_default_str();
  auto* seed_option = app.add_option("--seed", seed, "Override the config seed");
  app.add_flag("--verbose", options.verbose, "Print timings to stderr");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }
  if (seed_option->count() > 0) options.seed = seed;

  try {
    run_experiment(options, std::cout, std::cerr);
    return kSuccess;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
}

}  // namespace spinbus::cli
