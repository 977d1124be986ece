#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <string_view>

#include "spinbus/errors.hpp"

namespace spinbus::cli {

namespace {

using nlohmann::json;

class Field {
 public:
  Field(const json& value, std::string path) : value_(&value), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& message) const { throw ConfigError(path_ + ": " + message); }

  const json& value() const { return *value_; }
  const std::string& path() const { return path_; }

  void expect_object() const {
    if (!value_->is_object()) fail("expected an object");
  }

  // Rejects keys outside `allowed`.
  void only(const std::vector<std::string_view>& allowed) const {
    expect_object();
    for (const auto& [key, v] : value_->items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        throw ConfigError(path_ + "." + key + ": unknown key");
      }
    }
  }

  std::optional<Field> find(const std::string& key) const {
    expect_object();
    const auto it = value_->find(key);
    if (it == value_->end()) return std::nullopt;
    return Field(*it, path_ + "." + key);
  }

  Field at(const std::string& key) const {
    auto f = find(key);
    if (!f) fail("missing required key '" + key + "'");
    return *f;
  }

  std::size_t size() const {
    if (!value_->is_array()) fail("expected an array");
    return value_->size();
  }

  Field element(std::size_t i) const { return Field((*value_)[i], path_ + "[" + std::to_string(i) + "]"); }

  double number() const {
    if (!value_->is_number()) fail("expected a number");
    const double x = value_->get<double>();
    if (!std::isfinite(x)) fail("expected a finite number");
    return x;
  }

  double positive() const {
    const double x = number();
    if (!(x > 0.0)) fail("expected a positive number");
    return x;
  }

  long integer() const {
    if (!value_->is_number_integer()) fail("expected an integer");
    return value_->get<long>();
  }

  std::uint64_t unsigned_integer() const {
    if (value_->is_number_unsigned()) return value_->get<std::uint64_t>();
    if (value_->is_number_integer() && value_->get<long>() >= 0) return static_cast<std::uint64_t>(value_->get<long>());
    fail("expected a non-negative integer");
  }

  bool boolean() const {
    if (!value_->is_boolean()) fail("expected true or false");
    return value_->get<bool>();
  }

  std::string string() const {
    if (!value_->is_string()) fail("expected a string");
    return value_->get<std::string>();
  }

 private:
  const json* value_;
  std::string path_;
};

// Runs `body`, turning library validation errors into config errors at `path`.
template <class Body>
auto checked(const std::string& path, Body&& body) {
  try {
    return body();
  } catch (const DomainError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

GridRange grid_range(const Field& f) {
  if (f.value().is_number()) return GridRange::single(f.number());
  f.only({"min", "max", "step"});
  GridRange g{f.at("min").number(), f.at("max").number(), f.at("step").positive()};
  checked(f.path(), [&] { return g.values(); });
  return g;
}

// A number, a list of numbers, or a {min, max, step} grid.
std::vector<double> number_list(const Field& f) {
  std::vector<double> out;
  if (f.value().is_number()) {
    out.push_back(f.number());
  } else if (f.value().is_array()) {
    for (std::size_t i = 0; i < f.size(); ++i) out.push_back(f.element(i).number());
  } else if (f.value().is_object()) {
    out = grid_range(f).values();
  } else {
    f.fail("expected a number, a list of numbers or a {min, max, step} grid");
  }
  if (out.empty()) f.fail("list is empty");
  return out;
}

std::vector<double> time_list(const Field& f) {
  std::vector<double> out = number_list(f);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] < 0.0) f.fail("times must be non-negative");
    if (i > 0 && out[i] < out[i - 1]) f.fail("times must be non-decreasing");
  }
  return out;
}

QubitState qubit(const Field& f) {
  if (f.value().is_string()) {
    const std::string s = f.string();
    if (s == "0" || s == "zero") return QubitState::ground();
    if (s == "1" || s == "one") return QubitState::excited();
    if (s == "+" || s == "plus") return QubitState::plus();
    if (s == "-" || s == "minus") return QubitState::minus();
    if (s == "+i" || s == "plus_i") return {Complex(1.0 / std::sqrt(2.0), 0.0), Complex(0.0, 1.0 / std::sqrt(2.0))};
    if (s == "-i" || s == "minus_i") return {Complex(1.0 / std::sqrt(2.0), 0.0), Complex(0.0, -1.0 / std::sqrt(2.0))};
    f.fail("unknown qubit state '" + s + "' (expected zero, one, plus, minus, plus_i, minus_i)");
  }
  f.only({"zero", "one"});
  auto amplitude = [](const Field& a) {
    if (a.size() != 2) a.fail("expected [re, im]");
    return Complex(a.element(0).number(), a.element(1).number());
  };
  const QubitState q{amplitude(f.at("zero")), amplitude(f.at("one"))};
  if (std::abs(q.norm_squared() - 1.0) > 1e-10) f.fail("qubit state is not normalized");
  return q;
}

std::vector<QubitState> qubit_list(const Field& f, int m) {
  if (f.size() != static_cast<std::size_t>(m)) f.fail("expected " + std::to_string(m) + " qubit states");
  std::vector<QubitState> out;
  for (std::size_t i = 0; i < f.size(); ++i) out.push_back(qubit(f.element(i)));
  return out;
}

HamiltonianParams hamiltonian_params(const Field& f, const SystemLayout& layout) {
  f.only({"J", "J0", "h0", "h"});
  HamiltonianParams p;
  if (auto x = f.find("J")) p.J = x->positive();
  if (auto x = f.find("J0")) p.J0 = x->number();
  if (auto x = f.find("h0")) p.h0 = x->number();
  const Field h = f.at("h");
  for (std::size_t i = 0; i < h.size(); ++i) p.h.push_back(h.element(i).number());
  checked(f.path(), [&] {
    p.validate(layout);
    return 0;
  });
  return p;
}

StrategySpec strategy_spec(const Field& f, const SystemLayout& layout) {
  f.only({"kind", "J", "j0", "h0", "h", "tau", "refine_passes"});
  const Field kind = f.at("kind");
  StrategySpec s = default_strategy(checked(kind.path(), [&] { return parse_strategy(kind.string()); }),
                                    layout.pair_count());
  if (auto x = f.find("J")) s.J = x->positive();
  if (auto x = f.find("j0")) s.j0 = grid_range(*x);
  if (auto x = f.find("h0")) s.h0 = grid_range(*x);
  if (auto x = f.find("tau")) s.tau = grid_range(*x);
  if (auto x = f.find("refine_passes")) s.refine_passes = static_cast<int>(x->integer());
  if (auto x = f.find("h")) {
    s.h.clear();
    for (std::size_t i = 0; i < x->size(); ++i) s.h.push_back(grid_range(x->element(i)));
  }
  checked(f.path(), [&] {
    s.validate(layout);
    return 0;
  });
  return s;
}

PropagatorOptions propagator_options(const Field& f) {
  f.only({"method", "spectral_max_dim", "krylov_dim", "krylov_tolerance", "anchor_step"});
  PropagatorOptions o;
  if (auto x = f.find("method")) {
    const std::string m = x->string();
    if (m == "auto") {
      o.method = PropagationMethod::Automatic;
    } else if (m == "spectral") {
      o.method = PropagationMethod::Spectral;
    } else if (m == "krylov") {
      o.method = PropagationMethod::Krylov;
    } else {
      x->fail("unknown method '" + m + "' (expected auto, spectral or krylov)");
    }
  }
  if (auto x = f.find("spectral_max_dim")) {
    const long d = x->integer();
    if (d < 0) x->fail("expected a non-negative integer");
    o.spectral_max_dim = d;
  }
  if (auto x = f.find("krylov_dim")) {
    const long d = x->integer();
    if (d < 2) x->fail("Krylov dimension must be at least 2");
    o.krylov_dim = static_cast<int>(d);
  }
  if (auto x = f.find("krylov_tolerance")) o.krylov_tolerance = x->positive();
  if (auto x = f.find("anchor_step")) o.anchor_step = x->positive();
  return o;
}

void noise_options(const Field& f, ExperimentConfig& c) {
  f.only({"gamma", "integrator", "dt", "krylov_step", "krylov_dim", "krylov_tolerance", "trace_tolerance",
          "max_halvings", "include_registers"});
  const Field g = f.at("gamma");
  c.gammas = number_list(g);
  for (double x : c.gammas) {
    if (x < 0.0) g.fail("dephasing rates must be non-negative");
  }
  NoiseSpec& n = c.noise;
  if (auto x = f.find("integrator")) n.integrator = checked(x->path(), [&] { return parse_lindblad_integrator(x->string()); });
  if (auto x = f.find("dt")) n.dt = x->positive();
  if (auto x = f.find("krylov_step")) n.krylov_step = x->positive();
  if (auto x = f.find("krylov_dim")) n.krylov_dim = static_cast<int>(x->integer());
  if (auto x = f.find("krylov_tolerance")) n.krylov_tolerance = x->positive();
  if (auto x = f.find("trace_tolerance")) n.trace_tolerance = x->positive();
  if (auto x = f.find("max_halvings")) n.max_halvings = static_cast<int>(x->integer());
  if (auto x = f.find("include_registers")) n.include_registers = x->boolean();
  checked(f.path(), [&] {
    n.validate();
    return 0;
  });
}

Command parse_command(const Field& f) {
  const std::string s = f.string();
  if (s == "evolve") return Command::Evolve;
  if (s == "fidelity") return Command::Fidelity;
  if (s == "optimize") return Command::Optimize;
  if (s == "noise") return Command::Noise;
  if (s == "twoway") return Command::TwoWay;
  f.fail("unknown command '" + s + "' (expected evolve, fidelity, optimize, noise or twoway)");
}

json parse_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Report line and column of the failing byte.
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string what = e.what();
    const auto pos = what.find("parse error");
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                      (pos == std::string::npos ? what : what.substr(pos)));
  }
}

}  // namespace

std::string to_string(Command c) {
  switch (c) {
    case Command::Evolve: return "evolve";
    case Command::Fidelity: return "fidelity";
    case Command::Optimize: return "optimize";
    case Command::Noise: return "noise";
    case Command::TwoWay: return "twoway";
  }
  return "fidelity";
}

ExperimentConfig parse_config(const std::string& text, std::optional<std::uint64_t> seed_override) {
  json doc = parse_document(text);
  const Field root(doc, "$");
  root.expect_object();
  ExperimentConfig c;
  c.command = parse_command(root.at("command"));

  std::vector<std::string_view> keys;
  switch (c.command) {
    case Command::Evolve:
      keys = {"command", "layout", "seed", "params", "initial", "times", "propagator"};
      break;
    case Command::Fidelity:
      keys = {"command", "layout", "seed", "params", "tau", "spectators", "haar_samples", "target", "propagator"};
      break;
    case Command::Optimize:
      keys = {"command", "layout", "seed", "strategy", "spectators", "haar_samples", "target", "propagator"};
      break;
    case Command::Noise:
      keys = {"command", "layout", "seed", "params", "tau", "noise", "spectators", "haar_samples", "target"};
      break;
    case Command::TwoWay:
      keys = {"command", "layout", "seed", "params", "twoway", "times", "propagator"};
      break;
  }
  root.only(keys);

  const Field layout = root.at("layout");
  layout.only({"N", "M"});
  c.N = static_cast<int>(layout.at("N").integer());
  c.M = static_cast<int>(layout.at("M").integer());
  const SystemLayout l = checked(layout.path(), [&] { return build_layout(c.N, c.M); });

  if (auto x = root.find("seed")) c.seed = x->unsigned_integer();
  if (seed_override) c.seed = *seed_override;
  doc["seed"] = c.seed;
  c.evaluation.channel.seed = c.seed;

  if (auto x = root.find("spectators")) {
    c.evaluation.channel.spectators = checked(x->path(), [&] { return parse_spectator_policy(x->string()); });
  }
  if (auto x = root.find("haar_samples")) {
    const long n = x->integer();
    if (n < 1) x->fail("expected at least one sample");
    c.evaluation.channel.haar_samples = static_cast<int>(n);
  }
  if (auto x = root.find("target")) c.evaluation.target = checked(x->path(), [&] { return parse_target_kind(x->string()); });
  if (auto x = root.find("propagator")) c.evaluation.propagator = propagator_options(*x);

  switch (c.command) {
    case Command::Evolve: {
      c.params = hamiltonian_params(root.at("params"), l);
      const Field init = root.at("initial");
      init.only({"a", "b"});
      c.initial = {qubit_list(init.at("a"), c.M), qubit_list(init.at("b"), c.M)};
      c.times = time_list(root.at("times"));
      break;
    }
    case Command::Fidelity:
      c.params = hamiltonian_params(root.at("params"), l);
      c.times = root.find("tau") ? time_list(root.at("tau")) : GridRange{1.0, 500.0, 0.25}.values();
      break;
    case Command::Optimize:
      c.strategy = strategy_spec(root.at("strategy"), l);
      break;
    case Command::Noise: {
      c.params = hamiltonian_params(root.at("params"), l);
      const Field tau = root.at("tau");
      c.tau = tau.number();
      if (c.tau < 0.0) tau.fail("tau must be non-negative");
      noise_options(root.at("noise"), c);
      break;
    }
    case Command::TwoWay: {
      c.params = hamiltonian_params(root.at("params"), l);
      if (auto tw = root.find("twoway")) {
        tw->only({"psi", "phi"});
        c.scenario.psi = qubit_list(tw->at("psi"), c.M);
        c.scenario.phi = qubit_list(tw->at("phi"), c.M);
      } else if (c.M == 2) {
        c.scenario = TwoWayScenario::example_two_pairs();
      } else {
        root.fail("missing required key 'twoway' (the default inputs need M = 2)");
      }
      c.times = root.find("times") ? time_list(root.at("times")) : GridRange{0.0, 500.0, 0.25}.values();
      break;
    }
  }
  c.document = std::move(doc);
  return c;
}

json replay_config(const ExperimentConfig& source, const HamiltonianParams& params, double tau) {
  json out;
  out["command"] = "fidelity";
  out["layout"] = {{"N", source.N}, {"M", source.M}};
  out["seed"] = source.seed;
  out["params"] = {{"J", params.J}, {"J0", params.J0}, {"h0", params.h0}, {"h", params.h}};
  out["tau"] = json::array({tau});
  out["spectators"] = to_string(source.evaluation.channel.spectators);
  out["haar_samples"] = source.evaluation.channel.haar_samples;
  out["target"] = to_string(source.evaluation.target);
  if (source.document.contains("propagator")) out["propagator"] = source.document["propagator"];
  return out;
}

}  // namespace spinbus::cli
