#include "spinbus/optimize.hpp"

#include <cmath>
#include <string>

#include "spinbus/errors.hpp"
#include "spinbus/parallel.hpp"

namespace spinbus {

std::vector<double> GridRange::values() const {
  if (!std::isfinite(min) || !std::isfinite(max) || !std::isfinite(step)) throw DomainError("grid bounds must be finite");
  if (max < min) throw DomainError("grid maximum below its minimum");
  if (!(step > 0.0)) throw DomainError("grid step must be positive");
  const auto count = static_cast<long>(std::floor((max - min) / step + 1e-9));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count + 1));
  for (long i = 0; i <= count; ++i) out.push_back(min + static_cast<double>(i) * step);
  return out;
}

std::string to_string(Strategy s) { return s == Strategy::S1 ? "S1" : "S2"; }

Strategy parse_strategy(const std::string& name) {
  if (name == "S1" || name == "s1") return Strategy::S1;
  if (name == "S2" || name == "s2") return Strategy::S2;
  throw DomainError("unknown strategy '" + name + "' (expected S1 or S2)");
}

void StrategySpec::validate(const SystemLayout& layout) const {
  if (!(J > 0.0)) throw DomainError("J must be positive");
  if (h.size() != static_cast<std::size_t>(layout.pair_count())) {
    throw DomainError("strategy needs one field range per pair (" + std::to_string(layout.pair_count()) + ")");
  }
  (kind == Strategy::S1 ? j0 : h0).values();
  tau.values();
  if (tau.min < 0.0) throw DomainError("tau grid must be non-negative");
  for (std::size_t v = 0; v < h.size(); ++v) {
    h[v].values();
    const bool positive = v % 2 == 0;
    if ((positive && h[v].min < 0.0) || (!positive && h[v].max > 0.0)) {
      throw DomainError("field range of pair " + std::to_string(v + 1) + " must be " +
                        (positive ? "non-negative" : "non-positive"));
    }
  }
  if (refine_passes < 0) throw DomainError("refine passes must be non-negative");
}

StrategySpec default_strategy(Strategy kind, int pair_count) {
  StrategySpec spec;
  spec.kind = kind;
  for (int v = 0; v < pair_count; ++v) {
    spec.h.push_back(v % 2 == 0 ? GridRange{0.0, 1.5, 0.05} : GridRange{-1.5, 0.0, 0.05});
  }
  return spec;
}

HamiltonianParams strategy_params(const StrategySpec& spec, double axis_value, std::span<const double> fields) {
  HamiltonianParams p;
  p.J = spec.J;
  if (spec.kind == Strategy::S1) {
    p.J0 = axis_value * spec.J;
    p.h0 = 0.0;
  } else {
    p.J0 = spec.J;
    p.h0 = axis_value * spec.J;
  }
  for (double f : fields) p.h.push_back(f * spec.J);
  return p;
}

PointResult evaluate_point(const SystemLayout& layout, const HamiltonianParams& params, std::span<const double> taus,
                           const EvaluationOptions& options,
                           const std::function<void(const FidelityReport&)>& on_time) {
  PointResult result;
  result.params = params;
  try {
    params.validate(layout);
    const std::vector<int> sectors = channel_sectors(layout, options.channel.spectators);
    const Propagator prop(build_hamiltonian(layout, params, sectors), options.propagator);
    std::vector<std::size_t> pairs(static_cast<std::size_t>(layout.pair_count()));
    for (std::size_t v = 0; v < pairs.size(); ++v) pairs[v] = v;
    // Times are in units of 1/J.
    std::vector<double> times(taus.begin(), taus.end());
    for (double& t : times) t /= params.J;
    bool first = true;
    sweep_pair_channels(layout, prop, options.channel, pairs, times,
                        [&](std::size_t ti, std::span<const PairChannel> channels) {
                          FidelityReport report = score_channels(channels, options.target, layout.chain_length());
                          report.time = taus[ti];
                          if (on_time) on_time(report);
                          if (first || report.mean > result.fidelity) {
                            result.fidelity = report.mean;
                            result.tau = taus[ti];
                            result.per_pair = report.per_pair;
                            first = false;
                          }
                        });
    result.ok = !first;
    if (first) result.error = "empty tau grid";
  } catch (const std::exception& e) {
    result.ok = false;
    result.error = e.what();
  }
  return result;
}

namespace {

struct Axes {
  std::vector<double> strategy;
  std::vector<std::vector<double>> fields;
  std::vector<double> taus;

  std::size_t count() const {
    std::size_t c = strategy.size();
    for (const auto& f : fields) c *= f.size();
    return c;
  }

  // Mixed-radix decode with the strategy axis most significant.
  std::pair<double, std::vector<double>> point(std::size_t index) const {
    std::vector<double> h(fields.size());
    for (std::size_t v = fields.size(); v-- > 0;) {
      h[v] = fields[v][index % fields[v].size()];
      index /= fields[v].size();
    }
    return {strategy[index], h};
  }
};

// Values best + i*step for |i| <= 2 that stay inside [lo, hi].
std::vector<double> refined_axis(double best, double step, double lo, double hi) {
  std::vector<double> out;
  for (int i = -2; i <= 2; ++i) {
    const double x = best + static_cast<double>(i) * step;
    if (x >= lo - 1e-12 && x <= hi + 1e-12) out.push_back(x);
  }
  return out;
}

void run_grid(const SystemLayout& layout, const StrategySpec& spec, const Axes& axes, const EvaluationOptions& options,
              int workers, OptimizationResult& out) {
  const std::size_t count = axes.count();
  std::vector<PointResult> results(count);
  parallel_for(count, workers, [&](std::size_t i) {
    const auto [axis, fields] = axes.point(i);
    results[i] = evaluate_point(layout, strategy_params(spec, axis, fields), axes.taus, options);
  });
  for (PointResult& r : results) {
    ++out.evaluated;
    if (!r.ok) {
      ++out.failed;
    } else if (!out.best.ok || r.fidelity > out.best.fidelity) {
      out.best = r;
    }
    out.landscape.push_back(std::move(r));
  }
}

}  // namespace

OptimizationResult optimize(const SystemLayout& layout, const StrategySpec& spec, const EvaluationOptions& options,
                            int workers) {
  spec.validate(layout);
  if (workers < 1) throw DomainError("worker count must be at least 1");
  const GridRange& axis_range = spec.kind == Strategy::S1 ? spec.j0 : spec.h0;

  Axes axes;
  axes.strategy = axis_range.values();
  for (const GridRange& r : spec.h) axes.fields.push_back(r.values());
  axes.taus = spec.tau.values();

  OptimizationResult out;
  run_grid(layout, spec, axes, options, workers, out);
  if (!out.best.ok) throw NumericalError("no grid point could be evaluated: " + out.landscape.front().error);

  double axis_step = axis_range.step;
  std::vector<double> field_steps;
  for (const GridRange& r : spec.h) field_steps.push_back(r.step);
  double tau_step = spec.tau.step;
  for (int pass = 0; pass < spec.refine_passes; ++pass) {
    axis_step /= 2.0;
    tau_step /= 2.0;
    const PointResult anchor = out.best;
    const double axis_best = spec.kind == Strategy::S1 ? anchor.params.J0 / spec.J : anchor.params.h0 / spec.J;
    Axes fine;
    fine.strategy = refined_axis(axis_best, axis_step, axis_range.min, axis_range.max);
    for (std::size_t v = 0; v < spec.h.size(); ++v) {
      field_steps[v] /= 2.0;
      fine.fields.push_back(refined_axis(anchor.params.h[v] / spec.J, field_steps[v], spec.h[v].min, spec.h[v].max));
    }
    fine.taus = refined_axis(anchor.tau, tau_step, spec.tau.min, spec.tau.max);
    run_grid(layout, spec, fine, options, workers, out);
  }
  return out;
}

}  // namespace spinbus
