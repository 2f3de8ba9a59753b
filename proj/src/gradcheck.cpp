#include "sdown/gradcheck.hpp"

#include <cmath>
#include <random>

#include "sdown/ops.hpp"

namespace sdown {

namespace {

struct Probe {
  double loss;
  std::uint64_t signature;
};

}  // namespace

GradCheckReport grad_check(const Fragment& fragment, const Grid4<double>& x, ParamSet<double>* params,
                           const GradCheckOptions& opts) {
  GradCheckReport report;
  if (!(opts.eps > 0)) throw ConfigError("grad_check: eps must be positive");

  Grid4<double> input = x;
  Grid4<double> projection;

  auto evaluate = [&](bool with_backward, Grid4<double>* input_grad) -> Probe {
    Tape<double> tape(opts.mode, opts.seed);
    Var in = tape.leaf(input, opts.check_input);
    Var out = fragment(tape, in);
    if (projection.empty()) {
      projection = Grid4<double>(tape.value(out).shape());
      std::mt19937_64 rng(opts.seed ^ 0xabcdefull);
      std::uniform_real_distribution<double> dist(-1.0, 1.0);
      for (auto& v : projection.vec()) v = dist(rng);
    }
    Var loss = ops::weighted_sum(tape, out, projection);
    if (with_backward) {
      tape.backward(loss);
      if (input_grad && opts.check_input) *input_grad = tape.grad(in);
    }
    return {tape.value(loss)[0], tape.decision_signature()};
  };

  if (params) params->zero_grad();
  Grid4<double> analytic_input;
  const Probe base = evaluate(true, &analytic_input);
  if (!std::isfinite(base.loss)) {
    report.finite = false;
    report.diagnostic = "non-finite loss at the base point";
    return report;
  }

  auto compare = [&](double analytic, double& slot, const std::string& label) {
    const double saved = slot;
    slot = saved + opts.eps;
    const Probe plus = evaluate(false, nullptr);
    slot = saved - opts.eps;
    const Probe minus = evaluate(false, nullptr);
    slot = saved;
    if (!std::isfinite(plus.loss) || !std::isfinite(minus.loss)) {
      report.finite = false;
      report.diagnostic = "non-finite loss while probing " + label;
      return;
    }
    if (plus.signature != base.signature || minus.signature != base.signature) {
      ++report.skipped_kinks;
      return;
    }
    const double numeric = (plus.loss - minus.loss) / (2 * opts.eps);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), opts.floor});
    const double rel = std::abs(analytic - numeric) / denom;
    ++report.checked;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst = label + " analytic=" + std::to_string(analytic) + " numeric=" + std::to_string(numeric);
    }
  };

  if (params) {
    // Snapshot analytic grads first: probes re-run the fragment, which does not touch grads
    // (no backward), but keep them independent of evaluation order anyway.
    std::vector<std::vector<double>> analytic;
    for (auto& layer : params->layers())
      for (auto& [role, g] : layer.grads) analytic.push_back(g.data);
    std::size_t slot = 0;
    for (auto& layer : params->layers()) {
      for (auto& [role, w] : layer.weights) {
        const auto& a = analytic[slot++];
        if (!layer.trainable) continue;
        for (std::size_t i = 0; i < w.data.size(); ++i) {
          compare(a[i], w.data[i], layer.name + "." + role + "[" + std::to_string(i) + "]");
          ++report.param_elements;
          if (!report.finite) return report;
        }
      }
    }
  }
  if (opts.check_input) {
    for (std::size_t i = 0; i < input.size(); ++i) {
      compare(analytic_input[i], input.vec()[i], "input[" + std::to_string(i) + "]");
      ++report.input_elements;
      if (!report.finite) return report;
    }
  }
  report.passed = report.finite && report.checked > 0 && report.max_rel_error < opts.tol;
  return report;
}

}  // namespace sdown
