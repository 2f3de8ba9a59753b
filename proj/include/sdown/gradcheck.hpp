#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sdown/tape.hpp"

namespace sdown {

struct GradCheckOptions {
  double eps = 1e-5;
  double tol = 1e-4;
  // Relative errors are measured against max(|analytic|, |numeric|, floor).
  double floor = 1e-6;
  std::uint64_t seed = 7;
  bool check_input = true;
  Mode mode = Mode::infer;
};

struct GradCheckReport {
  double max_rel_error = 0;
  std::size_t checked = 0;
  // Elements whose +/- eps probes crossed a ReLU / pooling decision boundary.
  std::size_t skipped_kinks = 0;
  std::size_t param_elements = 0;
  std::size_t input_elements = 0;
  bool finite = true;
  bool passed = false;
  std::string worst;
  std::string diagnostic;
};

// Builds the fragment on a fresh tape for every probe.
using Fragment = std::function<Var(Tape<double>&, Var input)>;

// Central finite differences over every element of the input and of every
// trainable layer in `params`. The fragment output is reduced to a scalar via
// a fixed random projection so all output elements contribute.
GradCheckReport grad_check(const Fragment& fragment, const Grid4<double>& x, ParamSet<double>* params,
                           const GradCheckOptions& opts = {});

}  // namespace sdown
