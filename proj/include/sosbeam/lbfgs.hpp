////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Limited-memory BFGS with backtracking line search.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <functional>
#include <vector>

namespace sosbeam {

struct LbfgsOptions {
  int max_iters = 500;
  int memory = 10;
  double grad_tol = 1e-12;      // on the max-norm of the gradient
  double rel_obj_tol = 1e-8;    // relative decrease between accepted iterates
  double armijo_c1 = 1e-4;
  int max_backtracks = 40;
};

struct LbfgsResult {
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
};

// Objective callback: returns f(x); fills *grad when non-null.
using ObjectiveFn = std::function<double(const std::vector<double>&, std::vector<double>*)>;

// Minimizes fn from x in place. Monotone by construction (Armijo
// backtracking); accepted objective values are appended to *trace.
LbfgsResult lbfgs_minimize(std::vector<double>& x, const ObjectiveFn& fn,
                           const LbfgsOptions& opt, std::vector<double>* trace = nullptr);

}  // namespace sosbeam
