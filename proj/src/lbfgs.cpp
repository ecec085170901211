////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Limited-memory BFGS with backtracking line search.
////////////////////////////////////////////////////////////////////////////////

#include "sosbeam/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "sosbeam/errors.hpp"

namespace sosbeam {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double max_norm(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

LbfgsResult lbfgs_minimize(std::vector<double>& x, const ObjectiveFn& fn,
                           const LbfgsOptions& opt, std::vector<double>* trace) {
  const std::size_t n = x.size();
  LbfgsResult res;

  std::vector<double> grad(n), grad_new(n), direction(n), x_new(n);
  double f = fn(x, &grad);
  if (!std::isfinite(f)) throw NumericError("non-finite objective at the initial point");
  if (trace) trace->push_back(f);

  struct Correction {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Correction> mem;

  for (int iter = 0; iter < opt.max_iters; ++iter) {
    if (max_norm(grad) <= opt.grad_tol) {
      res.converged = true;
      break;
    }

    // Two-loop recursion.
    for (std::size_t k = 0; k < n; ++k) direction[k] = -grad[k];
    std::vector<double> alpha(mem.size());
    for (std::size_t m = mem.size(); m-- > 0;) {
      alpha[m] = mem[m].rho * dot(mem[m].s, direction);
      for (std::size_t k = 0; k < n; ++k) direction[k] -= alpha[m] * mem[m].y[k];
    }
    if (!mem.empty()) {
      const auto& last = mem.back();
      const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (double& v : direction) v *= gamma;
    }
    for (std::size_t m = 0; m < mem.size(); ++m) {
      const double beta = mem[m].rho * dot(mem[m].y, direction);
      for (std::size_t k = 0; k < n; ++k) direction[k] += (alpha[m] - beta) * mem[m].s[k];
    }

    double dir_deriv = dot(grad, direction);
    if (dir_deriv >= 0.0) {
      // Not a descent direction; fall back to steepest descent.
      for (std::size_t k = 0; k < n; ++k) direction[k] = -grad[k];
      dir_deriv = -dot(grad, grad);
      mem.clear();
    }

    // Armijo backtracking.
    double step = 1.0;
    double f_new = f;
    bool accepted = false;
    for (int bt = 0; bt < opt.max_backtracks; ++bt) {
      for (std::size_t k = 0; k < n; ++k) x_new[k] = x[k] + step * direction[k];
      f_new = fn(x_new, nullptr);
      if (std::isfinite(f_new) && f_new <= f + opt.armijo_c1 * step * dir_deriv) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.converged = true;  // no further progress possible at this scale
      break;
    }

    fn(x_new, &grad_new);
    res.iterations = iter + 1;

    Correction c;
    c.s.resize(n);
    c.y.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      c.s[k] = x_new[k] - x[k];
      c.y[k] = grad_new[k] - grad[k];
    }
    const double sy = dot(c.s, c.y);
    if (sy > 1e-14 * std::sqrt(dot(c.s, c.s)) * std::sqrt(dot(c.y, c.y)) && sy > 0.0) {
      c.rho = 1.0 / sy;
      mem.push_back(std::move(c));
      if (static_cast<int>(mem.size()) > opt.memory) mem.pop_front();
    }

    const double decrease = f - f_new;
    x.swap(x_new);
    grad.swap(grad_new);
    f = f_new;
    if (trace) trace->push_back(f);

    if (decrease <= opt.rel_obj_tol * std::max(std::abs(f), 1e-300)) {
      res.converged = true;
      break;
    }
  }
  res.objective = f;
  return res;
}

}  // namespace sosbeam
