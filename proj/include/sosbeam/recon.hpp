////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Regularized slowness reconstruction from differential delay measurements.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <cstdint>
#include <vector>

#include "sosbeam/geometry.hpp"
#include "sosbeam/sparse.hpp"

namespace sosbeam {

// Anisotropic first-difference operator with l1 weight. Horizontal gradients
// are penalized hardest by default: the limited-angle geometry leaves
// lateral variation mostly unconstrained, which otherwise streaks.
struct Regularizer {
  SparseRayMatrix d;
  double lambda = 6.5e-2;
  double kappa_h = 1.0;
  double kappa_v = 0.5;
  double kappa_d = 0.75;
};

Regularizer build_regularizer(const ReconGrid& grid, double kappa_h, double kappa_v,
                              double kappa_d, double lambda);

struct SolveOptions {
  int max_iters = 2000;         // budget across all continuation stages
  int continuation_stages = 4;  // smoothing eps x8, x4, x2, x1
  double rel_obj_tol = 1e-8;
  int lbfgs_memory = 10;
  double data_eps_scale = 1e-3;  // eps_d = scale * median |dtau|
  double reg_eps_scale = 1e-3;   // eps_r = scale * sigma0 * min cell size
  int threads = 0;
};

struct SolveReport {
  double objective = 0.0;  // exact l1 objective at the solution
  double data_term = 0.0;
  double reg_term = 0.0;
  int iterations = 0;
  bool converged = false;
  double wall_time_s = 0.0;
  std::vector<double> trace;  // smoothed objective per accepted iterate
};

struct ObjectiveParts {
  double total = 0.0;
  double data = 0.0;
  double reg = 0.0;
};

// The eps-smoothed objective over the scaled deviation u = (sigma-sigma0)/sigma0:
//   sum sqrt((sigma0 L u - dtau)^2 + eps_d^2)
// + lambda * sum sqrt((sigma0 D u)^2 + eps_r^2).
// Exposed so the analytic gradient can be checked against finite differences.
class SmoothedProblem {
 public:
  SmoothedProblem(const SparseRayMatrix& L_valid, std::vector<double> dtau_valid,
                  const Regularizer& reg, double sigma0, int threads);

  void set_smoothing(double eps_d, double eps_r);
  double evaluate(const std::vector<double>& u, std::vector<double>* grad) const;

 private:
  const SparseRayMatrix& l_;
  SparseRayMatrix lt_;
  const Regularizer& reg_;
  SparseRayMatrix dt_;
  std::vector<double> dtau_;
  double sigma0_;
  double eps_d_ = 1e-12;
  double eps_r_ = 1e-12;
  int threads_;
  mutable std::vector<double> pred_, dv_, wr_, wv_, back_l_, back_d_;
};

// Exact (unsmoothed) l1 objective. `valid` may be empty (= all rows used).
ObjectiveParts evaluate_objective(const SlownessMap& sigma, const SparseRayMatrix& L,
                                  const std::vector<double>& dtau,
                                  const std::vector<std::uint8_t>& valid,
                                  const Regularizer& reg, double sigma0);

// Minimizes the eps-smoothed l1-l1 objective over the scaled deviation
// (sigma - sigma0)/sigma0 by limited-memory quasi-Newton with smoothing
// continuation, starting from sigma = sigma0. Guarantees the returned map
// does not increase the exact objective over the start.
SlownessMap solve_slowness(const SparseRayMatrix& L, const std::vector<double>& dtau,
                           const std::vector<std::uint8_t>& valid, const Regularizer& reg,
                           double sigma0, const ReconGrid& grid, const SolveOptions& opt,
                           SolveReport* report = nullptr);

}  // namespace sosbeam
