////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Regularized slowness reconstruction from differential delay measurements.
////////////////////////////////////////////////////////////////////////////////

#include "sosbeam/recon.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "sosbeam/errors.hpp"
#include "sosbeam/lbfgs.hpp"
#include "sosbeam/parallel.hpp"

namespace sosbeam {

Regularizer build_regularizer(const ReconGrid& grid, double kappa_h, double kappa_v,
                              double kappa_d, double lambda) {
  grid.validate();
  if (kappa_h < 0.0 || kappa_v < 0.0 || kappa_d < 0.0) {
    throw ConfigError("regularizer weights must be non-negative");
  }
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");

  Regularizer reg;
  reg.lambda = lambda;
  reg.kappa_h = kappa_h;
  reg.kappa_v = kappa_v;
  reg.kappa_d = kappa_d;

  SparseMatrixBuilder builder(grid.num_cells());
  std::vector<std::int32_t> cols(2);
  std::vector<double> vals(2);
  auto add = [&](std::int64_t a, std::int64_t b, double w) {
    cols[0] = static_cast<std::int32_t>(a);
    cols[1] = static_cast<std::int32_t>(b);
    vals[0] = -w;
    vals[1] = w;
    builder.append_row(cols, vals, 0.0, 0.0);
  };

  const double diag = kappa_d / std::sqrt(2.0);
  if (kappa_h > 0.0) {
    for (int i = 0; i + 1 < grid.nx; ++i) {
      for (int j = 0; j < grid.nz; ++j) {
        add(grid.flat_index(i, j), grid.flat_index(i + 1, j), kappa_h);
      }
    }
  }
  if (kappa_v > 0.0) {
    for (int i = 0; i < grid.nx; ++i) {
      for (int j = 0; j + 1 < grid.nz; ++j) {
        add(grid.flat_index(i, j), grid.flat_index(i, j + 1), kappa_v);
      }
    }
  }
  if (kappa_d > 0.0) {
    for (int i = 0; i + 1 < grid.nx; ++i) {
      for (int j = 0; j + 1 < grid.nz; ++j) {
        add(grid.flat_index(i, j), grid.flat_index(i + 1, j + 1), diag);
        add(grid.flat_index(i + 1, j), grid.flat_index(i, j + 1), diag);
      }
    }
  }
  reg.d = builder.take();
  reg.d.grid_hash = grid.hash();
  return reg;
}

namespace {

std::vector<std::int64_t> valid_rows(const std::vector<std::uint8_t>& valid, std::int64_t rows) {
  std::vector<std::int64_t> keep;
  if (valid.empty()) {
    keep.resize(rows);
    for (std::int64_t r = 0; r < rows; ++r) keep[r] = r;
  } else {
    for (std::int64_t r = 0; r < rows; ++r) {
      if (valid[r]) keep.push_back(r);
    }
  }
  return keep;
}

double median_abs(std::vector<double> v) {
  if (v.empty()) return 0.0;
  for (double& x : v) x = std::abs(x);
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  return v[mid];
}

}  // namespace

ObjectiveParts evaluate_objective(const SlownessMap& sigma, const SparseRayMatrix& L,
                                  const std::vector<double>& dtau,
                                  const std::vector<std::uint8_t>& valid,
                                  const Regularizer& reg, double sigma0) {
  if (static_cast<std::int64_t>(sigma.sigma.size()) != L.cols) {
    throw NumericError("slowness map does not match the path matrix");
  }
  if (static_cast<std::int64_t>(dtau.size()) != L.rows) {
    throw NumericError("measurement vector does not match the path matrix");
  }
  if (!valid.empty() && valid.size() != dtau.size()) {
    throw NumericError("mask does not match the measurement vector");
  }

  std::vector<double> deviation(sigma.sigma.size());
  for (std::size_t k = 0; k < deviation.size(); ++k) deviation[k] = sigma.sigma[k] - sigma0;
  std::vector<double> pred;
  L.multiply(deviation, pred, 1);

  ObjectiveParts parts;
  for (std::int64_t r = 0; r < L.rows; ++r) {
    if (!valid.empty() && !valid[r]) continue;
    parts.data += std::abs(pred[r] - dtau[r]);
  }
  std::vector<double> dv;
  reg.d.multiply(sigma.sigma, dv, 1);
  double reg_l1 = 0.0;
  for (double v : dv) reg_l1 += std::abs(v);
  parts.reg = reg.lambda * reg_l1;
  parts.total = parts.data + parts.reg;
  return parts;
}

SmoothedProblem::SmoothedProblem(const SparseRayMatrix& L_valid, std::vector<double> dtau_valid,
                                 const Regularizer& reg, double sigma0, int threads)
    : l_(L_valid),
      lt_(L_valid.transpose()),
      reg_(reg),
      dt_(reg.d.transpose()),
      dtau_(std::move(dtau_valid)),
      sigma0_(sigma0),
      threads_(threads) {
  if (static_cast<std::int64_t>(dtau_.size()) != l_.rows) {
    throw NumericError("measurement vector does not match the path matrix");
  }
}

void SmoothedProblem::set_smoothing(double eps_d, double eps_r) {
  eps_d_ = eps_d;
  eps_r_ = eps_r;
}

double SmoothedProblem::evaluate(const std::vector<double>& u, std::vector<double>* grad) const {
  l_.multiply(u, pred_, threads_);
  double f = 0.0;
  wr_.resize(pred_.size());
  for (std::size_t r = 0; r < pred_.size(); ++r) {
    const double res = sigma0_ * pred_[r] - dtau_[r];
    const double s = std::sqrt(res * res + eps_d_ * eps_d_);
    f += s;
    wr_[r] = sigma0_ * res / s;
  }
  reg_.d.multiply(u, dv_, threads_);
  wv_.resize(dv_.size());
  for (std::size_t r = 0; r < dv_.size(); ++r) {
    const double v = sigma0_ * dv_[r];
    const double s = std::sqrt(v * v + eps_r_ * eps_r_);
    f += reg_.lambda * s;
    wv_[r] = reg_.lambda * sigma0_ * v / s;
  }
  if (grad) {
    lt_.multiply(wr_, back_l_, threads_);
    dt_.multiply(wv_, back_d_, threads_);
    grad->resize(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) (*grad)[k] = back_l_[k] + back_d_[k];
  }
  return f;
}

SlownessMap solve_slowness(const SparseRayMatrix& L, const std::vector<double>& dtau,
                           const std::vector<std::uint8_t>& valid, const Regularizer& reg,
                           double sigma0, const ReconGrid& grid, const SolveOptions& opt,
                           SolveReport* report) {
  const auto t_start = std::chrono::steady_clock::now();
  if (static_cast<std::int64_t>(dtau.size()) != L.rows) {
    throw NumericError("measurement vector does not match the path matrix");
  }
  if (L.cols != grid.num_cells()) throw NumericError("path matrix does not match the grid");
  for (double v : dtau) {
    if (!std::isfinite(v)) throw NumericError("non-finite measurement");
  }

  SolveReport local_report;
  SolveReport& rep = report ? *report : local_report;
  rep = SolveReport{};

  SlownessMap result = SlownessMap::constant(grid, sigma0);

  const std::vector<std::int64_t> keep = valid_rows(valid, L.rows);
  if (keep.empty()) {
    // Regularizer-only problem: the constant start already minimizes it.
    rep.converged = true;
    const ObjectiveParts parts = evaluate_objective(result, L, dtau, valid, reg, sigma0);
    rep.objective = parts.total;
    rep.data_term = parts.data;
    rep.reg_term = parts.reg;
    rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
  }

  const SparseRayMatrix lm = keep.size() == static_cast<std::size_t>(L.rows)
                                 ? L
                                 : L.select_rows(keep);
  std::vector<double> d(keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) d[k] = dtau[keep[k]];

  // Smoothing scales per the continuation schedule.
  const double eps_d_base = std::max(opt.data_eps_scale * median_abs(d), 1e-18);
  const double eps_r_base =
      std::max(opt.reg_eps_scale * sigma0 * std::min(grid.cell_w, grid.cell_h), 1e-18);

  SmoothedProblem problem(lm, d, reg, sigma0, opt.threads);

  // Optimization variable: u = (sigma - sigma0) / sigma0.
  std::vector<double> u(grid.num_cells(), 0.0);

  int iters_used = 0;
  bool all_converged = true;
  const int stages = std::max(1, opt.continuation_stages);
  for (int stage = 0; stage < stages; ++stage) {
    const double eps_scale = static_cast<double>(1 << (stages - 1 - stage));
    problem.set_smoothing(eps_d_base * eps_scale, eps_r_base * eps_scale);

    LbfgsOptions lopt;
    lopt.max_iters = std::max(1, opt.max_iters / stages);
    lopt.memory = opt.lbfgs_memory;
    lopt.rel_obj_tol = opt.rel_obj_tol;
    const LbfgsResult lres = lbfgs_minimize(
        u, [&](const std::vector<double>& x, std::vector<double>* g) {
          return problem.evaluate(x, g);
        },
        lopt, &rep.trace);
    iters_used += lres.iterations;
    all_converged = all_converged && lres.converged;
  }

  for (std::int64_t k = 0; k < grid.num_cells(); ++k) {
    result.sigma[k] = sigma0 * (1.0 + u[k]);
  }

  rep.iterations = iters_used;
  rep.converged = all_converged;

  // The smoothed stages cannot increase the exact objective past the start;
  // if they somehow did, fall back to the starting map.
  const SlownessMap start = SlownessMap::constant(grid, sigma0);
  const ObjectiveParts at_start = evaluate_objective(start, L, dtau, valid, reg, sigma0);
  ObjectiveParts at_end = evaluate_objective(result, L, dtau, valid, reg, sigma0);
  if (at_end.total > at_start.total) {
    result = start;
    at_end = at_start;
    rep.converged = false;
  }
  rep.objective = at_end.total;
  rep.data_term = at_end.data;
  rep.reg_term = at_end.reg;
  rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

}  // namespace sosbeam
