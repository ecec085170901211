////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Row-major sparse path matrices (CSR) with an on-disk cache format.
////////////////////////////////////////////////////////////////////////////////

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sosbeam {

// Sparse matrix of per-cell ray path lengths (m). One row per ray (matrix P)
// or per four-ray difference (matrix L). Rows carry two auxiliary scalars:
//   euclid_length  - reference Euclidean length of the row's in-grid segment
//                    (signed sum of the four segments for difference rows)
//   outside_length - path length clipped away outside the grid box, which
//                    propagates under the background slowness
struct SparseRayMatrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<std::int64_t> indptr;   // size rows+1
  std::vector<std::int32_t> colidx;   // size nnz
  std::vector<double> values;         // size nnz, m
  std::vector<double> euclid_length;  // size rows
  std::vector<double> outside_length; // size rows
  std::uint64_t grid_hash = 0;

  std::int64_t nnz() const { return static_cast<std::int64_t>(colidx.size()); }
  double row_sum(std::int64_t r) const;

  // y = A x (row-parallel, deterministic).
  void multiply(const std::vector<double>& x, std::vector<double>& y, int threads) const;
  // Explicit transpose as a CSR matrix, for deterministic A^T products.
  SparseRayMatrix transpose() const;

  // Keeps only the listed rows, in the given order.
  SparseRayMatrix select_rows(const std::vector<std::int64_t>& keep) const;

  void save(const std::string& path) const;
  static SparseRayMatrix load(const std::string& path);
};

// Deterministic row-by-row assembler: rows are appended in index order.
class SparseMatrixBuilder {
 public:
  explicit SparseMatrixBuilder(std::int64_t cols);

  // Entries must be pre-merged (unique, ascending columns).
  void append_row(const std::vector<std::int32_t>& cols, const std::vector<double>& vals,
                  double euclid, double outside);
  SparseRayMatrix take();

 private:
  SparseRayMatrix m_;
};

// Merges duplicate columns in-place; returns entries sorted by column with
// summed values. Entries with |value| below drop_tol are discarded.
void merge_row_entries(std::vector<std::int32_t>& cols, std::vector<double>& vals,
                       double drop_tol);

}  // namespace sosbeam
