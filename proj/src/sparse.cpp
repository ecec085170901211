////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// Row-major sparse path matrices (CSR) with an on-disk cache format.
////////////////////////////////////////////////////////////////////////////////

#include "sosbeam/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>

#include "sosbeam/errors.hpp"
#include "sosbeam/parallel.hpp"

namespace sosbeam {

namespace {

constexpr char kMagic[4] = {'S', 'B', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;

void write_bytes(std::FILE* f, const void* p, std::size_t n, const std::string& path) {
  if (std::fwrite(p, 1, n, f) != n) throw IoError("short write to " + path);
}

void read_bytes(std::FILE* f, void* p, std::size_t n, const std::string& path) {
  if (std::fread(p, 1, n, f) != n) throw IoError("short read from " + path);
}

}  // namespace

double SparseRayMatrix::row_sum(std::int64_t r) const {
  double s = 0.0;
  for (std::int64_t k = indptr[r]; k < indptr[r + 1]; ++k) s += values[k];
  return s;
}

void SparseRayMatrix::multiply(const std::vector<double>& x, std::vector<double>& y,
                               int threads) const {
  if (static_cast<std::int64_t>(x.size()) != cols) throw NumericError("spmv dimension mismatch");
  y.assign(rows, 0.0);
  parallel_for(rows, threads, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t r = begin; r < end; ++r) {
      double acc = 0.0;
      for (std::int64_t k = indptr[r]; k < indptr[r + 1]; ++k) {
        acc += values[k] * x[colidx[k]];
      }
      y[r] = acc;
    }
  });
}

SparseRayMatrix SparseRayMatrix::transpose() const {
  SparseRayMatrix t;
  t.rows = cols;
  t.cols = rows;
  t.indptr.assign(cols + 1, 0);
  for (std::int32_t c : colidx) t.indptr[c + 1]++;
  std::partial_sum(t.indptr.begin(), t.indptr.end(), t.indptr.begin());
  t.colidx.resize(colidx.size());
  t.values.resize(values.size());
  std::vector<std::int64_t> cursor(t.indptr.begin(), t.indptr.end() - 1);
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t k = indptr[r]; k < indptr[r + 1]; ++k) {
      const std::int64_t slot = cursor[colidx[k]]++;
      t.colidx[slot] = static_cast<std::int32_t>(r);
      t.values[slot] = values[k];
    }
  }
  t.euclid_length.assign(t.rows, 0.0);
  t.outside_length.assign(t.rows, 0.0);
  t.grid_hash = grid_hash;
  return t;
}

SparseRayMatrix SparseRayMatrix::select_rows(const std::vector<std::int64_t>& keep) const {
  SparseRayMatrix out;
  out.cols = cols;
  out.rows = static_cast<std::int64_t>(keep.size());
  out.grid_hash = grid_hash;
  out.indptr.reserve(keep.size() + 1);
  out.indptr.push_back(0);
  std::int64_t total = 0;
  for (std::int64_t r : keep) total += indptr[r + 1] - indptr[r];
  out.colidx.reserve(total);
  out.values.reserve(total);
  for (std::int64_t r : keep) {
    if (r < 0 || r >= rows) throw NumericError("row selection out of range");
    out.colidx.insert(out.colidx.end(), colidx.begin() + indptr[r], colidx.begin() + indptr[r + 1]);
    out.values.insert(out.values.end(), values.begin() + indptr[r], values.begin() + indptr[r + 1]);
    out.indptr.push_back(static_cast<std::int64_t>(out.colidx.size()));
    out.euclid_length.push_back(euclid_length.empty() ? 0.0 : euclid_length[r]);
    out.outside_length.push_back(outside_length.empty() ? 0.0 : outside_length[r]);
  }
  return out;
}

void SparseRayMatrix::save(const std::string& path) const {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open " + path + " for writing");
  try {
    write_bytes(f, kMagic, 4, path);
    write_bytes(f, &kVersion, sizeof(kVersion), path);
    const std::int64_t n = nnz();
    write_bytes(f, &rows, 8, path);
    write_bytes(f, &cols, 8, path);
    write_bytes(f, &n, 8, path);
    write_bytes(f, &grid_hash, 8, path);
    write_bytes(f, indptr.data(), indptr.size() * 8, path);
    // 64-bit column indices on disk.
    std::vector<std::int64_t> wide(colidx.begin(), colidx.end());
    write_bytes(f, wide.data(), wide.size() * 8, path);
    write_bytes(f, values.data(), values.size() * 8, path);
    write_bytes(f, euclid_length.data(), euclid_length.size() * 8, path);
    write_bytes(f, outside_length.data(), outside_length.size() * 8, path);
  } catch (...) {
    std::fclose(f);
    throw;
  }
  std::fclose(f);
}

SparseRayMatrix SparseRayMatrix::load(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open " + path);
  SparseRayMatrix m;
  try {
    char magic[4];
    std::uint32_t version = 0;
    read_bytes(f, magic, 4, path);
    if (std::memcmp(magic, kMagic, 4) != 0) throw IoError(path + " is not a ray matrix file");
    read_bytes(f, &version, sizeof(version), path);
    if (version != kVersion) throw IoError(path + " has unsupported version");
    std::int64_t n = 0;
    read_bytes(f, &m.rows, 8, path);
    read_bytes(f, &m.cols, 8, path);
    read_bytes(f, &n, 8, path);
    read_bytes(f, &m.grid_hash, 8, path);
    if (m.rows < 0 || m.cols < 0 || n < 0) throw IoError(path + " has corrupt header");
    m.indptr.resize(m.rows + 1);
    read_bytes(f, m.indptr.data(), m.indptr.size() * 8, path);
    std::vector<std::int64_t> wide(n);
    read_bytes(f, wide.data(), wide.size() * 8, path);
    m.colidx.assign(wide.begin(), wide.end());
    m.values.resize(n);
    read_bytes(f, m.values.data(), n * 8, path);
    m.euclid_length.resize(m.rows);
    read_bytes(f, m.euclid_length.data(), m.rows * 8, path);
    m.outside_length.resize(m.rows);
    read_bytes(f, m.outside_length.data(), m.rows * 8, path);
  } catch (...) {
    std::fclose(f);
    throw;
  }
  std::fclose(f);
  return m;
}

SparseMatrixBuilder::SparseMatrixBuilder(std::int64_t cols) {
  m_.cols = cols;
  m_.indptr.push_back(0);
}

void SparseMatrixBuilder::append_row(const std::vector<std::int32_t>& cols,
                                     const std::vector<double>& vals, double euclid,
                                     double outside) {
  if (cols.size() != vals.size()) throw NumericError("row entry size mismatch");
  m_.colidx.insert(m_.colidx.end(), cols.begin(), cols.end());
  m_.values.insert(m_.values.end(), vals.begin(), vals.end());
  m_.indptr.push_back(static_cast<std::int64_t>(m_.colidx.size()));
  m_.euclid_length.push_back(euclid);
  m_.outside_length.push_back(outside);
  m_.rows++;
}

SparseRayMatrix SparseMatrixBuilder::take() { return std::move(m_); }

void merge_row_entries(std::vector<std::int32_t>& cols, std::vector<double>& vals,
                       double drop_tol) {
  const std::size_t n = cols.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return cols[a] < cols[b]; });
  std::vector<std::int32_t> out_cols;
  std::vector<double> out_vals;
  out_cols.reserve(n);
  out_vals.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::int32_t c = cols[order[k]];
    double v = vals[order[k]];
    while (k + 1 < n && cols[order[k + 1]] == c) {
      ++k;
      v += vals[order[k]];
    }
    if (std::abs(v) > drop_tol) {
      out_cols.push_back(c);
      out_vals.push_back(v);
    }
  }
  cols.swap(out_cols);
  vals.swap(out_vals);
}

}  // namespace sosbeam
