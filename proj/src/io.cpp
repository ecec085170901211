////////////////////////////////////////////////////////////////////////////////
// Copyright 2026 the sosbeam project developers.
// SPDX-License-Identifier: Apache-2.0
//
// sosbeam: plane-wave ultrasound beamforming with local speed-of-sound maps
// File formats: CSV/PGM exports and binary RF, frame and measurement files.
////////////////////////////////////////////////////////////////////////////////

#include "sosbeam/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sosbeam/errors.hpp"

namespace sosbeam {

namespace {

void write_bytes(std::FILE* f, const void* p, std::size_t n, const std::string& path) {
  if (std::fwrite(p, 1, n, f) != n) throw IoError("short write to " + path);
}

void read_bytes(std::FILE* f, void* p, std::size_t n, const std::string& path) {
  if (std::fread(p, 1, n, f) != n) throw IoError("short read from " + path);
}

struct FileCloser {
  std::FILE* f;
  ~FileCloser() {
    if (f) std::fclose(f);
  }
};

std::FILE* open_or_throw(const std::string& path, const char* mode) {
  std::FILE* f = std::fopen(path.c_str(), mode);
  if (!f) throw IoError("cannot open " + path);
  return f;
}

void check_magic(std::FILE* f, const char* magic, const std::string& path) {
  char buf[4];
  read_bytes(f, buf, 4, path);
  if (std::memcmp(buf, magic, 4) != 0) throw IoError(path + " has the wrong file type");
}

void write_grid(std::FILE* f, const ImagingGrid& g, const std::string& path) {
  const std::int32_t nx = g.nx, nz = g.nz;
  write_bytes(f, &nx, 4, path);
  write_bytes(f, &nz, 4, path);
  const double geo[4] = {g.dx, g.dz, g.x0, g.z0};
  write_bytes(f, geo, sizeof(geo), path);
}

ImagingGrid read_grid(std::FILE* f, const std::string& path) {
  ImagingGrid g;
  std::int32_t nx = 0, nz = 0;
  read_bytes(f, &nx, 4, path);
  read_bytes(f, &nz, 4, path);
  double geo[4];
  read_bytes(f, geo, sizeof(geo), path);
  g.nx = nx;
  g.nz = nz;
  g.dx = geo[0];
  g.dz = geo[1];
  g.x0 = geo[2];
  g.z0 = geo[3];
  g.validate();
  return g;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv_matrix(const std::string& path, const ImagingGrid& grid,
                      const std::vector<double>& values) {
  if (values.size() != static_cast<std::size_t>(grid.num_pixels())) {
    throw IoError("matrix size does not match its grid");
  }
  std::FILE* f = open_or_throw(path, "w");
  FileCloser closer{f};
  std::fprintf(f, "nx,nz,dx,dz,x0,z0,%d,%d,%s,%s,%s,%s\n", grid.nx, grid.nz,
               format_double(grid.dx).c_str(), format_double(grid.dz).c_str(),
               format_double(grid.x0).c_str(), format_double(grid.z0).c_str());
  std::string line;
  for (int iz = 0; iz < grid.nz; ++iz) {
    line.clear();
    for (int ix = 0; ix < grid.nx; ++ix) {
      if (ix) line += ',';
      line += format_double(values[grid.flat_index(ix, iz)]);
    }
    line += '\n';
    if (std::fputs(line.c_str(), f) == EOF) throw IoError("short write to " + path);
  }
}

std::vector<double> read_csv_matrix(const std::string& path, ImagingGrid& grid) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw IoError(path + " is empty");
  std::vector<std::string> fields;
  std::stringstream hs(header);
  std::string tok;
  while (std::getline(hs, tok, ',')) fields.push_back(tok);
  if (fields.size() != 12 || fields[0] != "nx") throw IoError(path + " has no grid header");
  grid.nx = std::stoi(fields[6]);
  grid.nz = std::stoi(fields[7]);
  grid.dx = std::stod(fields[8]);
  grid.dz = std::stod(fields[9]);
  grid.x0 = std::stod(fields[10]);
  grid.z0 = std::stod(fields[11]);
  grid.validate();
  std::vector<double> values(grid.num_pixels());
  std::string line;
  for (int iz = 0; iz < grid.nz; ++iz) {
    if (!std::getline(in, line)) throw IoError(path + " has too few rows");
    std::stringstream ls(line);
    for (int ix = 0; ix < grid.nx; ++ix) {
      if (!std::getline(ls, tok, ',')) throw IoError(path + " has too few columns");
      values[grid.flat_index(ix, iz)] = std::stod(tok);
    }
  }
  return values;
}

void write_pgm(const std::string& path, int nx, int nz, const std::vector<double>& db,
               double dynamic_range_db) {
  if (db.size() != static_cast<std::size_t>(nx) * nz) throw IoError("PGM size mismatch");
  std::FILE* f = open_or_throw(path, "wb");
  FileCloser closer{f};
  std::fprintf(f, "P5\n%d %d\n255\n", nx, nz);
  std::vector<unsigned char> row(nx);
  for (int iz = 0; iz < nz; ++iz) {
    for (int ix = 0; ix < nx; ++ix) {
      const double v = db[static_cast<std::int64_t>(ix) * nz + iz];
      const double u = std::clamp(1.0 + v / dynamic_range_db, 0.0, 1.0);
      row[ix] = static_cast<unsigned char>(std::lround(255.0 * u));
    }
    write_bytes(f, row.data(), row.size(), path);
  }
}

void write_rf(const std::string& path, const RfChannelData& rf) {
  std::FILE* f = open_or_throw(path, "wb");
  FileCloser closer{f};
  write_bytes(f, "SBRF", 4, path);
  const std::uint32_t version = 1;
  write_bytes(f, &version, 4, path);
  const std::int64_t nc = rf.num_channels, nt = rf.num_samples;
  write_bytes(f, &nc, 8, path);
  write_bytes(f, &nt, 8, path);
  const double header[3] = {rf.fs, rf.angle, rf.f0};
  write_bytes(f, header, sizeof(header), path);
  const std::vector<float> data(rf.samples.begin(), rf.samples.end());
  write_bytes(f, data.data(), data.size() * 4, path);
}

RfChannelData read_rf(const std::string& path) {
  std::FILE* f = open_or_throw(path, "rb");
  FileCloser closer{f};
  check_magic(f, "SBRF", path);
  std::uint32_t version = 0;
  read_bytes(f, &version, 4, path);
  if (version != 1) throw IoError(path + " has unsupported version");
  RfChannelData rf;
  std::int64_t nc = 0, nt = 0;
  read_bytes(f, &nc, 8, path);
  read_bytes(f, &nt, 8, path);
  double header[3];
  read_bytes(f, header, sizeof(header), path);
  rf.num_channels = static_cast<int>(nc);
  rf.num_samples = static_cast<int>(nt);
  rf.fs = header[0];
  rf.angle = header[1];
  rf.f0 = header[2];
  if (nc < 1 || nt < 1) throw IoError(path + " has corrupt header");
  std::vector<float> data(static_cast<std::size_t>(nc) * nt);
  read_bytes(f, data.data(), data.size() * 4, path);
  rf.samples.assign(data.begin(), data.end());
  return rf;
}

void write_frame(const std::string& path, const BeamformedFrame& frame) {
  std::FILE* f = open_or_throw(path, "wb");
  FileCloser closer{f};
  write_bytes(f, "SBFR", 4, path);
  const std::uint32_t version = 1;
  write_bytes(f, &version, 4, path);
  write_grid(f, frame.grid, path);
  const double angles[2] = {frame.tx_angle, frame.rx_steer};
  write_bytes(f, angles, sizeof(angles), path);
  std::vector<float> data(frame.rf.begin(), frame.rf.end());
  write_bytes(f, data.data(), data.size() * 4, path);
}

BeamformedFrame read_frame(const std::string& path) {
  std::FILE* f = open_or_throw(path, "rb");
  FileCloser closer{f};
  check_magic(f, "SBFR", path);
  std::uint32_t version = 0;
  read_bytes(f, &version, 4, path);
  if (version != 1) throw IoError(path + " has unsupported version");
  BeamformedFrame frame;
  frame.grid = read_grid(f, path);
  double angles[2];
  read_bytes(f, angles, sizeof(angles), path);
  frame.tx_angle = angles[0];
  frame.rx_steer = angles[1];
  std::vector<float> data(frame.grid.num_pixels());
  read_bytes(f, data.data(), data.size() * 4, path);
  frame.rf.assign(data.begin(), data.end());
  return frame;
}

void write_measurements(const std::string& path, const MeasurementFile& m) {
  if (m.pairs.size() != m.maps.size()) throw IoError("pair/map count mismatch");
  std::FILE* f = open_or_throw(path, "wb");
  FileCloser closer{f};
  write_bytes(f, "SBDM", 4, path);
  const std::uint32_t version = 1;
  write_bytes(f, &version, 4, path);
  const std::int32_t npairs = static_cast<std::int32_t>(m.pairs.size());
  write_bytes(f, &npairs, 4, path);
  write_grid(f, m.grid, path);
  for (std::size_t k = 0; k < m.pairs.size(); ++k) {
    const std::int32_t ij[2] = {m.pairs[k].i, m.pairs[k].j};
    write_bytes(f, ij, sizeof(ij), path);
    write_bytes(f, &m.pairs[k].theta_psf, 8, path);
    const DisplacementMap& map = m.maps[k];
    if (map.grid.num_pixels() != m.grid.num_pixels()) throw IoError("map grid mismatch");
    write_bytes(f, map.dtau.data(), map.dtau.size() * 8, path);
    write_bytes(f, map.quality.data(), map.quality.size() * 8, path);
    write_bytes(f, map.valid.data(), map.valid.size(), path);
  }
}

MeasurementFile read_measurements(const std::string& path) {
  std::FILE* f = open_or_throw(path, "rb");
  FileCloser closer{f};
  check_magic(f, "SBDM", path);
  std::uint32_t version = 0;
  read_bytes(f, &version, 4, path);
  if (version != 1) throw IoError(path + " has unsupported version");
  MeasurementFile m;
  std::int32_t npairs = 0;
  read_bytes(f, &npairs, 4, path);
  m.grid = read_grid(f, path);
  const std::int64_t npix = m.grid.num_pixels();
  for (int k = 0; k < npairs; ++k) {
    std::int32_t ij[2];
    read_bytes(f, ij, sizeof(ij), path);
    AnglePair pair;
    pair.i = ij[0];
    pair.j = ij[1];
    read_bytes(f, &pair.theta_psf, 8, path);
    m.pairs.push_back(pair);
    DisplacementMap map;
    map.grid = m.grid;
    map.dtau.resize(npix);
    map.quality.resize(npix);
    map.valid.resize(npix);
    read_bytes(f, map.dtau.data(), npix * 8, path);
    read_bytes(f, map.quality.data(), npix * 8, path);
    read_bytes(f, map.valid.data(), npix, path);
    m.maps.push_back(std::move(map));
  }
  return m;
}

void write_sos_csv(const std::string& path, const SlownessMap& map) {
  ImagingGrid g;
  g.nx = map.grid.nx;
  g.nz = map.grid.nz;
  g.dx = map.grid.cell_w;
  g.dz = map.grid.cell_h;
  g.x0 = map.grid.x0 + 0.5 * map.grid.cell_w;
  g.z0 = map.grid.z0 + 0.5 * map.grid.cell_h;
  std::vector<double> sos(map.sigma.size());
  for (std::size_t k = 0; k < sos.size(); ++k) sos[k] = 1.0 / map.sigma[k];
  write_csv_matrix(path, g, sos);
}

SlownessMap read_sos_csv(const std::string& path) {
  ImagingGrid g;
  const std::vector<double> sos = read_csv_matrix(path, g);
  SlownessMap map;
  map.grid.nx = g.nx;
  map.grid.nz = g.nz;
  map.grid.cell_w = g.dx;
  map.grid.cell_h = g.dz;
  map.grid.x0 = g.x0 - 0.5 * g.dx;
  map.grid.z0 = g.z0 - 0.5 * g.dz;
  map.sigma.resize(sos.size());
  for (std::size_t k = 0; k < sos.size(); ++k) map.sigma[k] = 1.0 / sos[k];
  map.validate();
  return map;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("short write to " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sosbeam
