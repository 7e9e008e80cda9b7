// SPDX-License-Identifier: Apache-2.0
//
// airfl - over-the-air federated learning with reconfigurable intelligent surfaces
// Copyright (C) 2026 the airfl contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "airfl/channel.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace airfl {

namespace {

constexpr double kPi = std::numbers::pi;

// Near region: a 20 m x 20 m patch right in front of the surface.
// Far region: same footprint but displaced 100 m further out.
constexpr double kNearXMin = -20.0, kNearXMax = 0.0;
constexpr double kFarXMin = 100.0, kFarXMax = 120.0;
constexpr double kRegionYMin = -10.0, kRegionYMax = 10.0;

Vec3 draw_in_region(double x_min, double x_max, RngStream& rng) {
  const double x = rng.uniform(x_min, x_max);
  const double y = rng.uniform(kRegionYMin, kRegionYMax);
  return {x, y, 0.0};
}

// Direction cosine of the unit vector from `from` to `to` against the array
// axis (arrays are laid out along y).
double y_cosine(const Vec3& from, const Vec3& to) {
  const Vec3 d = to - from;
  const double n = d.norm();
  if (n == 0.0) throw std::invalid_argument("coincident node positions");
  return d.y() / n;
}

MatC blend_rician(double kappa, const MatC& los, const MatC& nlos) {
  if (kappa == 0.0) return nlos;
  const double w_los = std::sqrt(kappa / (1.0 + kappa));
  const double w_nlos = std::sqrt(1.0 / (1.0 + kappa));
  return w_los * los + w_nlos * nlos;
}

void write_mat(std::ostream& os, const MatC& m) {
  const std::int64_t rows = m.rows(), cols = m.cols();
  os.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  os.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < cols; ++c) {
      const double re = m(r, c).real(), im = m(r, c).imag();
      os.write(reinterpret_cast<const char*>(&re), sizeof(re));
      os.write(reinterpret_cast<const char*>(&im), sizeof(im));
    }
}

MatC read_mat(std::istream& is) {
  std::int64_t rows = 0, cols = 0;
  is.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  is.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!is || rows < 0 || cols < 0) throw std::runtime_error("corrupt channel file");
  MatC m(rows, cols);
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < cols; ++c) {
      double re = 0, im = 0;
      is.read(reinterpret_cast<char*>(&re), sizeof(re));
      is.read(reinterpret_cast<char*>(&im), sizeof(im));
      m(r, c) = Complex(re, im);
    }
  if (!is) throw std::runtime_error("truncated channel file");
  return m;
}

constexpr char kMagic[8] = {'A', 'I', 'R', 'F', 'L', 'C', 'H', '1'};

}  // namespace

Geometry place_devices(PlacementSetting setting, const SystemParams& params, RngStream& rng) {
  params.validate();
  if (setting == PlacementSetting::kTwoCluster && params.num_devices < 2)
    throw std::invalid_argument("two-cluster placement needs at least 2 devices");
  Geometry geo;
  geo.device_positions.reserve(static_cast<std::size_t>(params.num_devices));
  const int m_total = params.num_devices;
  const int m_near = (setting == PlacementSetting::kConcentrated) ? m_total : (m_total + 1) / 2;
  for (int m = 0; m < m_total; ++m) {
    if (m < m_near)
      geo.device_positions.push_back(draw_in_region(kNearXMin, kNearXMax, rng));
    else
      geo.device_positions.push_back(draw_in_region(kFarXMin, kFarXMax, rng));
  }
  return geo;
}

double path_loss_direct(double d_dp, const SystemParams& params) {
  if (d_dp <= 0.0) throw std::invalid_argument("direct-link distance must be > 0");
  const double ratio = kSpeedOfLight / (4.0 * kPi * params.carrier_freq * d_dp);
  return params.gain_ps * params.gain_device * std::pow(ratio, params.path_loss_exponent);
}

double path_loss_ris_ps(double d_rp, const SystemParams& params) {
  if (d_rp <= 0.0) throw std::invalid_argument("surface-to-server distance must be > 0");
  const double lambda = params.wavelength();
  return params.gain_ps * params.gain_ris * lambda * lambda /
         (16.0 * kPi * kPi * d_rp * d_rp);
}

double path_loss_device_ris(double d_dr, const SystemParams& params) {
  if (d_dr <= 0.0) throw std::invalid_argument("device-to-surface distance must be > 0");
  return params.gain_device * params.element_size_x * params.element_size_y /
         (4.0 * kPi * d_dr * d_dr);
}

double path_loss_cascaded(double d_rp, double d_dr, const SystemParams& params) {
  const double l2 = static_cast<double>(params.num_ris_elements) *
                    static_cast<double>(params.num_ris_elements);
  return l2 * path_loss_ris_ps(d_rp, params) * path_loss_device_ris(d_dr, params);
}

VecC ula_steering(int n_elems, double direction_cosine) {
  VecC a(n_elems);
  for (int n = 0; n < n_elems; ++n)
    a(n) = std::exp(Complex(0.0, kPi * n * direction_cosine));
  return a;
}

ChannelRealization make_realization(MatC h_dp, MatC h_rp, MatC h_dr) {
  if (h_rp.rows() != h_dp.rows())
    throw std::invalid_argument("antenna dimension mismatch between h_dp and h_rp");
  if (h_dr.rows() != h_rp.cols())
    throw std::invalid_argument("element dimension mismatch between h_rp and h_dr");
  if (h_dr.cols() != h_dp.cols())
    throw std::invalid_argument("device dimension mismatch between h_dp and h_dr");
  ChannelRealization ch;
  ch.h_dp = std::move(h_dp);
  ch.h_rp = std::move(h_rp);
  ch.h_dr = std::move(h_dr);
  const int m_total = ch.num_devices();
  ch.cascades.reserve(static_cast<std::size_t>(m_total));
  for (int m = 0; m < m_total; ++m)
    ch.cascades.push_back(ch.h_rp * ch.h_dr.col(m).asDiagonal());
  return ch;
}

ChannelRealization draw_channels(const Geometry& geometry, const SystemParams& params,
                                 const SmallScaleModel& model, RngStream& rng) {
  params.validate();
  const int n = params.num_antennas;
  const int l = params.num_ris_elements;
  const int m_total = params.num_devices;
  if (static_cast<int>(geometry.device_positions.size()) != m_total)
    throw std::invalid_argument("geometry holds a different number of devices than params");

  MatC h_dp = rng.cnormal_matrix(n, m_total);
  MatC h_rp = rng.cnormal_matrix(n, l);
  MatC h_dr = rng.cnormal_matrix(l, m_total);

  if (model.kappa_direct > 0.0) {
    MatC los(n, m_total);
    for (int m = 0; m < m_total; ++m)
      los.col(m) = ula_steering(n, y_cosine(geometry.ps_position, geometry.device_positions[m]));
    h_dp = blend_rician(model.kappa_direct, los, h_dp);
  }
  if (model.kappa_ris_ps > 0.0 && l > 0) {
    const VecC a_ps = ula_steering(n, y_cosine(geometry.ps_position, geometry.ris_position));
    const VecC a_ris = ula_steering(l, y_cosine(geometry.ris_position, geometry.ps_position));
    const MatC los = a_ps * a_ris.adjoint();
    h_rp = blend_rician(model.kappa_ris_ps, los, h_rp);
  }
  if (model.kappa_device_ris > 0.0 && l > 0) {
    MatC los(l, m_total);
    for (int m = 0; m < m_total; ++m)
      los.col(m) = ula_steering(l, y_cosine(geometry.ris_position, geometry.device_positions[m]));
    h_dr = blend_rician(model.kappa_device_ris, los, h_dr);
  }

  if (l > 0) h_rp *= std::sqrt(path_loss_ris_ps(geometry.distance_ris_ps(), params));
  for (int m = 0; m < m_total; ++m) {
    h_dp.col(m) *= std::sqrt(path_loss_direct(geometry.distance_device_ps(m), params));
    if (l > 0)
      h_dr.col(m) *= std::sqrt(path_loss_device_ris(geometry.distance_device_ris(m), params));
  }

  return make_realization(std::move(h_dp), std::move(h_rp), std::move(h_dr));
}

VecC effective_channel(const ChannelRealization& ch, int m, const VecC& theta) {
  if (m < 0 || m >= ch.num_devices()) throw std::out_of_range("device index out of range");
  if (theta.size() != ch.num_ris_elements())
    throw std::invalid_argument("phase vector length does not match element count");
  if (ch.num_ris_elements() == 0) return ch.h_dp.col(m);
  return ch.h_dp.col(m) + ch.cascades[static_cast<std::size_t>(m)] * theta;
}

void save_realization(const ChannelRealization& ch, std::ostream& os) {
  os.write(kMagic, sizeof(kMagic));
  write_mat(os, ch.h_dp);
  write_mat(os, ch.h_rp);
  write_mat(os, ch.h_dr);
  if (!os) throw std::runtime_error("failed to write channel data");
}

ChannelRealization load_realization(std::istream& is) {
  char magic[8] = {};
  is.read(magic, sizeof(magic));
  if (!is || !std::equal(std::begin(magic), std::end(magic), std::begin(kMagic)))
    throw std::runtime_error("not a channel realization file");
  MatC h_dp = read_mat(is);
  MatC h_rp = read_mat(is);
  MatC h_dr = read_mat(is);
  return make_realization(std::move(h_dp), std::move(h_rp), std::move(h_dr));
}

void save_realization_file(const ChannelRealization& ch, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  save_realization(ch, os);
}

ChannelRealization load_realization_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return load_realization(is);
}

}  // namespace airfl
