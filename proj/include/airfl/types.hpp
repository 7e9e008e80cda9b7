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

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace airfl {

using Complex = std::complex<double>;
using VecC = Eigen::VectorXcd;
using MatC = Eigen::MatrixXcd;
using VecR = Eigen::VectorXd;
using MatR = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;

inline constexpr double kSpeedOfLight = 3.0e8;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

// Thrown when a transceiver policy or beamformer initialization is requested
// for a device whose effective uplink channel is (numerically) zero.
class DegenerateChannelError : public std::runtime_error {
 public:
  explicit DegenerateChannelError(const std::string& what)
      : std::runtime_error(what) {}
};

// Static system-level parameters. Power and gain fields are linear scale;
// use db_to_linear() when populating them from dB/dBi figures.
struct SystemParams {
  int num_antennas = 5;       // receive antennas at the parameter server
  int num_ris_elements = 40;  // reflecting elements on the surface
  int num_devices = 40;

  double max_power = 0.1;       // per-device transmit power budget (W)
  double noise_power = 1e-10;   // receiver noise variance (W)
  double carrier_freq = 915e6;  // Hz
  double path_loss_exponent = 3.76;

  double gain_ps = db_to_linear(5.0);   // parameter-server antenna gain
  double gain_device = 1.0;             // device antenna gain
  double gain_ris = db_to_linear(5.0);  // per-element surface gain

  // Physical element aperture; defaults to one wavelength on each side.
  double element_size_x = kSpeedOfLight / 915e6;
  double element_size_y = kSpeedOfLight / 915e6;

  double wavelength() const { return kSpeedOfLight / carrier_freq; }

  void validate() const {
    if (num_antennas < 1) throw std::invalid_argument("num_antennas must be >= 1");
    if (num_ris_elements < 0) throw std::invalid_argument("num_ris_elements must be >= 0");
    if (num_devices < 1) throw std::invalid_argument("num_devices must be >= 1");
    if (max_power <= 0) throw std::invalid_argument("max_power must be > 0");
    if (noise_power < 0) throw std::invalid_argument("noise_power must be >= 0");
    if (carrier_freq <= 0) throw std::invalid_argument("carrier_freq must be > 0");
    if (path_loss_exponent <= 0) throw std::invalid_argument("path_loss_exponent must be > 0");
    if (gain_ps <= 0 || gain_device <= 0 || gain_ris <= 0)
      throw std::invalid_argument("antenna gains must be > 0");
    if (element_size_x <= 0 || element_size_y <= 0)
      throw std::invalid_argument("element sizes must be > 0");
  }
};

// Node placement; all coordinates in meters.
struct Geometry {
  Vec3 ps_position{-50.0, 0.0, 10.0};
  Vec3 ris_position{0.0, 0.0, 10.0};
  std::vector<Vec3> device_positions;

  double distance_device_ps(int m) const {
    return (device_positions.at(m) - ps_position).norm();
  }
  double distance_ris_ps() const { return (ris_position - ps_position).norm(); }
  double distance_device_ris(int m) const {
    return (device_positions.at(m) - ris_position).norm();
  }
};

// Binary device participation vector.
struct SelectionMask {
  std::vector<std::uint8_t> bits;

  SelectionMask() = default;
  explicit SelectionMask(int m) : bits(static_cast<std::size_t>(m), 0) {}

  static SelectionMask all_active(int m) {
    SelectionMask x(m);
    std::fill(x.bits.begin(), x.bits.end(), std::uint8_t{1});
    return x;
  }

  int size() const { return static_cast<int>(bits.size()); }
  bool active(int m) const { return bits.at(static_cast<std::size_t>(m)) != 0; }
  void set(int m, bool on) { bits.at(static_cast<std::size_t>(m)) = on ? 1 : 0; }
  void flip(int m) { bits.at(static_cast<std::size_t>(m)) ^= 1; }

  int count() const {
    int c = 0;
    for (auto b : bits) c += (b != 0);
    return c;
  }

  std::vector<int> active_indices() const {
    std::vector<int> idx;
    idx.reserve(bits.size());
    for (int m = 0; m < size(); ++m)
      if (bits[static_cast<std::size_t>(m)]) idx.push_back(m);
    return idx;
  }

  // Canonical '0'/'1' string, device 0 first; stable key for memo tables.
  std::string key() const {
    std::string s(bits.size(), '0');
    for (std::size_t i = 0; i < bits.size(); ++i)
      if (bits[i]) s[i] = '1';
    return s;
  }

  bool operator==(const SelectionMask& o) const { return bits == o.bits; }
};

// Unit-norm receive beamforming vector.
struct Beamformer {
  VecC f;
};

// Unit-modulus reflection coefficients; resolution_bits == 0 means the
// phases are continuous, b > 0 restricts them to 2^b uniform grid points.
struct RisPhase {
  VecC theta;
  int resolution_bits = 0;
};

inline void check_beamformer(const Beamformer& f, int n) {
  if (f.f.size() != n)
    throw std::invalid_argument("beamformer length does not match antenna count");
  if (std::abs(f.f.norm() - 1.0) > 1e-6)
    throw std::invalid_argument("beamformer must have unit norm");
}

inline void check_phases(const RisPhase& theta, int l) {
  if (theta.theta.size() != l)
    throw std::invalid_argument("phase vector length does not match element count");
  for (int i = 0; i < l; ++i)
    if (std::abs(std::abs(theta.theta(i)) - 1.0) > 1e-6)
      throw std::invalid_argument("phase entries must have unit modulus");
}

// Strong convexity / smoothness moduli of the global objective together with
// the bounded-gradient constants used by the convergence analysis. The step
// size tied to this analysis is exactly 1/omega.
struct ConvexityConstants {
  double mu = 0.0;
  double omega = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;

  double learning_rate() const { return 1.0 / omega; }

  void validate() const {
    if (!(mu > 0) || !(omega > 0)) throw std::invalid_argument("mu and omega must be > 0");
    if (mu > omega) throw std::invalid_argument("mu must not exceed omega");
    if (alpha1 < 0 || alpha2 < 0) throw std::invalid_argument("alpha1/alpha2 must be >= 0");
  }
};

}  // namespace airfl
