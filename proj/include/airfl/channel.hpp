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

#include "airfl/rng.hpp"
#include "airfl/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace airfl {

// Device placement layouts. kConcentrated puts every device in a single
// rectangular region near the surface; kTwoCluster places the first half
// there and the second half in a far region behind it.
enum class PlacementSetting { kConcentrated, kTwoCluster };

// Small-scale fading description per link group. Rician factors are linear
// scale; kappa = 0 reduces a link to pure Rayleigh scattering and large
// kappa approaches the deterministic line-of-sight component.
struct SmallScaleModel {
  double kappa_ris_ps = db_to_linear(3.0);  // surface to parameter server
  double kappa_direct = 0.0;                // device to parameter server
  double kappa_device_ris = 0.0;            // device to surface
};

// One draw of all propagation matrices, large-scale attenuation included.
//   h_dp:     N x M direct device-to-server channels (columns are devices)
//   h_rp:     N x L surface-to-server channel
//   h_dr:     L x M device-to-surface channels
//   cascades: per-device N x L matrices h_rp * diag(h_dr.col(m))
struct ChannelRealization {
  MatC h_dp;
  MatC h_rp;
  MatC h_dr;
  std::vector<MatC> cascades;

  int num_antennas() const { return static_cast<int>(h_dp.rows()); }
  int num_devices() const { return static_cast<int>(h_dp.cols()); }
  int num_ris_elements() const { return static_cast<int>(h_rp.cols()); }
};

// Draw device positions for the given layout. Server and surface positions
// take the Geometry defaults; device z coordinates are 0 (ground level).
Geometry place_devices(PlacementSetting setting, const SystemParams& params, RngStream& rng);

// Free-space-anchored power attenuation of the direct link at distance d_dp,
// with the fading exponent applied to the full wavelength-scaled ratio.
double path_loss_direct(double d_dp, const SystemParams& params);

// End-to-end power attenuation of the full surface-reflected path (all L
// elements combining coherently), for a device at distance d_dr from the
// surface and the surface at d_rp from the server.
double path_loss_cascaded(double d_rp, double d_dr, const SystemParams& params);

// Per-hop factors whose product times L^2 equals path_loss_cascaded. These
// scale h_rp and h_dr separately so that the assembled cascade carries the
// correct end-to-end attenuation.
double path_loss_ris_ps(double d_rp, const SystemParams& params);
double path_loss_device_ris(double d_dr, const SystemParams& params);

// Uniform-linear-array steering vector: n_elems unit-modulus entries with
// phase pi * n * direction_cosine at half-wavelength spacing.
VecC ula_steering(int n_elems, double direction_cosine);

// Assemble a realization from raw matrices (builds the cascade products).
ChannelRealization make_realization(MatC h_dp, MatC h_rp, MatC h_dr);

// Draw one channel realization: Rician or Rayleigh small-scale fading per
// link group, scaled by the geometric path losses above.
ChannelRealization draw_channels(const Geometry& geometry, const SystemParams& params,
                                 const SmallScaleModel& model, RngStream& rng);

// Effective uplink channel of device m under phase configuration theta:
// direct column plus cascade * theta. theta may be empty when L == 0.
VecC effective_channel(const ChannelRealization& ch, int m, const VecC& theta);

// Binary round-trip of a realization (header + row-major complex payload).
void save_realization(const ChannelRealization& ch, std::ostream& os);
ChannelRealization load_realization(std::istream& is);
void save_realization_file(const ChannelRealization& ch, const std::string& path);
ChannelRealization load_realization_file(const std::string& path);

}  // namespace airfl
