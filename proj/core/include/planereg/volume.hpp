// Copyright 2026 the planereg authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "planereg/geometry.hpp"

namespace planereg {

/// Fill value for samples outside the grid: air, which normalizes to 0.
inline constexpr double kAirHu = -1000.0;

/// Dense scalar grid, x-fastest voxel layout.  Values are HU before intensity
/// normalization and [0, 1] afterwards.
struct Volume {
  VolumeMeta meta;
  std::vector<float> voxels;

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(meta.dims[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(meta.dims[1]) * k);
  }
  float at(int i, int j, int k) const { return voxels[index(i, j, k)]; }
  float& at(int i, int j, int k) { return voxels[index(i, j, k)]; }

  /// Resizes the voxel buffer to match meta (validating it first).
  void allocate(float fill = 0.0f);
};

/// Trilinear interpolation at a world-mm position.  Points outside the voxel
///-center bounding box return fill.  Sampling exactly at a voxel center
/// reproduces that voxel's value bit-exactly.
double sample_trilinear(const Volume& v, const Vec3& world, double fill = kAirHu);

/// MPR slice: samples an n_u x n_v grid on the plane, centered on the plane
/// center, with du/dv mm steps along e_u/e_v.  Row-major, u fastest.
std::vector<double> sample_plane(const Volume& v, const Plane& plane, int n_u, int n_v,
                                 double du_mm, double dv_mm, double fill = kAirHu);

/// Writes base + ".raw" (little-endian 32-bit float voxels, x fastest) and
/// base + ".txt" (key = value sidecar: dims, spacing_mm, region).
void write_volume(const std::string& base_path, const Volume& v, BodyRegion region);

struct StoredVolume {
  Volume volume;
  BodyRegion region = BodyRegion::kCalcaneus;
};

/// Reads a volume written by write_volume.  Throws DataError on missing
/// files, malformed sidecars, or a size mismatch between sidecar and raw.
StoredVolume read_volume(const std::string& base_path);

}  // namespace planereg
