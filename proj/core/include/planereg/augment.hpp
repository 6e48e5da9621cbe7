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

#include <array>
#include <cstdint>
#include <utility>

#include "planereg/geometry.hpp"
#include "planereg/volume.hpp"

namespace planereg {

/// Augmentation ranges and probabilities (config keys aug.* / intensity.*).
struct AugmentConfig {
  double rot_deg = 45.0;     // aug.rot_deg: Euler angles uniform in [-45, 45] deg
  double scale_lo = 0.95;    // aug.scale
  double scale_hi = 1.05;
  double trans_mm = 12.0;    // aug.trans_mm: each axis uniform in [-12, 12] mm
  double p = 0.5;            // aug.p: per-operation enable probability
  double mirror_p = 0.5;     // aug.mirror_p
  double min_hu = -490.0;    // intensity.min_hu
  double max_hu = 1040.0;    // intensity.max_hu
  double f_lo = 0.95;        // intensity.f
  double f_hi = 1.05;
  double y = 0.02;           // intensity.y: window tail level
};

/// One draw of the spatial augmentation.  Values are always sampled (the RNG
/// stream has fixed length); the apply flags decide what takes effect.
struct SpatialAugmentParams {
  bool apply_rotation = false;
  Mat3 rotation = Mat3::identity();   // rotation_zyx of euler_rad
  std::array<double, 3> euler_rad{};  // sampled intrinsic Z-Y-X angles
  bool apply_scale = false;
  double scale = 1.0;
  bool apply_translation = false;
  Vec3 translation{0.0, 0.0, 0.0};
  bool mirror_x = false;
  double subsample_factor = 1.0;  // d of the composite; the extent-preserving
                                  // output grid absorbs resolution changes, so
                                  // this stays 1 and is never randomized
};

/// One draw of the intensity augmentation plus the fixed window constants.
struct IntensityParams {
  double f = 1.0;
  double min_hu = -490.0;
  double max_hu = 1040.0;
  double y = 0.02;
  double g = 0.0;  // window gain derived from y
};

/// Deterministic parameter draw for one sample.  Draw order is fixed and
/// independent of the enable flags: rotation flag, 3 angles, scale flag,
/// scale, translation flag, 3 offsets, mirror flag, intensity factor.
std::pair<SpatialAugmentParams, IntensityParams> sample_params(const AugmentConfig& cfg,
                                                               std::uint64_t seed);

/// Composite motion T_m = T_r * T_s * T_t * T_R (rotation applied first),
/// with the mirror diag(-1,1,1) multiplied on the left (applied last, world
/// frame).  Disabled operations contribute identity.
Mat4 compose_transform(const SpatialAugmentParams& p);

/// Applies the world-space motion t to the volume content in one trilinear
/// pass: out(x) = v(t^-1 x) on an output grid with out_dims voxels spanning
/// the input's physical extent.  So resample(resample(v,t1),t2) ~=
/// resample(v, t2*t1).  Out-of-support samples get fill.
Volume resample(const Volume& v, const Mat4& t, const std::array<int, 3>& out_dims,
                double fill = kAirHu);

/// Maps plane annotations by the same motion: centers through t, directions
/// through the orthogonal part.  After a mirror, e_v is negated (not e_u) to
/// restore right-handedness, so e_w maps like the content normal.  Throws
/// std::invalid_argument unless t is rigid x isotropic scale x mirror.
PlaneTriplet transform_annotation(const PlaneTriplet& planes, const Mat4& t);

/// Gain g = ln((1 - y) / y) / 0.4; requires 0 < y < 1.
double window_gain(double y);

/// Piecewise-linear HU normalization: f * (x + 1000) mapped onto [0, 1] over
/// [min_hu + 1000, max_hu + 1000], clipped after the f-scaling.
double clip_rescale(double x_hu, const IntensityParams& ip);

/// Sigmoid contrast window on [0, 1]: w(x) = 1 / (1 + exp(2 g (0.5 - x))).
/// The factor 2 makes the gain from window_gain hit the anchors
/// w(0.5 - 0.2) = y and w(0.5 + 0.2) = 1 - y exactly.
double window(double x, double g);

/// Applies clip_rescale then window to every voxel in place.
void normalize_intensity(Volume& v, const IntensityParams& ip);

}  // namespace planereg
