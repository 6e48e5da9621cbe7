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

#include "planereg/augment.hpp"

#include <cmath>
#include <stdexcept>

#include "planereg/errors.hpp"
#include "planereg/rng.hpp"

namespace planereg {

std::pair<SpatialAugmentParams, IntensityParams> sample_params(const AugmentConfig& cfg,
                                                               std::uint64_t seed) {
  Rng rng(seed);
  SpatialAugmentParams sp;
  sp.apply_rotation = rng.bernoulli(cfg.p);
  for (double& a : sp.euler_rad) a = deg_to_rad(rng.uniform(-cfg.rot_deg, cfg.rot_deg));
  sp.rotation = rotation_zyx(sp.euler_rad[0], sp.euler_rad[1], sp.euler_rad[2]);
  sp.apply_scale = rng.bernoulli(cfg.p);
  sp.scale = rng.uniform(cfg.scale_lo, cfg.scale_hi);
  sp.apply_translation = rng.bernoulli(cfg.p);
  sp.translation = {rng.uniform(-cfg.trans_mm, cfg.trans_mm),
                    rng.uniform(-cfg.trans_mm, cfg.trans_mm),
                    rng.uniform(-cfg.trans_mm, cfg.trans_mm)};
  sp.mirror_x = rng.bernoulli(cfg.mirror_p);

  IntensityParams ip;
  ip.f = rng.uniform(cfg.f_lo, cfg.f_hi);
  ip.min_hu = cfg.min_hu;
  ip.max_hu = cfg.max_hu;
  ip.y = cfg.y;
  ip.g = window_gain(cfg.y);
  return {sp, ip};
}

Mat4 compose_transform(const SpatialAugmentParams& p) {
  const Mat4 t_r = Mat4::from_scale(p.subsample_factor);
  const Mat4 t_s = p.apply_scale ? Mat4::from_scale(p.scale) : Mat4::identity();
  const Mat4 t_t =
      p.apply_translation ? Mat4::from_translation(p.translation) : Mat4::identity();
  const Mat4 t_rot = p.apply_rotation ? Mat4::from_rotation(p.rotation) : Mat4::identity();
  Mat4 m = t_r * (t_s * (t_t * t_rot));
  if (p.mirror_x) m = Mat4::mirror_x() * m;
  return m;
}

Volume resample(const Volume& v, const Mat4& t, const std::array<int, 3>& out_dims,
                double fill) {
  v.meta.validate();
  const Mat4 inv = t.affine_inverse();  // rejects singular t
  Volume out;
  out.meta.dims = out_dims;
  const Vec3 ext = v.meta.extent();
  out.meta.spacing = {ext.x / out_dims[0], ext.y / out_dims[1], ext.z / out_dims[2]};
  out.allocate();
  for (int k = 0; k < out_dims[2]; ++k) {
    for (int j = 0; j < out_dims[1]; ++j) {
      for (int i = 0; i < out_dims[0]; ++i) {
        const Vec3 src = inv.apply_point(out.meta.voxel_to_world(i, j, k));
        out.at(i, j, k) = static_cast<float>(sample_trilinear(v, src, fill));
      }
    }
  }
  return out;
}

namespace {

Plane map_plane(const Plane& p, const Mat4& t, const Mat3& dir, bool mirror) {
  Vec3 e_u = dir * p.e_u();
  Vec3 e_v = dir * p.e_v();
  if (mirror) e_v = -e_v;
  // Re-orthonormalize against accumulated rounding.
  e_u = e_u.normalized();
  e_v = (e_v - e_u * e_u.dot(e_v)).normalized();
  return Plane(t.apply_point(p.center()), e_u, e_v);
}

}  // namespace

PlaneTriplet transform_annotation(const PlaneTriplet& planes, const Mat4& t) {
  const Mat3 lin = t.linear();
  const double det = lin.determinant();
  if (std::abs(det) < 1e-12) {
    throw std::invalid_argument("transform_annotation: singular transform");
  }
  const double s = std::cbrt(std::abs(det));
  Mat3 dir = lin;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) dir(i, j) /= s;
  if (dir.orthonormality_error() > 1e-9) {
    throw std::invalid_argument(
        "transform_annotation: transform is not rigid x isotropic scale x mirror");
  }
  const bool mirror = det < 0.0;
  PlaneTriplet out;
  out.region = planes.region;
  out.axial = map_plane(planes.axial, t, dir, mirror);
  out.coronal = map_plane(planes.coronal, t, dir, mirror);
  out.sagittal = map_plane(planes.sagittal, t, dir, mirror);
  return out;
}

double window_gain(double y) {
  if (!(y > 0.0 && y < 1.0)) throw std::invalid_argument("window_gain: y must be in (0, 1)");
  return std::log((1.0 - y) / y) / 0.4;
}

double clip_rescale(double x_hu, const IntensityParams& ip) {
  const double lo = ip.min_hu + 1000.0;
  const double hi = ip.max_hu + 1000.0;
  const double v = ip.f * (x_hu + 1000.0);
  if (v <= lo) return 0.0;
  if (v >= hi) return 1.0;
  return (v - lo) / (hi - lo);
}

double window(double x, double g) { return 1.0 / (1.0 + std::exp(2.0 * g * (0.5 - x))); }

void normalize_intensity(Volume& v, const IntensityParams& ip) {
  for (float& x : v.voxels) {
    x = static_cast<float>(window(clip_rescale(x, ip), ip.g));
  }
}

}  // namespace planereg
