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

#include "planereg/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "planereg/errors.hpp"

namespace planereg {

Vec3 Vec3::normalized() const {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("cannot normalize zero or non-finite vector");
  }
  return *this / n;
}

Mat3 Mat3::from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2) {
  Mat3 out;
  out.m = {r0.x, r0.y, r0.z, r1.x, r1.y, r1.z, r2.x, r2.y, r2.z};
  return out;
}

Mat3 Mat3::from_cols(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
  Mat3 out;
  out.m = {c0.x, c1.x, c2.x, c0.y, c1.y, c2.y, c0.z, c1.z, c2.z};
  return out;
}

Mat3 Mat3::rotation_x(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 out;
  out.m = {1, 0, 0, 0, c, -s, 0, s, c};
  return out;
}

Mat3 Mat3::rotation_y(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 out;
  out.m = {c, 0, s, 0, 1, 0, -s, 0, c};
  return out;
}

Mat3 Mat3::rotation_z(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 out;
  out.m = {c, -s, 0, s, c, 0, 0, 0, 1};
  return out;
}

Mat3 Mat3::axis_angle(const Vec3& axis, double rad) {
  const Vec3 a = axis.normalized();
  const double c = std::cos(rad), s = std::sin(rad), t = 1.0 - c;
  Mat3 out;
  out.m = {t * a.x * a.x + c,       t * a.x * a.y - s * a.z, t * a.x * a.z + s * a.y,
           t * a.x * a.y + s * a.z, t * a.y * a.y + c,       t * a.y * a.z - s * a.x,
           t * a.x * a.z - s * a.y, t * a.y * a.z + s * a.x, t * a.z * a.z + c};
  return out;
}

Mat3 Mat3::operator*(const Mat3& o) const {
  Mat3 out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      out(r, c) = (*this)(r, 0) * o(0, c) + (*this)(r, 1) * o(1, c) + (*this)(r, 2) * o(2, c);
    }
  }
  return out;
}

Mat3 Mat3::transposed() const {
  Mat3 out;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out(r, c) = (*this)(c, r);
  return out;
}

double Mat3::determinant() const {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

bool Mat3::finite() const {
  for (double v : m)
    if (!std::isfinite(v)) return false;
  return true;
}

double Mat3::orthonormality_error() const {
  const Mat3 g = transposed() * (*this);
  double err = 0.0;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      const double want = (r == c) ? 1.0 : 0.0;
      err = std::max(err, std::abs(g(r, c) - want));
    }
  }
  return err;
}

bool Mat3::is_rotation(double tol) const {
  return finite() && orthonormality_error() <= tol && std::abs(determinant() - 1.0) <= tol;
}

Mat3 rotation_zyx(double a_rad, double b_rad, double c_rad) {
  return Mat3::rotation_z(a_rad) * Mat3::rotation_y(b_rad) * Mat3::rotation_x(c_rad);
}

Mat4 Mat4::from_rotation(const Mat3& r) {
  Mat4 out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out(i, j) = r(i, j);
  return out;
}

Mat4 Mat4::from_translation(const Vec3& t) {
  Mat4 out;
  out(0, 3) = t.x;
  out(1, 3) = t.y;
  out(2, 3) = t.z;
  return out;
}

Mat4 Mat4::from_scale(double s) {
  Mat4 out;
  out(0, 0) = out(1, 1) = out(2, 2) = s;
  return out;
}

Mat4 Mat4::mirror_x() {
  Mat4 out;
  out(0, 0) = -1.0;
  return out;
}

Mat4 Mat4::from_rigid(const Mat3& r, const Vec3& t) {
  Mat4 out = from_rotation(r);
  out(0, 3) = t.x;
  out(1, 3) = t.y;
  out(2, 3) = t.z;
  return out;
}

Mat4 Mat4::operator*(const Mat4& o) const {
  Mat4 out;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += (*this)(r, k) * o(k, c);
      out(r, c) = acc;
    }
  }
  return out;
}

Vec3 Mat4::apply_point(const Vec3& p) const {
  return {m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3],
          m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7],
          m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11]};
}

Vec3 Mat4::apply_vector(const Vec3& v) const {
  return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[4] * v.x + m[5] * v.y + m[6] * v.z,
          m[8] * v.x + m[9] * v.y + m[10] * v.z};
}

Mat3 Mat4::linear() const {
  Mat3 out;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out(r, c) = (*this)(r, c);
  return out;
}

Mat4 Mat4::affine_inverse() const {
  const Mat3 a = linear();
  const double det = a.determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-12) {
    throw DataError("affine transform is singular, cannot invert");
  }
  Mat3 inv;
  inv(0, 0) = (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) / det;
  inv(0, 1) = (a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2)) / det;
  inv(0, 2) = (a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1)) / det;
  inv(1, 0) = (a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2)) / det;
  inv(1, 1) = (a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)) / det;
  inv(1, 2) = (a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2)) / det;
  inv(2, 0) = (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)) / det;
  inv(2, 1) = (a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1)) / det;
  inv(2, 2) = (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)) / det;
  const Vec3 t = translation();
  const Vec3 ti = -(inv * t);
  return Mat4::from_rigid(inv, ti);
}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.is_rotation()) {
    throw std::invalid_argument("RigidTransform rotation is not orthonormal with det +1");
  }
  if (!translation.finite()) {
    throw std::invalid_argument("RigidTransform translation is not finite");
  }
}

RigidTransform RigidTransform::inverse() const {
  const Mat3 rt = rotation_.transposed();
  return RigidTransform(rt, -(rt * translation_));
}

RigidTransform RigidTransform::operator*(const RigidTransform& o) const {
  return RigidTransform(rotation_ * o.rotation_, rotation_ * o.translation_ + translation_);
}

Plane::Plane(const Vec3& center, const Vec3& e_u, const Vec3& e_v)
    : center_(center), e_u_(e_u), e_v_(e_v), e_w_(e_u.cross(e_v)) {
  if (!center.finite() || !e_u.finite() || !e_v.finite()) {
    throw std::invalid_argument("Plane components must be finite");
  }
  if (std::abs(e_u.norm() - 1.0) > kOrthoTol || std::abs(e_v.norm() - 1.0) > kOrthoTol) {
    throw std::invalid_argument("Plane directions must be unit norm");
  }
  if (std::abs(e_u.dot(e_v)) > kOrthoTol) {
    throw std::invalid_argument("Plane directions must be orthogonal");
  }
}

std::string to_string(BodyRegion region) {
  switch (region) {
    case BodyRegion::kCalcaneus: return "calcaneus";
    case BodyRegion::kAnkle: return "ankle";
    case BodyRegion::kKnee: return "knee";
    case BodyRegion::kWrist: return "wrist";
  }
  return "unknown";
}

BodyRegion region_from_string(const std::string& name) {
  if (name == "calcaneus") return BodyRegion::kCalcaneus;
  if (name == "ankle") return BodyRegion::kAnkle;
  if (name == "knee") return BodyRegion::kKnee;
  if (name == "wrist") return BodyRegion::kWrist;
  throw DataError("unknown body region: " + name);
}

void VolumeMeta::validate() const {
  for (int d : dims) {
    if (d < 2) throw DataError("volume dims must be >= 2 per axis");
  }
  if (!(spacing.x > 0.0 && spacing.y > 0.0 && spacing.z > 0.0)) {
    throw DataError("volume spacing must be positive");
  }
}

Vec3 VolumeMeta::voxel_to_world(double i, double j, double k) const {
  const Vec3 e = extent();
  return {i * spacing.x - e.x / 2.0, j * spacing.y - e.y / 2.0, k * spacing.z - e.z / 2.0};
}

Vec3 VolumeMeta::world_to_voxel(const Vec3& p) const {
  const Vec3 e = extent();
  return {(p.x + e.x / 2.0) / spacing.x, (p.y + e.y / 2.0) / spacing.y,
          (p.z + e.z / 2.0) / spacing.z};
}

Plane plane_from_transform(const RigidTransform& t) {
  return Plane(t.translation(), t.rotation().row(0), t.rotation().row(1));
}

RigidTransform transform_from_plane(const Plane& p) {
  return RigidTransform(Mat3::from_rows(p.e_u(), p.e_v(), p.e_w()), p.center());
}

Vec3 normalize_translation(const Vec3& t_mm, const VolumeMeta& meta) {
  meta.validate();
  const Vec3 half = meta.extent() / 2.0;
  const Vec3 out{t_mm.x / half.x, t_mm.y / half.y, t_mm.z / half.z};
  if (std::abs(out.x) > 1.0 || std::abs(out.y) > 1.0 || std::abs(out.z) > 1.0) {
    throw DataError("translation outside physical volume extent");
  }
  return out;
}

Vec3 denormalize_translation(const Vec3& t_norm, const VolumeMeta& meta) {
  const Vec3 half = meta.extent() / 2.0;
  return {t_norm.x * half.x, t_norm.y * half.y, t_norm.z * half.z};
}

double angle_between_deg(const Vec3& a, const Vec3& b) {
  const double na = a.norm(), nb = b.norm();
  if (!(na > 1e-300) || !(nb > 1e-300)) {
    throw std::invalid_argument("angle_between requires nonzero vectors");
  }
  const double cross_norm = a.cross(b).norm();
  const double dot = a.dot(b);
  return rad_to_deg(std::atan2(cross_norm, dot));
}

}  // namespace planereg
