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

#include "planereg/rotation.hpp"

#include <cmath>
#include <stdexcept>

#include "planereg/errors.hpp"

namespace planereg {
namespace {

constexpr double kDegenerateNormTol = 1e-12;

void require_rotation(const Mat3& r) {
  if (!r.is_rotation()) {
    throw std::invalid_argument("encode requires an orthonormal matrix with det +1");
  }
}

void require_finite(const RotationEncoding& e) {
  for (int i = 0; i < e.size(); ++i) {
    if (!std::isfinite(e.v[i])) throw std::invalid_argument("encoding has non-finite values");
  }
}

/// Robust matrix -> quaternion conversion (largest-pivot variant).
std::array<double, 4> quat_from_matrix(const Mat3& r) {
  std::array<double, 4> q{};  // (w, x, y, z)
  const double tr = r.trace();
  if (tr > 0.0) {
    double s = std::sqrt(tr + 1.0) * 2.0;
    q[0] = 0.25 * s;
    q[1] = (r(2, 1) - r(1, 2)) / s;
    q[2] = (r(0, 2) - r(2, 0)) / s;
    q[3] = (r(1, 0) - r(0, 1)) / s;
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
    q[0] = (r(2, 1) - r(1, 2)) / s;
    q[1] = 0.25 * s;
    q[2] = (r(0, 1) + r(1, 0)) / s;
    q[3] = (r(0, 2) + r(2, 0)) / s;
  } else if (r(1, 1) > r(2, 2)) {
    double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
    q[0] = (r(0, 2) - r(2, 0)) / s;
    q[1] = (r(0, 1) + r(1, 0)) / s;
    q[2] = 0.25 * s;
    q[3] = (r(1, 2) + r(2, 1)) / s;
  } else {
    double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
    q[0] = (r(1, 0) - r(0, 1)) / s;
    q[1] = (r(0, 2) + r(2, 0)) / s;
    q[2] = (r(1, 2) + r(2, 1)) / s;
    q[3] = 0.25 * s;
  }
  return q;
}

Mat3 matrix_from_unit_quat(double w, double x, double y, double z) {
  Mat3 r;
  r(0, 0) = 1.0 - 2.0 * (y * y + z * z);
  r(0, 1) = 2.0 * (x * y - w * z);
  r(0, 2) = 2.0 * (x * z + w * y);
  r(1, 0) = 2.0 * (x * y + w * z);
  r(1, 1) = 1.0 - 2.0 * (x * x + z * z);
  r(1, 2) = 2.0 * (y * z - w * x);
  r(2, 0) = 2.0 * (x * z - w * y);
  r(2, 1) = 2.0 * (y * z + w * x);
  r(2, 2) = 1.0 - 2.0 * (x * x + y * y);
  return r;
}

Mat3 decode_six_d_xy(const RotationEncoding& e) {
  const Vec3 raw_x{e.v[0], e.v[1], e.v[2]};
  const Vec3 raw_y{e.v[3], e.v[4], e.v[5]};
  if (raw_x.norm() < kDegenerateNormTol || raw_y.norm() < kDegenerateNormTol) {
    throw DegenerateEncoding("6dxy: zero column vector");
  }
  const Vec3 col_x = raw_x.normalized();
  const Vec3 cross = col_x.cross(raw_y);
  if (cross.norm() < kDegenerateNormTol * raw_y.norm()) {
    throw DegenerateEncoding("6dxy: column vectors are parallel");
  }
  const Vec3 col_z = cross.normalized();
  const Vec3 col_y = col_z.cross(col_x);
  return Mat3::from_cols(col_x, col_y, col_z);
}

Mat3 decode_six_d_xz(const RotationEncoding& e) {
  const Vec3 raw_x{e.v[0], e.v[1], e.v[2]};
  const Vec3 raw_z{e.v[3], e.v[4], e.v[5]};
  if (raw_x.norm() < kDegenerateNormTol || raw_z.norm() < kDegenerateNormTol) {
    throw DegenerateEncoding("6dxz: zero column vector");
  }
  const Vec3 col_x = raw_x.normalized();
  const Vec3 cross = raw_z.cross(col_x);
  if (cross.norm() < kDegenerateNormTol * raw_z.norm()) {
    throw DegenerateEncoding("6dxz: column vectors are parallel");
  }
  const Vec3 col_y = cross.normalized();
  const Vec3 col_z = col_x.cross(col_y);
  return Mat3::from_cols(col_x, col_y, col_z);
}

}  // namespace

std::string to_string(RepresentationKind kind) {
  switch (kind) {
    case RepresentationKind::kEulerSinCos: return "euler";
    case RepresentationKind::kQuaternion: return "quat";
    case RepresentationKind::kSixDxy: return "6dxy";
    case RepresentationKind::kSixDxz: return "6dxz";
  }
  return "unknown";
}

RepresentationKind representation_from_string(const std::string& name) {
  if (name == "euler") return RepresentationKind::kEulerSinCos;
  if (name == "quat") return RepresentationKind::kQuaternion;
  if (name == "6dxy") return RepresentationKind::kSixDxy;
  if (name == "6dxz") return RepresentationKind::kSixDxz;
  throw DataError("unknown rotation representation: " + name);
}

std::array<double, 3> euler_angles_zyx(const Mat3& r) {
  // r(2,0) = -sin b; cos b = |(r00, r10)|.
  const double sb = -r(2, 0);
  const double cb = std::sqrt(r(0, 0) * r(0, 0) + r(1, 0) * r(1, 0));
  const double b = std::atan2(sb, cb);
  if (cb < 1e-12) {
    // Gimbal lock: only a -+ c is determined; pick c = 0.
    const double a = std::atan2(-r(0, 1), r(1, 1));
    return {a, b, 0.0};
  }
  const double a = std::atan2(r(1, 0), r(0, 0));
  const double c = std::atan2(r(2, 1), r(2, 2));
  return {a, b, c};
}

RotationEncoding encode(const Mat3& r, RepresentationKind kind) {
  require_rotation(r);
  RotationEncoding e;
  e.kind = kind;
  switch (kind) {
    case RepresentationKind::kEulerSinCos: {
      const auto [a, b, c] = euler_angles_zyx(r);
      e.v = {std::sin(a), std::cos(a), std::sin(b), std::cos(b), std::sin(c), std::cos(c)};
      break;
    }
    case RepresentationKind::kQuaternion: {
      auto q = quat_from_matrix(r);
      if (q[0] < 0.0) {
        for (double& c : q) c = -c;
      }
      e.v = {q[0], q[1], q[2], q[3], 0.0, 0.0};
      break;
    }
    case RepresentationKind::kSixDxy: {
      const Vec3 cx = r.col(0), cy = r.col(1);
      e.v = {cx.x, cx.y, cx.z, cy.x, cy.y, cy.z};
      break;
    }
    case RepresentationKind::kSixDxz: {
      const Vec3 cx = r.col(0), cz = r.col(2);
      e.v = {cx.x, cx.y, cx.z, cz.x, cz.y, cz.z};
      break;
    }
  }
  return e;
}

Mat3 decode(const RotationEncoding& e) {
  require_finite(e);
  switch (e.kind) {
    case RepresentationKind::kEulerSinCos: {
      const double a = std::atan2(e.v[0], e.v[1]);
      const double b = std::atan2(e.v[2], e.v[3]);
      const double c = std::atan2(e.v[4], e.v[5]);
      return rotation_zyx(a, b, c);
    }
    case RepresentationKind::kQuaternion: {
      const double n = std::sqrt(e.v[0] * e.v[0] + e.v[1] * e.v[1] + e.v[2] * e.v[2] +
                                 e.v[3] * e.v[3]);
      if (n < kDegenerateNormTol) throw DegenerateEncoding("quaternion: zero norm");
      return matrix_from_unit_quat(e.v[0] / n, e.v[1] / n, e.v[2] / n, e.v[3] / n);
    }
    case RepresentationKind::kSixDxy:
      return decode_six_d_xy(e);
    case RepresentationKind::kSixDxz:
      return decode_six_d_xz(e);
  }
  throw std::invalid_argument("unknown representation kind");
}

double geodesic_distance(const Mat3& a, const Mat3& b) {
  // atan2 of the relative rotation's skew norm and trace.  Unlike the
  // clamped-acos trace formula (error floor ~sqrt(eps) near 0 and pi), this
  // stays accurate over the whole range.
  const Mat3 e = a.transposed() * b;
  const Vec3 skew{e(2, 1) - e(1, 2), e(0, 2) - e(2, 0), e(1, 0) - e(0, 1)};
  const double sin_t = 0.5 * skew.norm();
  const double cos_t = 0.5 * (e.trace() - 1.0);
  return std::atan2(sin_t, cos_t);
}

}  // namespace planereg
