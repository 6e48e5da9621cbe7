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
#include <cmath>
#include <string>

namespace planereg {

// All geometry is carried in 64-bit reals; only network I/O is 32-bit.
// World coordinates are millimetres with the origin at the volume center.

inline constexpr double kOrthoTol = 1e-9;

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }

  constexpr bool operator==(const Vec3& o) const = default;  // exact, for metadata

  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const;  // throws on (near-)zero input

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// 3x3 matrix, row-major storage.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static constexpr Mat3 identity() { return Mat3{}; }
  static Mat3 from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2);
  static Mat3 from_cols(const Vec3& c0, const Vec3& c1, const Vec3& c2);
  static Mat3 rotation_x(double rad);
  static Mat3 rotation_y(double rad);
  static Mat3 rotation_z(double rad);
  static Mat3 axis_angle(const Vec3& axis, double rad);

  double operator()(int r, int c) const { return m[3 * r + c]; }
  double& operator()(int r, int c) { return m[3 * r + c]; }

  Vec3 row(int r) const { return {m[3 * r], m[3 * r + 1], m[3 * r + 2]}; }
  Vec3 col(int c) const { return {m[c], m[c + 3], m[c + 6]}; }

  Mat3 operator*(const Mat3& o) const;
  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  Mat3 transposed() const;
  double determinant() const;
  double trace() const { return m[0] + m[4] + m[8]; }
  bool finite() const;

  /// Largest absolute entry of (this^T * this - I); 0 for a perfect rotation.
  double orthonormality_error() const;
  bool is_rotation(double tol = kOrthoTol) const;
};

/// Composition of intrinsic Z-Y-X rotations: R = Rz(a) * Ry(b) * Rx(c).
/// This order is a fixed project-wide convention; changing it changes the
/// meaning of every serialized Euler encoding.
Mat3 rotation_zyx(double a_rad, double b_rad, double c_rad);

/// 4x4 homogeneous matrix, row-major.
struct Mat4 {
  std::array<double, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

  static constexpr Mat4 identity() { return Mat4{}; }
  static Mat4 from_rotation(const Mat3& r);
  static Mat4 from_translation(const Vec3& t);
  static Mat4 from_scale(double s);
  static Mat4 mirror_x();
  static Mat4 from_rigid(const Mat3& r, const Vec3& t);

  double operator()(int r, int c) const { return m[4 * r + c]; }
  double& operator()(int r, int c) { return m[4 * r + c]; }

  Mat4 operator*(const Mat4& o) const;
  /// Applies the transform to a point (w = 1).
  Vec3 apply_point(const Vec3& p) const;
  /// Applies only the linear (upper-left 3x3) part.
  Vec3 apply_vector(const Vec3& v) const;
  Mat3 linear() const;
  Vec3 translation() const { return {m[3], m[7], m[11]}; }

  /// Inverse of an affine transform (last row 0 0 0 1); throws DataError if
  /// the linear part is singular.
  Mat4 affine_inverse() const;
};

/// Rigid motion: orthonormal rotation (det +1, tolerance 1e-9) plus a
/// translation in mm.  Construction-checked.
class RigidTransform {
 public:
  RigidTransform() = default;
  RigidTransform(const Mat3& rotation, const Vec3& translation);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  Mat4 to_homogeneous() const { return Mat4::from_rigid(rotation_, translation_); }

  RigidTransform inverse() const;
  RigidTransform operator*(const RigidTransform& o) const;
  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

/// One MPR plane: center plus the orthonormal row (e_u), column (e_v) and
/// normal (e_w) directions.  e_w is always recomputed as e_u x e_v, so it is
/// exactly the cross product by construction.
class Plane {
 public:
  Plane() : e_u_(1, 0, 0), e_v_(0, 1, 0), e_w_(0, 0, 1) {}
  /// Throws std::invalid_argument if e_u/e_v are not unit-norm and mutually
  /// orthogonal within 1e-9.
  Plane(const Vec3& center, const Vec3& e_u, const Vec3& e_v);

  const Vec3& center() const { return center_; }
  const Vec3& e_u() const { return e_u_; }
  const Vec3& e_v() const { return e_v_; }
  const Vec3& e_w() const { return e_w_; }

 private:
  Vec3 center_;
  Vec3 e_u_, e_v_, e_w_;
};

enum class BodyRegion { kCalcaneus = 0, kAnkle = 1, kKnee = 2, kWrist = 3 };
inline constexpr int kNumRegions = 4;

std::string to_string(BodyRegion region);
BodyRegion region_from_string(const std::string& name);  // throws DataError

/// The three standard planes of one volume.  For the calcaneus the coronal
/// slot holds the oblique semi-coronal plane.
struct PlaneTriplet {
  Plane axial;
  Plane coronal;
  Plane sagittal;
  BodyRegion region = BodyRegion::kCalcaneus;

  const Plane& plane(int j) const { return j == 0 ? axial : (j == 1 ? coronal : sagittal); }
  Plane& plane(int j) { return j == 0 ? axial : (j == 1 ? coronal : sagittal); }
};
inline constexpr int kNumPlanes = 3;
inline constexpr const char* kPlaneNames[kNumPlanes] = {"axial", "coronal", "sagittal"};

/// Grid metadata of one volume.  The world origin sits at the volume center;
/// voxel index i maps to i * spacing - extent / 2 per axis.
struct VolumeMeta {
  std::array<int, 3> dims{0, 0, 0};  // voxels per axis
  Vec3 spacing{1, 1, 1};             // mm per voxel

  void validate() const;  // dims >= 2, spacing > 0; throws DataError
  Vec3 extent() const {
    return {dims[0] * spacing.x, dims[1] * spacing.y, dims[2] * spacing.z};
  }
  Vec3 voxel_to_world(double i, double j, double k) const;
  Vec3 world_to_voxel(const Vec3& p) const;
  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  bool operator==(const VolumeMeta& o) const = default;
};

/// Rows of the rotation give e_u, e_v, e_w; the translation gives the center.
Plane plane_from_transform(const RigidTransform& t);
RigidTransform transform_from_plane(const Plane& p);

/// Maps a world-mm position into [-1, 1]^3 relative to the volume half-extent.
/// Throws DataError for positions outside the physical extent.
Vec3 normalize_translation(const Vec3& t_mm, const VolumeMeta& meta);
/// Inverse of normalize_translation (total map, no range check).
Vec3 denormalize_translation(const Vec3& t_norm, const VolumeMeta& meta);

/// Angle between two directions in degrees, range [0, 180].  Computed from
/// atan2(|a x b|, a . b), which stays accurate near 0 and 180 degrees.
/// Throws std::invalid_argument for (near-)zero input.
double angle_between_deg(const Vec3& a, const Vec3& b);

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double deg_to_rad(double d) { return d * (kPi / 180.0); }
inline constexpr double rad_to_deg(double r) { return r * (180.0 / kPi); }

}  // namespace planereg
