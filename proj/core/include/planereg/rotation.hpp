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
#include <string>

#include "planereg/geometry.hpp"

namespace planereg {

/// The four rotation output parameterizations the networks regress.
/// CLI/config names: euler | quat | 6dxy | 6dxz.
enum class RepresentationKind { kEulerSinCos = 0, kQuaternion = 1, kSixDxy = 2, kSixDxz = 3 };

std::string to_string(RepresentationKind kind);
RepresentationKind representation_from_string(const std::string& name);  // throws DataError

/// Number of raw values the network emits for a rotation in this representation.
constexpr int representation_size(RepresentationKind kind) {
  return kind == RepresentationKind::kQuaternion ? 4 : 6;
}

/// Raw representation vector, tagged by kind.
///
/// Layouts:
///   EulerSinCos: (sin a, cos a, sin b, cos b, sin c, cos c) for intrinsic
///                Z-Y-X angles a, b, c.
///   Quaternion : (w, x, y, z), canonicalized to w >= 0 on encode.
///   SixDxy     : matrix columns x then y, each (r0, r1, r2).
///   SixDxz     : matrix columns x then z.
///
/// After encode() all values lie in [-1, 1]; raw network output may not.
struct RotationEncoding {
  RepresentationKind kind = RepresentationKind::kSixDxy;
  std::array<double, 6> v{};  // quaternion uses the first 4 slots

  int size() const { return representation_size(kind); }
};

/// Encodes a valid rotation matrix.  Throws std::invalid_argument if r is not
/// orthonormal with det +1 (tolerance 1e-9).
RotationEncoding encode(const Mat3& r, RepresentationKind kind);

/// Decodes (with repair) a possibly perturbed raw vector into an exactly
/// orthonormal rotation.  6D kinds run Gram-Schmidt; quaternions are
/// normalized; Euler sin/cos pairs go through atan2 per angle.
/// Throws DegenerateEncoding for zero/parallel 6D columns or a zero
/// quaternion, and std::invalid_argument for non-finite input.
Mat3 decode(const RotationEncoding& e);

/// Geodesic distance between two rotations in radians, range [0, pi].
/// Computed as atan2(|skew part|, trace) of the relative rotation, which is
/// well-conditioned near both 0 and pi.
double geodesic_distance(const Mat3& a, const Mat3& b);

/// Intrinsic Z-Y-X Euler angles (a, b, c) with b in [-pi/2, pi/2].  At gimbal
/// lock (|cos b| ~ 0) the decomposition is not unique; this picks c = 0.
std::array<double, 3> euler_angles_zyx(const Mat3& r);

}  // namespace planereg
