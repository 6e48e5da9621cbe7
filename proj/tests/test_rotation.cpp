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

#include <gtest/gtest.h>

#include <cmath>

#include "planereg/errors.hpp"
#include "planereg/rng.hpp"
#include "test_util.hpp"

namespace planereg {
namespace {

using testutil::random_rotation;

const RepresentationKind kAllKinds[] = {
    RepresentationKind::kEulerSinCos,
    RepresentationKind::kQuaternion,
    RepresentationKind::kSixDxy,
    RepresentationKind::kSixDxz,
};

TEST(Representation, NamesRoundTrip) {
  EXPECT_EQ(to_string(RepresentationKind::kEulerSinCos), "euler");
  EXPECT_EQ(to_string(RepresentationKind::kQuaternion), "quat");
  EXPECT_EQ(to_string(RepresentationKind::kSixDxy), "6dxy");
  EXPECT_EQ(to_string(RepresentationKind::kSixDxz), "6dxz");
  for (auto kind : kAllKinds) EXPECT_EQ(representation_from_string(to_string(kind)), kind);
  EXPECT_THROW(representation_from_string("axisangle"), DataError);
}

TEST(Representation, Sizes) {
  EXPECT_EQ(representation_size(RepresentationKind::kEulerSinCos), 6);
  EXPECT_EQ(representation_size(RepresentationKind::kQuaternion), 4);
  EXPECT_EQ(representation_size(RepresentationKind::kSixDxy), 6);
  EXPECT_EQ(representation_size(RepresentationKind::kSixDxz), 6);
}

TEST(EncodeDecode, RoundTripAllKinds) {
  Rng rng(201);
  for (int i = 0; i < 300; ++i) {
    Mat3 r = random_rotation(rng);
    for (auto kind : kAllKinds) {
      RotationEncoding e = encode(r, kind);
      for (int k = 0; k < e.size(); ++k) {
        EXPECT_GE(e.v[k], -1.0 - 1e-12);
        EXPECT_LE(e.v[k], 1.0 + 1e-12);
      }
      Mat3 back = decode(e);
      EXPECT_LT(back.orthonormality_error(), 1e-12);
      for (int rr = 0; rr < 3; ++rr)
        for (int cc = 0; cc < 3; ++cc)
          EXPECT_NEAR(back(rr, cc), r(rr, cc), 1e-12) << to_string(kind);
      EXPECT_LT(geodesic_distance(r, back), 1e-9) << to_string(kind);
    }
  }
}

TEST(EncodeDecode, SingleAxisEulerLayout) {
  double th = 0.37;
  RotationEncoding e = encode(Mat3::rotation_z(th), RepresentationKind::kEulerSinCos);
  EXPECT_NEAR(e.v[0], std::sin(th), 1e-15);
  EXPECT_NEAR(e.v[1], std::cos(th), 1e-15);
  EXPECT_NEAR(e.v[2], 0.0, 1e-15);
  EXPECT_NEAR(e.v[3], 1.0, 1e-15);
  EXPECT_NEAR(e.v[4], 0.0, 1e-15);
  EXPECT_NEAR(e.v[5], 1.0, 1e-15);

  RotationEncoding ex = encode(Mat3::rotation_x(th), RepresentationKind::kEulerSinCos);
  EXPECT_NEAR(ex.v[4], std::sin(th), 1e-15);
  EXPECT_NEAR(ex.v[5], std::cos(th), 1e-15);
}

TEST(EncodeDecode, EulerGimbalLock) {
  // b = +-pi/2 collapses a and c into one degree of freedom; round trip must
  // still reproduce the rotation and the encoder must emit c = 0.
  for (double sign : {1.0, -1.0}) {
    Mat3 r = rotation_zyx(0.3, sign * kPi / 2.0, 0.7);
    RotationEncoding e = encode(r, RepresentationKind::kEulerSinCos);
    EXPECT_NEAR(e.v[4], 0.0, 1e-12);  // sin c
    EXPECT_NEAR(e.v[5], 1.0, 1e-12);  // cos c
    EXPECT_LT(geodesic_distance(r, decode(e)), 1e-9);
  }
}

TEST(EncodeDecode, EulerAnglesZyxExtraction) {
  Rng rng(202);
  for (int i = 0; i < 200; ++i) {
    double a = rng.uniform(-kPi, kPi);
    double b = rng.uniform(-kPi / 2.0 + 0.01, kPi / 2.0 - 0.01);
    double c = rng.uniform(-kPi, kPi);
    auto [ga, gb, gc] = euler_angles_zyx(rotation_zyx(a, b, c));
    EXPECT_NEAR(ga, a, 1e-10);
    EXPECT_NEAR(gb, b, 1e-10);
    EXPECT_NEAR(gc, c, 1e-10);
  }
}

TEST(EncodeDecode, QuaternionCanonicalW) {
  Rng rng(203);
  for (int i = 0; i < 300; ++i) {
    RotationEncoding e = encode(random_rotation(rng), RepresentationKind::kQuaternion);
    EXPECT_GE(e.v[0], 0.0);
    double n = std::sqrt(e.v[0] * e.v[0] + e.v[1] * e.v[1] + e.v[2] * e.v[2] + e.v[3] * e.v[3]);
    EXPECT_NEAR(n, 1.0, 1e-12);
  }
  RotationEncoding id = encode(Mat3::identity(), RepresentationKind::kQuaternion);
  EXPECT_DOUBLE_EQ(id.v[0], 1.0);
  EXPECT_DOUBLE_EQ(id.v[1], 0.0);
}

TEST(EncodeDecode, QuaternionDecodeNormalizes) {
  Rng rng(204);
  Mat3 r = random_rotation(rng);
  RotationEncoding e = encode(r, RepresentationKind::kQuaternion);
  for (int k = 0; k < 4; ++k) e.v[k] *= 3.7;
  EXPECT_LT(geodesic_distance(r, decode(e)), 1e-9);
}

TEST(EncodeDecode, QuaternionKnownValue) {
  // 90 deg about z: q = (cos 45, 0, 0, sin 45).
  RotationEncoding e = encode(Mat3::rotation_z(kPi / 2.0), RepresentationKind::kQuaternion);
  const double h = std::sqrt(0.5);
  EXPECT_NEAR(e.v[0], h, 1e-12);
  EXPECT_NEAR(e.v[1], 0.0, 1e-12);
  EXPECT_NEAR(e.v[2], 0.0, 1e-12);
  EXPECT_NEAR(e.v[3], h, 1e-12);
}

TEST(EncodeDecode, SixDEncodingsAreMatrixColumns) {
  Rng rng(205);
  for (int i = 0; i < 100; ++i) {
    Mat3 r = random_rotation(rng);
    RotationEncoding xy = encode(r, RepresentationKind::kSixDxy);
    RotationEncoding xz = encode(r, RepresentationKind::kSixDxz);
    for (int k = 0; k < 3; ++k) {
      EXPECT_DOUBLE_EQ(xy.v[k], r(k, 0));
      EXPECT_DOUBLE_EQ(xy.v[3 + k], r(k, 1));
      EXPECT_DOUBLE_EQ(xz.v[k], r(k, 0));
      EXPECT_DOUBLE_EQ(xz.v[3 + k], r(k, 2));
    }
  }
}

// Hand-rolled Gram-Schmidt recipes, kept separate from the library decode.
Mat3 gram_schmidt_xy_oracle(const std::array<double, 6>& v) {
  Vec3 rx{v[0], v[1], v[2]}, ry{v[3], v[4], v[5]};
  Vec3 bx = rx.normalized();
  Vec3 bz = bx.cross(ry).normalized();
  Vec3 by = bz.cross(bx);
  return Mat3::from_cols(bx, by, bz);
}

Mat3 gram_schmidt_xz_oracle(const std::array<double, 6>& v) {
  Vec3 rx{v[0], v[1], v[2]}, rz{v[3], v[4], v[5]};
  Vec3 bx = rx.normalized();
  Vec3 by = rz.cross(bx).normalized();
  Vec3 bz = bx.cross(by);
  return Mat3::from_cols(bx, by, bz);
}

TEST(EncodeDecode, SixDRepairMatchesGramSchmidtOracle) {
  Rng rng(206);
  for (int i = 0; i < 200; ++i) {
    Mat3 r = random_rotation(rng);
    // Perturb like raw network output.
    RotationEncoding xy = encode(r, RepresentationKind::kSixDxy);
    RotationEncoding xz = encode(r, RepresentationKind::kSixDxz);
    for (int k = 0; k < 6; ++k) {
      double noise = rng.uniform(-0.2, 0.2);
      xy.v[k] += noise;
      xz.v[k] += noise;
    }
    Mat3 got_xy = decode(xy);
    Mat3 want_xy = gram_schmidt_xy_oracle(xy.v);
    Mat3 got_xz = decode(xz);
    Mat3 want_xz = gram_schmidt_xz_oracle(xz.v);
    for (int rr = 0; rr < 3; ++rr)
      for (int cc = 0; cc < 3; ++cc) {
        EXPECT_NEAR(got_xy(rr, cc), want_xy(rr, cc), 1e-13);
        EXPECT_NEAR(got_xz(rr, cc), want_xz(rr, cc), 1e-13);
      }
    EXPECT_LT(got_xy.orthonormality_error(), 1e-12);
    EXPECT_LT(got_xz.orthonormality_error(), 1e-12);
    EXPECT_NEAR(got_xy.determinant(), 1.0, 1e-12);
    EXPECT_NEAR(got_xz.determinant(), 1.0, 1e-12);
  }
}

TEST(EncodeDecode, SixDFirstColumnPreserved) {
  // The repair must keep the normalized first raw column exactly.
  RotationEncoding e;
  e.kind = RepresentationKind::kSixDxy;
  e.v = {2.0, 0.0, 0.0, 0.3, 1.0, 0.1};
  Mat3 r = decode(e);
  EXPECT_DOUBLE_EQ(r(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(r(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(r(2, 0), 0.0);
}

TEST(EncodeDecode, DegenerateInputsThrow) {
  RotationEncoding zero_col;
  zero_col.kind = RepresentationKind::kSixDxy;
  zero_col.v = {0.0, 0.0, 0.0, 0.0, 1.0, 0.0};
  EXPECT_THROW(decode(zero_col), DegenerateEncoding);

  RotationEncoding parallel;
  parallel.kind = RepresentationKind::kSixDxy;
  parallel.v = {1.0, 2.0, 3.0, 2.0, 4.0, 6.0};
  EXPECT_THROW(decode(parallel), DegenerateEncoding);

  RotationEncoding parallel_xz;
  parallel_xz.kind = RepresentationKind::kSixDxz;
  parallel_xz.v = {1.0, 0.0, 0.0, -1.0, 0.0, 0.0};
  EXPECT_THROW(decode(parallel_xz), DegenerateEncoding);

  RotationEncoding zero_quat;
  zero_quat.kind = RepresentationKind::kQuaternion;
  zero_quat.v = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  EXPECT_THROW(decode(zero_quat), DegenerateEncoding);

  RotationEncoding nan_enc;
  nan_enc.kind = RepresentationKind::kSixDxy;
  nan_enc.v = {1.0, 0.0, std::nan(""), 0.0, 1.0, 0.0};
  EXPECT_THROW(decode(nan_enc), std::invalid_argument);
}

TEST(EncodeDecode, EncodeRejectsNonRotations) {
  Mat3 mirror = Mat3::identity();
  mirror(2, 2) = -1.0;
  EXPECT_THROW(encode(mirror, RepresentationKind::kQuaternion), std::invalid_argument);
  Mat3 scaled = Mat3::identity();
  scaled(1, 1) = 1.001;
  EXPECT_THROW(encode(scaled, RepresentationKind::kSixDxy), std::invalid_argument);
}

TEST(Geodesic, ClosedFormAngles) {
  Rng rng(207);
  for (int i = 0; i < 200; ++i) {
    Mat3 r = random_rotation(rng);
    Vec3 axis{rng.normal(), rng.normal(), rng.normal()};
    double theta = rng.uniform(0.01, kPi - 0.01);
    Mat3 s = r * Mat3::axis_angle(axis.normalized(), theta);
    EXPECT_NEAR(geodesic_distance(r, s), theta, 1e-9);
    EXPECT_NEAR(geodesic_distance(s, r), theta, 1e-9);  // symmetry
  }
  Mat3 r = random_rotation(rng);
  EXPECT_LE(geodesic_distance(r, r), 1e-14);  // atan2 form is exact near zero
  EXPECT_DOUBLE_EQ(geodesic_distance(Mat3::identity(), Mat3::identity()), 0.0);
  EXPECT_NEAR(geodesic_distance(Mat3::identity(), Mat3::rotation_x(kPi)), kPi, 1e-12);
}

}  // namespace
}  // namespace planereg
