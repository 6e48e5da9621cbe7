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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "planereg/errors.hpp"
#include "planereg/rng.hpp"
#include "test_util.hpp"

namespace planereg {
namespace {

// Homogeneous factor matrices written out entry by entry, independent of the
// Mat4 helpers, to serve as the composition oracle.
Mat4 raw_scale(double s) {
  Mat4 m = Mat4::identity();
  m(0, 0) = s;
  m(1, 1) = s;
  m(2, 2) = s;
  return m;
}

Mat4 raw_translation(const Vec3& t) {
  Mat4 m = Mat4::identity();
  m(0, 3) = t.x;
  m(1, 3) = t.y;
  m(2, 3) = t.z;
  return m;
}

Mat4 raw_rotation(const Mat3& r) {
  Mat4 m = Mat4::identity();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = r(i, j);
  return m;
}

Mat4 raw_mirror_x() {
  Mat4 m = Mat4::identity();
  m(0, 0) = -1.0;
  return m;
}

TEST(SampleParams, DeterministicGivenSeed) {
  AugmentConfig cfg;
  auto [sp1, ip1] = sample_params(cfg, 42);
  auto [sp2, ip2] = sample_params(cfg, 42);
  EXPECT_EQ(sp1.apply_rotation, sp2.apply_rotation);
  EXPECT_EQ(sp1.euler_rad, sp2.euler_rad);
  EXPECT_EQ(sp1.scale, sp2.scale);
  EXPECT_EQ(sp1.translation.x, sp2.translation.x);
  EXPECT_EQ(sp1.mirror_x, sp2.mirror_x);
  EXPECT_EQ(ip1.f, ip2.f);
  auto [sp3, ip3] = sample_params(cfg, 43);
  (void)ip3;
  // Different seed changes at least the continuous draws.
  EXPECT_NE(sp1.scale, sp3.scale);
}

TEST(SampleParams, FlagFrequenciesAndRanges) {
  AugmentConfig cfg;
  const int n = 100000;
  int rot = 0, scale = 0, trans = 0, mirror = 0;
  for (int i = 0; i < n; ++i) {
    auto [sp, ip] = sample_params(cfg, 1000 + i);
    rot += sp.apply_rotation;
    scale += sp.apply_scale;
    trans += sp.apply_translation;
    mirror += sp.mirror_x;
    for (double a : sp.euler_rad) {
      EXPECT_GE(a, deg_to_rad(-45.0));
      EXPECT_LE(a, deg_to_rad(45.0));
    }
    EXPECT_GE(sp.scale, 0.95);
    EXPECT_LE(sp.scale, 1.05);
    for (double t : {sp.translation.x, sp.translation.y, sp.translation.z}) {
      EXPECT_GE(t, -12.0);
      EXPECT_LE(t, 12.0);
    }
    EXPECT_GE(ip.f, 0.95);
    EXPECT_LE(ip.f, 1.05);
    EXPECT_EQ(sp.subsample_factor, 1.0);
  }
  for (int count : {rot, scale, trans, mirror}) {
    EXPECT_NEAR(count / static_cast<double>(n), 0.5, 0.01);
  }
}

TEST(SampleParams, ScaleIsUniformByKs) {
  AugmentConfig cfg;
  const int n = 100000;
  std::vector<double> xs;
  xs.reserve(n);
  for (int i = 0; i < n; ++i) {
    auto [sp, ip] = sample_params(cfg, 50000 + i);
    (void)ip;
    xs.push_back((sp.scale - 0.95) / 0.10);  // map to [0, 1]
  }
  std::sort(xs.begin(), xs.end());
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    double ecdf_hi = (i + 1) / static_cast<double>(n);
    double ecdf_lo = i / static_cast<double>(n);
    ks = std::max(ks, std::max(std::abs(ecdf_hi - xs[i]), std::abs(xs[i] - ecdf_lo)));
  }
  EXPECT_LT(ks, 0.01);
}

TEST(ComposeTransform, AllDisabledIsIdentity) {
  SpatialAugmentParams p;
  Mat4 m = compose_transform(p);
  Mat4 id = Mat4::identity();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) EXPECT_DOUBLE_EQ(m(r, c), id(r, c));
}

TEST(ComposeTransform, OnlyTranslation) {
  SpatialAugmentParams p;
  p.apply_translation = true;
  p.translation = {1.0, 2.0, 3.0};
  Mat4 m = compose_transform(p);
  EXPECT_DOUBLE_EQ(m(0, 3), 1.0);
  EXPECT_DOUBLE_EQ(m(1, 3), 2.0);
  EXPECT_DOUBLE_EQ(m(2, 3), 3.0);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(m(r, c), r == c ? 1.0 : 0.0);
}

// T_m must equal T_mirror * T_r * T_s * T_t * T_R for every enable subset.
TEST(ComposeTransform, MatchesFactorProductAll16Combos) {
  Rng rng(401);
  for (int combo = 0; combo < 16; ++combo) {
    for (int draw = 0; draw < 100; ++draw) {
      SpatialAugmentParams p;
      p.apply_rotation = combo & 1;
      p.apply_scale = combo & 2;
      p.apply_translation = combo & 4;
      p.mirror_x = combo & 8;
      p.rotation = testutil::random_rotation(rng);
      p.scale = rng.uniform(0.95, 1.05);
      p.translation = testutil::random_vec(rng, -12.0, 12.0);
      p.subsample_factor = rng.uniform(0.5, 2.0);

      Mat4 want = raw_scale(p.subsample_factor);
      if (p.apply_scale) want = want * raw_scale(p.scale);
      if (p.apply_translation) want = want * raw_translation(p.translation);
      if (p.apply_rotation) want = want * raw_rotation(p.rotation);
      if (p.mirror_x) want = raw_mirror_x() * want;

      Mat4 got = compose_transform(p);
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) EXPECT_NEAR(got(r, c), want(r, c), 1e-12);
    }
  }
}

// --- resample ---------------------------------------------------------------

Volume impulse_volume() {
  Volume v;
  v.meta = {{32, 32, 32}, {5.0, 5.0, 5.0}};
  v.allocate(0.0f);
  v.at(10, 16, 16) = 1000.0f;
  return v;
}

TEST(Resample, IdentitySameDimsIsBitwiseEqual) {
  Volume v = impulse_volume();
  Rng rng(402);
  for (float& x : v.voxels) x = static_cast<float>(rng.uniform(-1000.0, 2000.0));
  Volume out = resample(v, Mat4::identity(), v.meta.dims);
  ASSERT_EQ(out.voxels.size(), v.voxels.size());
  EXPECT_EQ(out.meta, v.meta);
  for (std::size_t i = 0; i < v.voxels.size(); ++i) EXPECT_EQ(out.voxels[i], v.voxels[i]);
}

TEST(Resample, TranslationMovesImpulseByWholeVoxels) {
  Volume v = impulse_volume();
  Volume out = resample(v, Mat4::from_translation({10.0, 0.0, 0.0}), v.meta.dims);
  EXPECT_EQ(out.at(12, 16, 16), 1000.0f);
  EXPECT_EQ(out.at(10, 16, 16), 0.0f);
  EXPECT_EQ(out.at(13, 16, 16), 0.0f);
  // Content shifted +x, so the low-x face now samples outside: fill.
  EXPECT_EQ(out.at(0, 16, 16), -1000.0f);
  EXPECT_EQ(out.at(1, 16, 16), -1000.0f);
  EXPECT_EQ(out.at(2, 16, 16), 0.0f);
}

TEST(Resample, SingularTransformRejected) {
  Volume v = impulse_volume();
  Mat4 sing = Mat4::identity();
  sing(1, 1) = 0.0;  // rank-deficient linear part
  EXPECT_THROW(resample(v, sing, v.meta.dims), DataError);
}

// Smooth field with closed form, decaying to the fill value at the border so
// composition comparisons are not dominated by boundary cut-offs.
double smooth_field(const Vec3& p) {
  auto bump = [](double x) {
    double t = std::clamp(1.0 - std::abs(x) / 80.0, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
  };
  double env = bump(p.x) * bump(p.y) * bump(p.z);
  double wave = 0.5 + 0.5 * std::sin(p.x / 25.0) * std::cos(p.y / 30.0) * std::cos(p.z / 35.0);
  return -1000.0 + 2200.0 * env * wave;
}

Volume smooth_volume() {
  Volume v;
  v.meta = {{32, 32, 32}, {5.0, 5.0, 5.0}};
  v.allocate();
  for (int k = 0; k < 32; ++k)
    for (int j = 0; j < 32; ++j)
      for (int i = 0; i < 32; ++i)
        v.at(i, j, k) = static_cast<float>(smooth_field(v.meta.voxel_to_world(i, j, k)));
  return v;
}

double max_error_vs_field(const Volume& out, const Mat4& t) {
  const Mat4 inv = t.affine_inverse();
  double worst = 0.0;
  for (int k = 0; k < out.meta.dims[2]; ++k)
    for (int j = 0; j < out.meta.dims[1]; ++j)
      for (int i = 0; i < out.meta.dims[0]; ++i) {
        Vec3 src = inv.apply_point(out.meta.voxel_to_world(i, j, k));
        worst = std::max(worst, std::abs(out.at(i, j, k) - smooth_field(src)));
      }
  return worst;
}

TEST(Resample, CompositionMatchesSinglePass) {
  Volume v = smooth_volume();
  Mat4 t1 = Mat4::from_rotation(Mat3::rotation_z(deg_to_rad(9.0))) *
            Mat4::from_translation({4.0, -3.0, 2.0});
  Mat4 t2 = Mat4::from_rotation(Mat3::rotation_x(deg_to_rad(-7.0))) *
            Mat4::from_scale(1.03);
  Mat4 t21 = t2 * t1;

  Volume direct = resample(v, t21, v.meta.dims);
  Volume two_pass = resample(resample(v, t1, v.meta.dims), t2, v.meta.dims);

  double e_single = max_error_vs_field(direct, t21);
  EXPECT_GT(e_single, 0.0);
  double e_double = max_error_vs_field(two_pass, t21);
  EXPECT_LT(e_double, 2.0 * e_single);
}

TEST(Resample, DoubleMirrorRestoresAllButLowXSlab) {
  Volume v = smooth_volume();
  Volume once = resample(v, Mat4::mirror_x(), v.meta.dims);
  Volume twice = resample(once, Mat4::mirror_x(), v.meta.dims);
  for (int k = 0; k < 32; ++k)
    for (int j = 0; j < 32; ++j) {
      // Voxel center x = -80 mm maps to +80 mm, outside the center box.
      EXPECT_EQ(twice.at(0, j, k), static_cast<float>(kAirHu));
      for (int i = 1; i < 32; ++i) EXPECT_EQ(twice.at(i, j, k), v.at(i, j, k));
    }
}

// --- transform_annotation ---------------------------------------------------

PlaneTriplet canonical_triplet() {
  PlaneTriplet t;
  t.region = BodyRegion::kAnkle;
  t.axial = Plane({0, 0, 0}, {1, 0, 0}, {0, 1, 0});
  t.coronal = Plane({0, 0, 0}, {1, 0, 0}, {0, 0, -1});
  t.sagittal = Plane({0, 0, 0}, {0, 1, 0}, {0, 0, -1});
  return t;
}

TEST(TransformAnnotation, IdentityLeavesUnchanged) {
  PlaneTriplet t = canonical_triplet();
  PlaneTriplet got = transform_annotation(t, Mat4::identity());
  EXPECT_EQ(got.region, t.region);
  for (int j = 0; j < kNumPlanes; ++j) {
    EXPECT_NEAR((got.plane(j).center() - t.plane(j).center()).norm(), 0.0, 1e-15);
    EXPECT_NEAR((got.plane(j).e_u() - t.plane(j).e_u()).norm(), 0.0, 1e-15);
    EXPECT_NEAR((got.plane(j).e_v() - t.plane(j).e_v()).norm(), 0.0, 1e-15);
  }
}

TEST(TransformAnnotation, PureTranslationShiftsCentersOnly) {
  PlaneTriplet t = canonical_triplet();
  PlaneTriplet got = transform_annotation(t, Mat4::from_translation({3.0, -4.0, 5.0}));
  for (int j = 0; j < kNumPlanes; ++j) {
    EXPECT_DOUBLE_EQ(got.plane(j).center().x, 3.0);
    EXPECT_DOUBLE_EQ(got.plane(j).center().y, -4.0);
    EXPECT_DOUBLE_EQ(got.plane(j).center().z, 5.0);
    EXPECT_NEAR((got.plane(j).e_u() - t.plane(j).e_u()).norm(), 0.0, 1e-15);
    EXPECT_NEAR((got.plane(j).e_v() - t.plane(j).e_v()).norm(), 0.0, 1e-15);
  }
}

TEST(TransformAnnotation, RotationTiltsNormalsByTheAngle) {
  PlaneTriplet t = canonical_triplet();
  Mat4 rot = Mat4::from_rotation(Mat3::rotation_x(deg_to_rad(30.0)));
  PlaneTriplet got = transform_annotation(t, rot);
  // The axial normal (0,0,1) is orthogonal to the x axis: tilts by 30 deg.
  EXPECT_NEAR(angle_between_deg(got.axial.e_w(), t.axial.e_w()), 30.0, 1e-9);
  // The sagittal normal is along x: unchanged.
  EXPECT_NEAR(angle_between_deg(got.sagittal.e_w(), t.sagittal.e_w()), 0.0, 1e-9);
}

TEST(TransformAnnotation, ScaleLeavesDirectionsUnit) {
  PlaneTriplet t = canonical_triplet();
  PlaneTriplet got = transform_annotation(t, Mat4::from_scale(1.05));
  for (int j = 0; j < kNumPlanes; ++j) {
    EXPECT_NEAR(got.plane(j).e_u().norm(), 1.0, 1e-12);
    EXPECT_NEAR(got.plane(j).e_v().norm(), 1.0, 1e-12);
  }
}

TEST(TransformAnnotation, MirrorNegatesEvAndDoubleMirrorIsExactIdentity) {
  PlaneTriplet t = canonical_triplet();
  PlaneTriplet once = transform_annotation(t, Mat4::mirror_x());
  // e_u maps through the mirror, e_v through the negated mirror.
  EXPECT_DOUBLE_EQ(once.axial.e_u().x, -1.0);
  EXPECT_DOUBLE_EQ(once.axial.e_v().y, -1.0);
  // Normal maps like a real-world direction under the mirror: z stays z.
  EXPECT_DOUBLE_EQ(once.axial.e_w().z, 1.0);

  PlaneTriplet twice = transform_annotation(once, Mat4::mirror_x());
  for (int j = 0; j < kNumPlanes; ++j) {
    EXPECT_EQ(twice.plane(j).e_u().x, t.plane(j).e_u().x);
    EXPECT_EQ(twice.plane(j).e_u().y, t.plane(j).e_u().y);
    EXPECT_EQ(twice.plane(j).e_u().z, t.plane(j).e_u().z);
    EXPECT_EQ(twice.plane(j).e_v().x, t.plane(j).e_v().x);
    EXPECT_EQ(twice.plane(j).e_v().y, t.plane(j).e_v().y);
    EXPECT_EQ(twice.plane(j).e_v().z, t.plane(j).e_v().z);
    EXPECT_EQ(twice.plane(j).center().x, t.plane(j).center().x);
  }
}

TEST(TransformAnnotation, RejectsNonConformingTransforms) {
  PlaneTriplet t = canonical_triplet();
  Mat4 aniso = Mat4::identity();
  aniso(0, 0) = 2.0;  // anisotropic scale
  EXPECT_THROW(transform_annotation(t, aniso), std::invalid_argument);
  Mat4 shear = Mat4::identity();
  shear(0, 1) = 0.3;
  EXPECT_THROW(transform_annotation(t, shear), std::invalid_argument);
}

// --- intensity --------------------------------------------------------------

TEST(Intensity, ClipRescaleKnownPoints) {
  IntensityParams ip;
  ip.f = 1.0;
  EXPECT_DOUBLE_EQ(clip_rescale(-1000.0, ip), 0.0);
  EXPECT_DOUBLE_EQ(clip_rescale(-491.0, ip), 0.0);
  EXPECT_DOUBLE_EQ(clip_rescale(1040.0, ip), 1.0);
  EXPECT_DOUBLE_EQ(clip_rescale(2500.0, ip), 1.0);
  EXPECT_DOUBLE_EQ(clip_rescale(275.0, ip), 0.5);  // midpoint of [-490, 1040]
}

TEST(Intensity, ClipRescaleAppliesFBeforeClip) {
  IntensityParams ip;
  ip.f = 1.05;
  // f * (990 + 1000) = 2089.5 > 2040: clipped at the top.
  EXPECT_DOUBLE_EQ(clip_rescale(990.0, ip), 1.0);
  ip.f = 0.95;
  // f * (1040 + 1000) = 1938 < 2040: no longer saturated.
  EXPECT_LT(clip_rescale(1040.0, ip), 1.0);
}

TEST(Intensity, WindowGainAndAnchors) {
  double g = window_gain(0.02);
  EXPECT_NEAR(g, 9.729550745276566, 1e-4);
  EXPECT_DOUBLE_EQ(window(0.5, g), 0.5);
  EXPECT_NEAR(window(0.3, g), 0.02, 1e-12);
  EXPECT_NEAR(window(0.7, g), 0.98, 1e-12);
  EXPECT_THROW(window_gain(0.0), std::invalid_argument);
  EXPECT_THROW(window_gain(1.0), std::invalid_argument);
}

TEST(Intensity, WindowMonotone) {
  double g = window_gain(0.02);
  double prev = -1.0;
  for (int i = 0; i <= 10000; ++i) {
    double w = window(i / 10000.0, g);
    EXPECT_GT(w, prev);
    prev = w;
  }
}

TEST(Intensity, FullPipelineLandsInUnitInterval) {
  IntensityParams ip;
  ip.f = 1.03;
  ip.g = window_gain(ip.y);
  Rng rng(403);
  for (int i = 0; i < 10000; ++i) {
    double hu = rng.uniform(-3000.0, 4000.0);
    double out = window(clip_rescale(hu, ip), ip.g);
    EXPECT_GE(out, 0.0);
    EXPECT_LE(out, 1.0);
  }
}

TEST(Intensity, NormalizeIntensityMatchesScalarPath) {
  Volume v = smooth_volume();
  IntensityParams ip;
  ip.f = 1.0;
  ip.g = window_gain(ip.y);
  Volume n = v;
  normalize_intensity(n, ip);
  for (std::size_t i = 0; i < v.voxels.size(); ++i) {
    EXPECT_EQ(n.voxels[i],
              static_cast<float>(window(clip_rescale(v.voxels[i], ip), ip.g)));
  }
}

// Augmenting the volume and the annotation together must keep the plane
// content consistent: slicing the augmented volume along the transformed
// plane reproduces the original slice.
TEST(Augment, VolumeAndAnnotationStayConsistent) {
  Volume v = smooth_volume();
  PlaneTriplet truth = canonical_triplet();

  SpatialAugmentParams p;
  p.apply_rotation = true;
  p.rotation = rotation_zyx(deg_to_rad(14.0), deg_to_rad(-9.0), deg_to_rad(21.0));
  p.apply_translation = true;
  p.translation = {6.0, -4.0, 3.0};
  p.apply_scale = true;
  p.scale = 1.04;
  Mat4 t = compose_transform(p);

  Volume aug = resample(v, t, v.meta.dims);
  PlaneTriplet moved = transform_annotation(truth, t);

  IntensityParams ip;
  ip.f = 1.0;
  ip.g = window_gain(ip.y);
  Volume v_n = v;
  normalize_intensity(v_n, ip);
  Volume aug_n = aug;
  normalize_intensity(aug_n, ip);

  // Under an isotropic scale s the in-plane sampling grid scales with the
  // content, so step the moved plane at s times the original spacing.
  for (int j = 0; j < kNumPlanes; ++j) {
    auto ref = sample_plane(v_n, truth.plane(j), 16, 16, 5.0, 5.0, 0.0);
    auto got = sample_plane(aug_n, moved.plane(j), 16, 16, 5.0 * p.scale, 5.0 * p.scale, 0.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) sum += std::abs(got[i] - ref[i]);
    EXPECT_LT(sum / ref.size(), 0.01) << "plane " << kPlaneNames[j];
  }
}

// With a mirror, the annotation stays right-handed (e_v negated), so the
// slice of the mirrored volume along the moved plane is the original slice
// flipped along v.
TEST(Augment, MirrorSliceIsVFlipped) {
  Volume v = smooth_volume();
  PlaneTriplet truth = canonical_triplet();
  Mat4 t = Mat4::mirror_x();
  Volume aug = resample(v, t, v.meta.dims);
  PlaneTriplet moved = transform_annotation(truth, t);

  const int n = 16;
  auto ref = sample_plane(v, truth.axial, n, n, 5.0, 5.0, 0.0);
  auto got = sample_plane(aug, moved.axial, n, n, 5.0, 5.0, 0.0);
  double sum = 0.0;
  for (int jv = 0; jv < n; ++jv)
    for (int iu = 0; iu < n; ++iu)
      sum += std::abs(got[jv * n + iu] - ref[(n - 1 - jv) * n + iu]);
  EXPECT_LT(sum / (n * n), 1.0);  // HU scale; interpolation error only
}

}  // namespace
}  // namespace planereg
