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

#include "planereg/phantom.hpp"

#include <cmath>
#include <vector>

#include "planereg/rng.hpp"

namespace planereg {
namespace {

// Density is composed from soft-edged primitives: air at -1000 HU, then the
// max of per-component contributions, plus a pose-locked texture inside the
// tissue envelope.  Edges span ~3 mm so the 5 mm grid still sees gradients.
constexpr double kEdgeMm = 3.0;
constexpr double kTissueHu = 60.0;
constexpr double kMarkerHu = 1150.0;
// Texture must carry enough variance that a 5 degree rotation already
// decorrelates the volume (pose identifiability); smooth surfaces alone move
// tangentially under rotation and barely change voxel values.
constexpr double kTextureHu = 650.0;
constexpr double kTextureWavelengthMm = 13.0;
constexpr int kNumTextureWaves = 6;

struct Component {
  Vec3 c;        // center, canonical frame
  Vec3 r;        // ellipsoid radii or box half-extents
  double hu;
  bool box;
  Mat3 orient;   // rows are the box axes; identity for ellipsoids
};

struct Shape {
  std::vector<Component> parts;   // parts[0] is the tissue envelope
  std::array<Vec3, kNumTextureWaves> tex_dirs{};
  std::array<double, kNumTextureWaves> phases{};
  double tex_k = 2.0 * kPi / kTextureWavelengthMm;
};

double smooth01(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * (3.0 - 2.0 * s);
}

double falloff(const Component& comp, const Vec3& p) {
  const Vec3 d = comp.box ? comp.orient * (p - comp.c) : (p - comp.c);
  double q;
  if (comp.box) {
    q = std::max({std::abs(d.x) / comp.r.x, std::abs(d.y) / comp.r.y,
                  std::abs(d.z) / comp.r.z});
  } else {
    const Vec3 n{d.x / comp.r.x, d.y / comp.r.y, d.z / comp.r.z};
    q = n.norm();
  }
  const double w = kEdgeMm / std::cbrt(comp.r.x * comp.r.y * comp.r.z);
  return smooth01((1.0 + w - q) / (2.0 * w));
}

Component ell(const Vec3& c, const Vec3& r, double hu) {
  return {c, r, hu, false, Mat3::identity()};
}

Component box(const Vec3& c, const Vec3& half, double hu,
              const Mat3& orient = Mat3::identity()) {
  return {c, half, hu, true, orient};
}

std::vector<Component> base_parts(BodyRegion region) {
  std::vector<Component> p;
  p.push_back(ell({0, 0, 0}, {34, 40, 66}, kTissueHu));  // tissue envelope first
  switch (region) {
    case BodyRegion::kAnkle:
      p.push_back(ell({0, 0, 28}, {15, 16, 40}, 700));     // tibia-like shaft
      p.push_back(ell({-16, -6, 30}, {6, 6, 36}, 650));    // thin second shaft
      p.push_back(box({0, 16, -40}, {22, 36, 11}, 600));   // foot slab
      p.push_back(ell({0, -22, -40}, {11, 12, 10}, 680));  // heel mass
      p.push_back(ell({14, 9, 4}, {7, 7, 7}, kMarkerHu));  // orientation marker
      break;
    case BodyRegion::kKnee:
      p.push_back(ell({2, 3, 38}, {15, 16, 34}, 700));
      p.push_back(ell({-2, -3, -38}, {14, 15, 34}, 690));
      p.push_back(ell({0, 24, 6}, {9, 6, 11}, 720));       // patella-like cap
      p.push_back(ell({12, 6, 6}, {9, 10, 8}, 660));
      p.push_back(ell({-13, -11, 14}, {7, 7, 7}, kMarkerHu));
      break;
    case BodyRegion::kWrist:
      p.push_back(ell({6, 0, 30}, {8, 9, 38}, 700));
      p.push_back(ell({-10, -4, 32}, {6, 7, 36}, 660));
      p.push_back(box({0, 4, -42}, {27, 9, 15}, 620));     // hand slab
      p.push_back(ell({4, 2, -16}, {14, 10, 9}, 690));     // carpal cluster
      p.push_back(ell({24, 10, -34}, {7, 7, 12}, 640));    // thumb lobe
      p.push_back(ell({-12, 11, -6}, {7, 7, 7}, kMarkerHu));
      break;
    case BodyRegion::kCalcaneus: {
      const Mat3 tilt = Mat3::rotation_x(deg_to_rad(kSemiCoronalTiltDeg));
      p.push_back(box({0, -8, -28}, {19, 27, 14}, 680));   // heel body
      p.push_back(ell({0, 10, -2}, {14, 14, 11}, 700));    // talus-like mass
      p.push_back(box({0, 8, 12}, {16, 5, 20}, 640, tilt.transposed()));
      p.push_back(ell({6, 30, -18}, {8, 9, 7}, 640));
      p.push_back(ell({13, -14, -16}, {7, 7, 7}, kMarkerHu));
      break;
    }
  }
  return p;
}

Shape make_shape(BodyRegion region, std::uint64_t shape_seed) {
  Shape s;
  s.parts = base_parts(region);
  Rng rng(derive_seed(0x5EEDF00Dull, shape_seed, static_cast<std::uint64_t>(region)));
  const double global = rng.uniform(0.96, 1.04);  // overall anatomy size
  for (Component& comp : s.parts) {
    comp.c = comp.c * global;
    comp.r = comp.r * global;
    comp.r.x *= rng.uniform(0.96, 1.04);
    comp.r.y *= rng.uniform(0.96, 1.04);
    comp.r.z *= rng.uniform(0.96, 1.04);
    comp.c.x += rng.uniform(-1.5, 1.5);
    comp.c.y += rng.uniform(-1.5, 1.5);
    comp.c.z += rng.uniform(-1.5, 1.5);
  }
  // Icosahedral half-vertex directions keep the waves well spread for every
  // seed (no rotation axis can align with more than one of them); a random
  // rotation of the whole set varies the texture per patient.
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  const Vec3 ico[kNumTextureWaves] = {{0, 1, phi},  {0, 1, -phi}, {1, phi, 0},
                                      {-1, phi, 0}, {phi, 0, 1},  {-phi, 0, 1}};
  Vec3 axis{rng.normal(), rng.normal(), rng.normal()};
  axis = axis * (1.0 / axis.norm());
  const Mat3 spin = Mat3::axis_angle(axis, rng.uniform(0.0, 2.0 * kPi));
  for (int i = 0; i < kNumTextureWaves; ++i) {
    s.tex_dirs[i] = spin * (ico[i] * (1.0 / ico[i].norm()));
  }
  for (double& phase : s.phases) phase = rng.uniform(0.0, 2.0 * kPi);
  return s;
}

double field(const Shape& s, const Vec3& p) {
  const double env = falloff(s.parts[0], p);
  if (env <= 0.0) return kAirHu;
  double best = (kTissueHu + 1000.0) * env;
  for (std::size_t i = 1; i < s.parts.size(); ++i) {
    best = std::max(best, (s.parts[i].hu + 1000.0) * falloff(s.parts[i], p));
  }
  double tex = 0.0;
  for (int i = 0; i < kNumTextureWaves; ++i) {
    tex += std::sin(s.tex_k * s.tex_dirs[i].dot(p) + s.phases[i]);
  }
  return std::max(kAirHu, kAirHu + best + kTextureHu * tex * env);
}

}  // namespace

PlaneTriplet canonical_planes(BodyRegion region, bool oblique_coronal) {
  Vec3 c_ax, c_cor, c_sag;
  switch (region) {
    case BodyRegion::kAnkle:
      c_ax = {0, 0, 8};
      c_cor = {0, 4, 0};
      c_sag = {6, 0, 0};
      break;
    case BodyRegion::kKnee:
      c_ax = {0, 0, 0};
      c_cor = {0, 6, 0};
      c_sag = {4, 0, 0};
      break;
    case BodyRegion::kWrist:
      c_ax = {0, 0, -20};
      c_cor = {0, 2, -10};
      c_sag = {5, 0, 0};
      break;
    case BodyRegion::kCalcaneus:
      c_ax = {0, 0, -18};
      c_cor = {0, -2, -22};
      c_sag = {4, -6, -20};
      break;
  }
  PlaneTriplet t;
  t.region = region;
  t.axial = Plane(c_ax, {1, 0, 0}, {0, 1, 0});
  if (oblique_coronal) {
    const double a = deg_to_rad(kSemiCoronalTiltDeg);
    t.coronal = Plane(c_cor, {1, 0, 0}, {0, std::sin(a), -std::cos(a)});
  } else {
    t.coronal = Plane(c_cor, {1, 0, 0}, {0, 0, -1});
  }
  t.sagittal = Plane(c_sag, {0, 1, 0}, {0, 0, -1});
  return t;
}

double phantom_field(BodyRegion region, std::uint64_t shape_seed, const Vec3& local) {
  return field(make_shape(region, shape_seed), local);
}

std::pair<Volume, PlaneTriplet> generate_phantom(const PhantomSpec& spec) {
  const Shape shape = make_shape(spec.region, spec.shape_seed);
  Volume v;
  v.meta = {spec.dims, spec.spacing};
  v.allocate();
  const RigidTransform inv = spec.pose.inverse();
  for (int k = 0; k < spec.dims[2]; ++k) {
    for (int j = 0; j < spec.dims[1]; ++j) {
      for (int i = 0; i < spec.dims[0]; ++i) {
        const Vec3 w = v.meta.voxel_to_world(i, j, k);
        v.at(i, j, k) = static_cast<float>(field(shape, inv.apply(w)));
      }
    }
  }

  return {std::move(v), truth_planes(spec)};
}

PlaneTriplet truth_planes(const PhantomSpec& spec) {
  const PlaneTriplet canon = canonical_planes(spec.region, spec.oblique_coronal);
  const Mat3& r = spec.pose.rotation();
  PlaneTriplet truth;
  truth.region = spec.region;
  for (int j = 0; j < kNumPlanes; ++j) {
    const Plane& p = canon.plane(j);
    truth.plane(j) = Plane(spec.pose.apply(p.center()), r * p.e_u(), r * p.e_v());
  }
  return truth;
}

}  // namespace planereg
