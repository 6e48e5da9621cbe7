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

#include <cstdint>
#include <utility>

#include "planereg/geometry.hpp"
#include "planereg/volume.hpp"

namespace planereg {

/// Tilt of the calcaneus semi-coronal plane about its e_u axis.
inline constexpr double kSemiCoronalTiltDeg = 25.0;

/// Recipe for one synthetic volume: a region-specific rigid structure with
/// exact ground-truth planes, rendered under a true pose.
struct PhantomSpec {
  BodyRegion region = BodyRegion::kCalcaneus;
  std::array<int, 3> dims{32, 32, 32};
  Vec3 spacing{5.0, 5.0, 5.0};  // 32 x 5 mm = 160 mm field of view
  RigidTransform pose;          // canonical anatomy frame -> world
  std::uint64_t shape_seed = 0;
  bool oblique_coronal = false;  // true for the calcaneus semi-coronal plane
};

/// Canonical standard planes of a region at identity pose.  The calcaneus
/// coronal slot holds the semi-coronal plane tilted kSemiCoronalTiltDeg
/// about e_u when oblique is set.
PlaneTriplet canonical_planes(BodyRegion region, bool oblique_coronal);

/// Closed-form phantom density (HU) at a point in the canonical frame.
/// Exposed so resampling tests can compare grids against the exact field.
double phantom_field(BodyRegion region, std::uint64_t shape_seed, const Vec3& local);

/// Ground-truth planes for a spec: the canonical planes mapped rigidly by the
/// pose.  No interpolation anywhere on this path.
PlaneTriplet truth_planes(const PhantomSpec& spec);

/// Renders the phantom under its pose and returns the exact ground-truth
/// planes (canonical planes mapped rigidly; no interpolation on this path).
std::pair<Volume, PlaneTriplet> generate_phantom(const PhantomSpec& spec);

}  // namespace planereg
