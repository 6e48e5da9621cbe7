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
#include <vector>

#include "planereg/geometry.hpp"

namespace planereg {

/// Per-plane prediction errors against the ground-truth triplet.
struct PlaneErrors {
  std::array<double, kNumPlanes> d_mm{};        // |center delta . truth normal|
  std::array<double, kNumPlanes> eps_n_deg{};   // normal deviation
  std::array<double, kNumPlanes> eps_i_deg{};   // in-plane direction deviation
  /// False where a predicted in-plane direction was (near) parallel to the
  /// truth normal, making the projection for eps_i degenerate.
  std::array<bool, kNumPlanes> projection_ok{true, true, true};

  double mean_d() const { return (d_mm[0] + d_mm[1] + d_mm[2]) / 3.0; }
  double mean_eps_n() const {
    return (eps_n_deg[0] + eps_n_deg[1] + eps_n_deg[2]) / 3.0;
  }
  double mean_eps_i() const {
    return (eps_i_deg[0] + eps_i_deg[1] + eps_i_deg[2]) / 3.0;
  }
};

/// Weighted single-number metric: p = (1/3) sum_j (0.2 d_j + 0.6 eps_n,j +
/// 0.2 eps_i,j), millimetres and degrees entering with those fixed weights.
struct ScoreReport {
  PlaneErrors errors;
  double score = 0.0;
  BodyRegion region = BodyRegion::kCalcaneus;
  int fold = -1;
};

/// Errors of a predicted triplet against the annotation.  Both triplets must
/// be for the same region.  d uses the truth normal, eps_i projects the
/// predicted e_u/e_v onto the truth plane and averages the two angles.
ScoreReport score(const PlaneTriplet& pred, const PlaneTriplet& truth);

/// Which angular relations hold between a region's standard planes.
/// Ankle, knee, and wrist planes are mutually orthogonal; the calcaneus
/// semi-coronal plane is oblique, so only axial-sagittal is enforced there.
enum class CouplingMode { kAllOrthogonal, kAxialSagittalOnly };

CouplingMode coupling_mode(BodyRegion region);

struct CoupleResult {
  PlaneTriplet planes;
  /// False when the predicted axial/coronal (or axial/sagittal) normals were
  /// less than 1 degree apart, leaving no stable intersection line; the
  /// input is returned unchanged in that case.
  bool applied = true;
};

/// Post-processing that restores the clinically expected plane relations,
/// with the axial plane as the fixed reference:
///   - coronal and sagittal are rotated in-plane so their intersection line
///     with the axial plane lies along e_u (intersection angle 0);
///   - under kAllOrthogonal the coronal normal is tilted onto the axial
///     plane (minimal correction) and the sagittal normal is replaced by the
///     cross product of the axial and coronal normals;
///   - under kAxialSagittalOnly the sagittal normal is orthogonalized
///     against the axial normal only and the coronal normal is kept.
/// Centers never move, so the translation error d is exactly invariant.
/// The operation is idempotent.
CoupleResult couple_planes(const PlaneTriplet& pred, CouplingMode mode);

/// Median with the even-count convention of averaging the middle pair.
/// Throws DataError on empty input.
double median(std::vector<double> values);

/// Per-fold medians of each error component (plane-averaged per volume).
struct FoldSummary {
  int fold = -1;
  int n_volumes = 0;
  double median_d = 0.0;
  double median_eps_n = 0.0;
  double median_eps_i = 0.0;
  double median_score = 0.0;
};

/// Mean and sample (n-1) standard deviation of the fold medians; with a
/// single fold the deviations are zero.
struct AggregateSummary {
  std::vector<FoldSummary> folds;
  double mean_d = 0.0, std_d = 0.0;
  double mean_eps_n = 0.0, std_eps_n = 0.0;
  double mean_eps_i = 0.0, std_eps_i = 0.0;
  double mean_score = 0.0, std_score = 0.0;
};

/// Groups reports by fold id and aggregates.  Throws DataError when the
/// input is empty.  Folds appear sorted by id.
AggregateSummary aggregate(const std::vector<ScoreReport>& reports);

}  // namespace planereg
