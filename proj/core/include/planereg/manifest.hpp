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

#ifndef PLANEREG_MANIFEST_HPP_
#define PLANEREG_MANIFEST_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "planereg/geometry.hpp"
#include "planereg/phantom.hpp"

namespace planereg {

/// One volume of the dataset.  `volume_base` is a path base relative to the
/// manifest's directory; write_volume/read_volume append .raw/.txt.
struct ManifestEntry {
  std::string volume_base;
  BodyRegion region = BodyRegion::kCalcaneus;
  int patient_id = 0;
  int fold = 0;
  /// Cleared by reduce_training_set for dropped patients.  Entries always stay
  /// in the manifest so test folds are untouched by reduction; training simply
  /// skips ineligible entries.
  bool train_eligible = true;
  PlaneTriplet truth;
};

struct DatasetManifest {
  int num_folds = 5;
  std::vector<ManifestEntry> entries;
};

struct ManifestOptions {
  /// Volumes per region, indexed by BodyRegion.  The default mirrors the
  /// intentionally imbalanced class mix so oversampling logic gets exercised.
  std::array<int, kNumRegions> region_counts{160, 220, 274, 250};
  std::uint64_t seed = 1;
  std::array<int, 3> dims{32, 32, 32};
  Vec3 spacing{5.0, 5.0, 5.0};
  double rot_deg = 45.0;    // per Euler angle, both signs
  double trans_mm = 15.0;   // per axis, both signs
  /// Fraction of poses drawn as "hard": a single rotation with angle in
  /// (90, 150] degrees about a random axis instead of the +-rot_deg Euler box.
  double hard_fraction = 0.0;
};

/// Manifest plus the aligned phantom specs (specs[i] renders entries[i]).
/// Splitting the two keeps manifest construction cheap: no voxels are
/// generated here.
struct BuildResult {
  DatasetManifest manifest;
  std::vector<PhantomSpec> specs;
};

/// Builds a patient-grouped 5-fold dataset. About one patient in ten owns two
/// volumes (same anatomy, different pose); fold assignment is greedy per
/// patient so every (region, fold) cell stays within +-1 of proportional.
/// Throws DataError if any region count is < 5.
BuildResult build_manifest(const ManifestOptions& options);

/// Uniform per-region counts; otherwise identical to the options overload.
BuildResult build_manifest(int n_per_region, std::uint64_t seed);

/// Marks a patient-wise subset of each (region, fold) cell as train-eligible
/// so that any choice of training folds retains ~`fraction` of its volumes.
/// Recomputes eligibility from scratch (the input's flags are ignored);
/// subsets are nested across fractions.  Intended fractions are 1.0, 0.8,
/// 0.6, 0.4 -- others work but warn on stderr.  Throws DataError if the
/// fraction is outside (0, 1] or some cell would keep no volumes.
DatasetManifest reduce_training_set(const DatasetManifest& m, double fraction);

void save_manifest(const std::string& path, const DatasetManifest& m);
DatasetManifest load_manifest(const std::string& path);  // throws DataError

}  // namespace planereg

#endif  // PLANEREG_MANIFEST_HPP_
