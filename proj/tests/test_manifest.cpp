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

#include "planereg/manifest.hpp"

#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "planereg/errors.hpp"
#include "planereg/rotation.hpp"

namespace planereg {
namespace {

namespace fs = std::filesystem;

// Bitwise manifest equality via the serialized form (doubles round-trip
// losslessly, so equal dumps mean equal manifests).
std::string dump_via_file(const DatasetManifest& m, const std::string& path) {
  save_manifest(path, m);
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class ManifestFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("planereg_manifest_" + std::to_string(getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST(ManifestBuild, UniformFiveGivesOnePerRegionPerFold) {
  const BuildResult r = build_manifest(5, 99);
  EXPECT_EQ(r.manifest.num_folds, 5);
  ASSERT_EQ(r.manifest.entries.size(), 20u);
  ASSERT_EQ(r.specs.size(), 20u);
  std::map<std::pair<int, int>, int> cell_count;
  for (const ManifestEntry& e : r.manifest.entries) {
    cell_count[{static_cast<int>(e.region), e.fold}]++;
  }
  ASSERT_EQ(cell_count.size(), 20u);
  for (const auto& [cell, count] : cell_count) EXPECT_EQ(count, 1);
}

TEST(ManifestBuild, RejectsTooFewVolumes) {
  EXPECT_THROW(build_manifest(4, 1), DataError);
  ManifestOptions options;
  options.region_counts = {5, 5, 4, 5};
  EXPECT_THROW(build_manifest(options), DataError);
}

TEST(ManifestBuild, DefaultCountsAreImbalanced) {
  const BuildResult r = build_manifest(ManifestOptions{});
  std::array<int, kNumRegions> counts{};
  for (const ManifestEntry& e : r.manifest.entries) {
    counts[static_cast<int>(e.region)]++;
  }
  EXPECT_EQ(counts, (std::array<int, kNumRegions>{160, 220, 274, 250}));
}

TEST(ManifestBuild, PatientsNeverSpanFolds) {
  const BuildResult r = build_manifest(ManifestOptions{});
  std::map<int, std::set<int>> folds_of_patient;
  std::map<int, int> volumes_of_patient;
  for (const ManifestEntry& e : r.manifest.entries) {
    folds_of_patient[e.patient_id].insert(e.fold);
    volumes_of_patient[e.patient_id]++;
  }
  int pairs = 0;
  for (const auto& [patient, folds] : folds_of_patient) {
    EXPECT_EQ(folds.size(), 1u) << "patient " << patient;
    ASSERT_LE(volumes_of_patient[patient], 2);
    if (volumes_of_patient[patient] == 2) ++pairs;
  }
  EXPECT_EQ(pairs, 160 / 10 + 220 / 10 + 274 / 10 + 250 / 10);
}

TEST(ManifestBuild, FoldRegionDistributionWithinOneOfProportional) {
  const BuildResult r = build_manifest(ManifestOptions{});
  std::map<std::pair<int, int>, int> cell_count;
  for (const ManifestEntry& e : r.manifest.entries) {
    cell_count[{static_cast<int>(e.region), e.fold}]++;
  }
  const std::array<int, kNumRegions> totals{160, 220, 274, 250};
  for (int region = 0; region < kNumRegions; ++region) {
    for (int fold = 0; fold < 5; ++fold) {
      const int count = cell_count[{region, fold}];
      EXPECT_GE(count, totals[region] / 5) << "region " << region << " fold " << fold;
      EXPECT_LE(count, (totals[region] + 4) / 5)
          << "region " << region << " fold " << fold;
    }
  }
}

TEST(ManifestBuild, SpecsAlignWithEntries) {
  ManifestOptions options;
  options.region_counts = {12, 12, 12, 12};
  options.seed = 7;
  const BuildResult r = build_manifest(options);
  ASSERT_EQ(r.specs.size(), r.manifest.entries.size());
  std::set<std::string> names;
  for (std::size_t i = 0; i < r.specs.size(); ++i) {
    const ManifestEntry& e = r.manifest.entries[i];
    EXPECT_EQ(r.specs[i].region, e.region);
    EXPECT_EQ(r.specs[i].oblique_coronal, e.region == BodyRegion::kCalcaneus);
    names.insert(e.volume_base);
    // the stored truth is byte-for-byte what the renderer would report
    const PlaneTriplet truth = truth_planes(r.specs[i]);
    for (int j = 0; j < kNumPlanes; ++j) {
      EXPECT_EQ((truth.plane(j).center() - e.truth.plane(j).center()).norm(), 0.0);
      EXPECT_EQ((truth.plane(j).e_u() - e.truth.plane(j).e_u()).norm(), 0.0);
      EXPECT_EQ((truth.plane(j).e_v() - e.truth.plane(j).e_v()).norm(), 0.0);
    }
  }
  EXPECT_EQ(names.size(), r.specs.size()) << "volume names must be unique";
}

TEST(ManifestBuild, PairedVolumesShareAnatomyButNotPose) {
  ManifestOptions options;
  options.region_counts = {20, 20, 20, 20};
  const BuildResult r = build_manifest(options);
  std::map<int, std::vector<std::size_t>> by_patient;
  for (std::size_t i = 0; i < r.manifest.entries.size(); ++i) {
    by_patient[r.manifest.entries[i].patient_id].push_back(i);
  }
  int pairs_checked = 0;
  for (const auto& [patient, indices] : by_patient) {
    if (indices.size() != 2) continue;
    const PhantomSpec& a = r.specs[indices[0]];
    const PhantomSpec& b = r.specs[indices[1]];
    EXPECT_EQ(a.shape_seed, b.shape_seed);
    EXPECT_GT(geodesic_distance(a.pose.rotation(), b.pose.rotation()), 1e-6);
    ++pairs_checked;
  }
  EXPECT_EQ(pairs_checked, 8);  // 20/10 pairs per region
}

TEST(ManifestBuild, NormalPosesStayInEulerBox) {
  ManifestOptions options;
  options.region_counts = {30, 5, 5, 5};
  options.hard_fraction = 0.0;
  const BuildResult r = build_manifest(options);
  for (const PhantomSpec& spec : r.specs) {
    const auto [a, b, c] = euler_angles_zyx(spec.pose.rotation());
    EXPECT_LE(std::abs(a), deg_to_rad(45.0) + 1e-9);
    EXPECT_LE(std::abs(b), deg_to_rad(45.0) + 1e-9);
    EXPECT_LE(std::abs(c), deg_to_rad(45.0) + 1e-9);
    for (double t : {spec.pose.translation().x, spec.pose.translation().y,
                     spec.pose.translation().z}) {
      EXPECT_LE(std::abs(t), 15.0);
    }
  }
}

TEST(ManifestBuild, HardPosesExceedNinetyDegrees) {
  ManifestOptions options;
  options.region_counts = {40, 5, 5, 5};
  options.hard_fraction = 1.0;
  const BuildResult r = build_manifest(options);
  for (std::size_t i = 0; i < r.specs.size(); ++i) {
    if (r.manifest.entries[i].region != BodyRegion::kCalcaneus) continue;
    const double angle =
        geodesic_distance(r.specs[i].pose.rotation(), Mat3::identity());
    EXPECT_GT(angle, deg_to_rad(90.0));
    EXPECT_LE(angle, deg_to_rad(150.0) + 1e-9);
  }
}

TEST(ManifestBuild, DeterministicAndSeedSensitive) {
  ManifestOptions options;
  options.region_counts = {10, 10, 10, 10};
  options.seed = 5;
  const BuildResult a = build_manifest(options);
  const BuildResult b = build_manifest(options);
  options.seed = 6;
  const BuildResult c = build_manifest(options);
  ASSERT_EQ(a.manifest.entries.size(), b.manifest.entries.size());
  for (std::size_t i = 0; i < a.specs.size(); ++i) {
    EXPECT_EQ(
        geodesic_distance(a.specs[i].pose.rotation(), b.specs[i].pose.rotation()),
        0.0);
  }
  double max_diff = 0.0;
  for (std::size_t i = 0; i < a.specs.size(); ++i) {
    max_diff = std::max(max_diff, geodesic_distance(a.specs[i].pose.rotation(),
                                                    c.specs[i].pose.rotation()));
  }
  EXPECT_GT(max_diff, 0.1);
}

TEST_F(ManifestFiles, JsonRoundTripIsLossless) {
  ManifestOptions options;
  options.region_counts = {8, 8, 8, 8};
  options.hard_fraction = 0.25;
  const BuildResult r = build_manifest(options);

  const std::string first = dump_via_file(r.manifest, path("m.json"));
  const DatasetManifest loaded = load_manifest(path("m.json"));
  const std::string second = dump_via_file(loaded, path("m2.json"));
  EXPECT_EQ(first, second);

  ASSERT_EQ(loaded.entries.size(), r.manifest.entries.size());
  for (std::size_t i = 0; i < loaded.entries.size(); ++i) {
    const ManifestEntry& a = r.manifest.entries[i];
    const ManifestEntry& b = loaded.entries[i];
    EXPECT_EQ(a.volume_base, b.volume_base);
    EXPECT_EQ(a.region, b.region);
    EXPECT_EQ(a.patient_id, b.patient_id);
    EXPECT_EQ(a.fold, b.fold);
    EXPECT_EQ(a.train_eligible, b.train_eligible);
    EXPECT_EQ(b.truth.region, b.region);
    for (int j = 0; j < kNumPlanes; ++j) {
      EXPECT_EQ((a.truth.plane(j).center() - b.truth.plane(j).center()).norm(), 0.0);
      EXPECT_EQ((a.truth.plane(j).e_u() - b.truth.plane(j).e_u()).norm(), 0.0);
      EXPECT_EQ((a.truth.plane(j).e_v() - b.truth.plane(j).e_v()).norm(), 0.0);
    }
  }
}

TEST_F(ManifestFiles, LoadRejectsCorruptInput) {
  EXPECT_THROW(load_manifest(path("missing.json")), DataError);

  std::ofstream(path("junk.json")) << "{not json";
  EXPECT_THROW(load_manifest(path("junk.json")), DataError);

  const BuildResult r = build_manifest(5, 3);
  save_manifest(path("good.json"), r.manifest);
  std::ifstream in(path("good.json"));
  std::string text{std::istreambuf_iterator<char>(in),
                   std::istreambuf_iterator<char>()};
  in.close();

  {
    std::string bad = text;
    bad.replace(bad.find("\"ankle\""), 7, "\"elbow\"");
    std::ofstream(path("bad_region.json")) << bad;
    EXPECT_THROW(load_manifest(path("bad_region.json")), DataError);
  }
  {
    // breaking e_u's unit length must be caught by plane validation
    std::string bad = text;
    const std::size_t at = bad.find("\"e_u\": [");
    ASSERT_NE(at, std::string::npos);
    bad.replace(at + 8, bad.find(']', at) - at - 8, "0.5, 0.0, 0.0");
    std::ofstream(path("bad_frame.json")) << bad;
    EXPECT_THROW(load_manifest(path("bad_frame.json")), DataError);
  }
  {
    std::string bad = text;
    bad.replace(bad.find("planereg-manifest"), 17, "something-else!!!");
    std::ofstream(path("bad_format.json")) << bad;
    EXPECT_THROW(load_manifest(path("bad_format.json")), DataError);
  }
}

TEST_F(ManifestFiles, ReduceFractionOneIsIdentity) {
  const BuildResult r = build_manifest(10, 4);
  const DatasetManifest reduced = reduce_training_set(r.manifest, 1.0);
  EXPECT_EQ(dump_via_file(r.manifest, path("a.json")),
            dump_via_file(reduced, path("b.json")));
}

TEST(ManifestReduce, KeepsFractionPerCellAtPatientGranularity) {
  ManifestOptions options;
  options.region_counts = {60, 60, 60, 60};
  const BuildResult r = build_manifest(options);
  for (double fraction : {0.8, 0.6, 0.4}) {
    const DatasetManifest reduced = reduce_training_set(r.manifest, fraction);
    ASSERT_EQ(reduced.entries.size(), r.manifest.entries.size());
    std::map<std::pair<int, int>, std::pair<int, int>> kept_total;
    for (std::size_t i = 0; i < reduced.entries.size(); ++i) {
      const ManifestEntry& e = reduced.entries[i];
      // nothing but the eligibility flag may change
      EXPECT_EQ(e.volume_base, r.manifest.entries[i].volume_base);
      EXPECT_EQ(e.fold, r.manifest.entries[i].fold);
      auto& [kept, total] = kept_total[{static_cast<int>(e.region), e.fold}];
      kept += e.train_eligible ? 1 : 0;
      total += 1;
    }
    for (const auto& [cell, counts] : kept_total) {
      const auto [kept, total] = counts;
      const double target = fraction * total;
      // a patient owns at most 2 volumes, so the overshoot is at most 2
      EXPECT_GE(kept, static_cast<int>(std::lround(target)));
      EXPECT_LE(kept, static_cast<int>(std::lround(target)) + 2);
    }
  }
}

TEST(ManifestReduce, SubsetsAreNestedAcrossFractions) {
  const BuildResult r = build_manifest(50, 12);
  const DatasetManifest m40 = reduce_training_set(r.manifest, 0.4);
  const DatasetManifest m60 = reduce_training_set(r.manifest, 0.6);
  const DatasetManifest m80 = reduce_training_set(r.manifest, 0.8);
  for (std::size_t i = 0; i < r.manifest.entries.size(); ++i) {
    if (m40.entries[i].train_eligible) EXPECT_TRUE(m60.entries[i].train_eligible);
    if (m60.entries[i].train_eligible) EXPECT_TRUE(m80.entries[i].train_eligible);
  }
}

TEST(ManifestReduce, PatientsAreKeptOrDroppedAtomically) {
  ManifestOptions options;
  options.region_counts = {40, 40, 40, 40};
  const BuildResult r = build_manifest(options);
  const DatasetManifest reduced = reduce_training_set(r.manifest, 0.6);
  std::map<int, std::set<bool>> flags_of_patient;
  for (const ManifestEntry& e : reduced.entries) {
    flags_of_patient[e.patient_id].insert(e.train_eligible);
  }
  for (const auto& [patient, flags] : flags_of_patient) {
    EXPECT_EQ(flags.size(), 1u) << "patient " << patient;
  }
}

TEST(ManifestReduce, RejectsEmptyResultAndBadFractions) {
  const BuildResult tiny = build_manifest(5, 8);  // every cell holds 1 volume
  EXPECT_THROW(reduce_training_set(tiny.manifest, 0.4), DataError);
  EXPECT_THROW(reduce_training_set(tiny.manifest, 0.0), DataError);
  EXPECT_THROW(reduce_training_set(tiny.manifest, -0.5), DataError);
  EXPECT_THROW(reduce_training_set(tiny.manifest, 1.5), DataError);
}

TEST(ManifestReduce, NonCanonicalFractionWarnsButWorks) {
  const BuildResult r = build_manifest(20, 2);
  ::testing::internal::CaptureStderr();
  const DatasetManifest reduced = reduce_training_set(r.manifest, 0.5);
  const std::string err = ::testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("fraction"), std::string::npos);
  int kept = 0;
  for (const ManifestEntry& e : reduced.entries) kept += e.train_eligible ? 1 : 0;
  EXPECT_GT(kept, 0);
  EXPECT_LT(kept, static_cast<int>(reduced.entries.size()));
}

}  // namespace
}  // namespace planereg
