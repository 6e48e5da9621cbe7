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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "planereg/errors.hpp"
#include "planereg/rng.hpp"

namespace planereg {
namespace {

using json = nlohmann::ordered_json;

constexpr std::uint64_t kFoldSalt = 0xF01Dull;
constexpr std::uint64_t kPoseSalt = 0x905Eull;
constexpr std::uint64_t kShapeSalt = 0x5A4Eull;
constexpr std::uint64_t kReduceSalt = 0x4EDCull;

struct PatientUnit {
  int patient_id;
  int n_volumes;  // 1 or 2
};

// Pairs first, then singles, each to the currently lightest fold: with unit
// sizes of at most 2 and singles in the majority this lands every fold within
// +-1 volume of proportional.
std::vector<int> assign_folds(std::vector<PatientUnit>& units, int num_folds,
                              Rng& rng) {
  std::stable_sort(units.begin(), units.end(),
                   [](const PatientUnit& a, const PatientUnit& b) {
                     return a.n_volumes > b.n_volumes;
                   });
  std::vector<int> load(num_folds, 0);
  std::vector<int> fold_of(units.size());
  for (std::size_t u = 0; u < units.size(); ++u) {
    const int lightest = *std::min_element(load.begin(), load.end());
    std::vector<int> candidates;
    for (int f = 0; f < num_folds; ++f) {
      if (load[f] == lightest) candidates.push_back(f);
    }
    const int pick = candidates[rng.uniform_int(candidates.size())];
    fold_of[u] = pick;
    load[pick] += units[u].n_volumes;
  }
  return fold_of;
}

RigidTransform sample_pose(const ManifestOptions& options, Rng& rng) {
  // Every value is drawn regardless of the hard flag so streams stay aligned.
  const bool hard = rng.bernoulli(options.hard_fraction);
  const double rot = deg_to_rad(options.rot_deg);
  const double a = rng.uniform(-rot, rot);
  const double b = rng.uniform(-rot, rot);
  const double c = rng.uniform(-rot, rot);
  const Vec3 shift{rng.uniform(-options.trans_mm, options.trans_mm),
                   rng.uniform(-options.trans_mm, options.trans_mm),
                   rng.uniform(-options.trans_mm, options.trans_mm)};
  Vec3 axis{rng.normal(), rng.normal(), rng.normal()};
  axis = axis * (1.0 / axis.norm());
  const double hard_angle = deg_to_rad(rng.uniform(90.0 + 1e-9, 150.0));
  const Mat3 r =
      hard ? Mat3::axis_angle(axis, hard_angle) : rotation_zyx(a, b, c);
  return RigidTransform(r, shift);
}

json plane_to_json(const Plane& p) {
  return json{{"center_mm", {p.center().x, p.center().y, p.center().z}},
              {"e_u", {p.e_u().x, p.e_u().y, p.e_u().z}},
              {"e_v", {p.e_v().x, p.e_v().y, p.e_v().z}}};
}

Plane plane_from_json(const json& j) {
  const auto v3 = [&j](const char* key) {
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 3) {
      throw DataError(std::string("manifest: ") + key + " must be 3 reals");
    }
    return Vec3{a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
  };
  return Plane(v3("center_mm"), v3("e_u"), v3("e_v"));
}

}  // namespace

BuildResult build_manifest(const ManifestOptions& options) {
  for (int count : options.region_counts) {
    if (count < 5) throw DataError("build_manifest: need at least 5 volumes per region");
  }
  BuildResult result;
  result.manifest.num_folds = 5;
  int global_index = 0;
  for (int r = 0; r < kNumRegions; ++r) {
    const auto region = static_cast<BodyRegion>(r);
    const int n_volumes = options.region_counts[r];
    const int n_pairs = n_volumes / 10;  // ~10% of patients own two volumes
    const int n_singles = n_volumes - 2 * n_pairs;

    std::vector<PatientUnit> units;
    for (int i = 0; i < n_pairs; ++i) units.push_back({r * 100000 + i, 2});
    for (int i = 0; i < n_singles; ++i) units.push_back({r * 100000 + n_pairs + i, 1});
    Rng fold_rng(derive_seed(options.seed, kFoldSalt, static_cast<std::uint64_t>(r)));
    const std::vector<int> fold_of = assign_folds(units, 5, fold_rng);

    for (std::size_t u = 0; u < units.size(); ++u) {
      const std::uint64_t shape_seed = derive_seed(
          options.seed, kShapeSalt, static_cast<std::uint64_t>(units[u].patient_id));
      for (int copy = 0; copy < units[u].n_volumes; ++copy) {
        Rng pose_rng(derive_seed(options.seed, kPoseSalt,
                                 static_cast<std::uint64_t>(global_index)));
        PhantomSpec spec;
        spec.region = region;
        spec.dims = options.dims;
        spec.spacing = options.spacing;
        spec.pose = sample_pose(options, pose_rng);
        spec.shape_seed = shape_seed;
        spec.oblique_coronal = (region == BodyRegion::kCalcaneus);

        ManifestEntry entry;
        char name[32];
        std::snprintf(name, sizeof(name), "vol_%05d", global_index);
        entry.volume_base = name;
        entry.region = region;
        entry.patient_id = units[u].patient_id;
        entry.fold = fold_of[u];
        entry.truth = truth_planes(spec);

        result.manifest.entries.push_back(std::move(entry));
        result.specs.push_back(spec);
        ++global_index;
      }
    }
  }
  return result;
}

BuildResult build_manifest(int n_per_region, std::uint64_t seed) {
  ManifestOptions options;
  options.region_counts.fill(n_per_region);
  options.seed = seed;
  return build_manifest(options);
}

DatasetManifest reduce_training_set(const DatasetManifest& m, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw DataError("reduce_training_set: fraction must be in (0, 1]");
  }
  const double canonical[] = {1.0, 0.8, 0.6, 0.4};
  if (std::none_of(std::begin(canonical), std::end(canonical),
                   [&](double c) { return std::abs(fraction - c) < 1e-12; })) {
    std::fprintf(stderr,
                 "reduce_training_set: fraction %.3f is outside the studied "
                 "set {1.0, 0.8, 0.6, 0.4}\n",
                 fraction);
  }

  DatasetManifest out = m;
  for (ManifestEntry& e : out.entries) e.train_eligible = true;

  // (region, fold) -> patient -> entry indices
  std::map<std::pair<int, int>, std::map<int, std::vector<std::size_t>>> cells;
  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    const ManifestEntry& e = out.entries[i];
    cells[{static_cast<int>(e.region), e.fold}][e.patient_id].push_back(i);
  }

  for (auto& [cell, patients] : cells) {
    int cell_volumes = 0;
    std::vector<int> order;
    for (const auto& [patient, indices] : patients) {
      order.push_back(patient);
      cell_volumes += static_cast<int>(indices.size());
    }
    const int target = static_cast<int>(std::lround(fraction * cell_volumes));

    Rng rng(derive_seed(kReduceSalt, static_cast<std::uint64_t>(cell.first),
                        static_cast<std::uint64_t>(cell.second)));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.uniform_int(i)]);
    }

    int kept = 0;
    std::size_t next = 0;
    while (kept < target && next < order.size()) {
      kept += static_cast<int>(patients[order[next]].size());
      ++next;
    }
    if (kept == 0) {
      throw DataError("reduce_training_set: a region/fold cell would keep no volumes");
    }
    for (; next < order.size(); ++next) {
      for (std::size_t i : patients[order[next]]) {
        out.entries[i].train_eligible = false;
      }
    }
  }
  return out;
}

void save_manifest(const std::string& path, const DatasetManifest& m) {
  json root;
  root["format"] = "planereg-manifest";
  root["version"] = 1;
  root["num_folds"] = m.num_folds;
  root["entries"] = json::array();
  for (const ManifestEntry& e : m.entries) {
    json planes;
    for (int j = 0; j < kNumPlanes; ++j) {
      planes[kPlaneNames[j]] = plane_to_json(e.truth.plane(j));
    }
    root["entries"].push_back(json{{"volume", e.volume_base},
                                   {"region", to_string(e.region)},
                                   {"patient_id", e.patient_id},
                                   {"fold", e.fold},
                                   {"train_eligible", e.train_eligible},
                                   {"planes", planes}});
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest: " + path);
  out << root.dump(2) << '\n';
  if (!out) throw DataError("failed writing manifest: " + path);
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path);
  try {
    const json root = json::parse(in);
    if (root.at("format").get<std::string>() != "planereg-manifest") {
      throw DataError("not a planereg manifest: " + path);
    }
    if (root.at("version").get<int>() != 1) {
      throw DataError("unsupported manifest version in " + path);
    }
    DatasetManifest m;
    m.num_folds = root.at("num_folds").get<int>();
    if (m.num_folds < 2) throw DataError("manifest: num_folds must be >= 2");
    for (const json& j : root.at("entries")) {
      ManifestEntry e;
      e.volume_base = j.at("volume").get<std::string>();
      e.region = region_from_string(j.at("region").get<std::string>());
      e.patient_id = j.at("patient_id").get<int>();
      e.fold = j.at("fold").get<int>();
      if (e.fold < 0 || e.fold >= m.num_folds) {
        throw DataError("manifest: fold out of range for " + e.volume_base);
      }
      e.train_eligible = j.at("train_eligible").get<bool>();
      e.truth.region = e.region;
      for (int p = 0; p < kNumPlanes; ++p) {
        e.truth.plane(p) = plane_from_json(j.at("planes").at(kPlaneNames[p]));
      }
      m.entries.push_back(std::move(e));
    }
    return m;
  } catch (const json::exception& ex) {
    throw DataError(std::string("malformed manifest ") + path + ": " + ex.what());
  } catch (const std::invalid_argument& ex) {
    throw DataError(std::string("invalid manifest content in ") + path + ": " +
                    ex.what());
  }
}

}  // namespace planereg
