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
#include <string>

#include "planereg/augment.hpp"
#include "planereg/manifest.hpp"
#include "planereg/model.hpp"
#include "planereg/training.hpp"

namespace planereg {

/// Everything a run needs, loadable from one JSON file.  Schema (all keys
/// optional; omitted ones keep the defaults below; unknown keys rejected):
///
///   {
///     "model": { "variant": "baseline|with_class|multi_head",
///                "representation": "euler|quat|6dxy|6dxz",
///                "input_dims": [32,32,32],
///                "channels": [1,8,16,32,64],
///                "fc_widths": [256,50],
///                "n_regions": 4 },
///     "train": { "lr": 0.00164, "lr_decay": 0.27291, "decay_step": 75,
///                "momentum": 0.957437, "batch_size": 9, "epochs": 50 },
///     "aug":   { "enabled": true, "rot_deg": 45.0, "scale_lo": 0.95,
///                "scale_hi": 1.05, "trans_mm": 12.0, "p": 0.5,
///                "mirror_p": 0.5 },
///     "intensity": { "min_hu": -490.0, "max_hu": 1040.0,
///                    "f_lo": 0.95, "f_hi": 1.05, "y": 0.02 },
///     "data":  { "manifest": "manifest.json", "dir": "volumes/" },
///     "dataset": { "region_counts": [160,220,274,250], "dims": [32,32,32],
///                  "spacing": [5.0,5.0,5.0], "rot_deg": 45.0,
///                  "trans_mm": 15.0, "hard_fraction": 0.0 },
///     "run":   { "seed": 1, "fold": 0, "workers": 1, "out": "out/" }
///   }
///
/// "dataset" describes what gen-data should synthesize; its seed is the run
/// seed, so ManifestOptions::seed in this struct is ignored.
struct AppConfig {
  ModelConfig model;
  Hyperparams train;
  AugmentConfig augment;
  bool augment_enabled = true;
  std::string manifest_path;
  std::string data_dir;
  ManifestOptions dataset;
  std::uint64_t seed = 1;
  int fold = 0;
  int workers = 1;
  std::string out_dir;

  void validate() const;  // throws DataError
};

/// Parses the schema above.  Throws DataError on malformed JSON, unknown
/// keys, or wrong value types.
AppConfig config_from_json_text(const std::string& text);
AppConfig load_config(const std::string& path);

/// Serializes back to the same schema (round-trips through the parser).
std::string config_to_json_text(const AppConfig& config);
void save_config(const std::string& path, const AppConfig& config);

}  // namespace planereg
