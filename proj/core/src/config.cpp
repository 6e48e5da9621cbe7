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

#include "planereg/config.hpp"

#include <array>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "planereg/errors.hpp"
#include "planereg/rotation.hpp"

namespace planereg {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { throw DataError("config: " + what); }

void check_keys(const json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) bad("unknown key \"" + key + "\" in " + section);
  }
}

template <typename T>
void get_to(const json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(out);
  } catch (const json::exception& e) {
    bad("bad value for " + section + "." + key + ": " + e.what());
  }
}

void parse_model(const json& j, ModelConfig& m) {
  check_keys(j, "model",
             {"variant", "representation", "input_dims", "channels", "fc_widths",
              "n_regions"});
  if (j.contains("variant")) m.variant = variant_from_string(j.at("variant").get<std::string>());
  if (j.contains("representation"))
    m.representation = representation_from_string(j.at("representation").get<std::string>());
  get_to(j, "input_dims", m.input_dims, "model");
  get_to(j, "channels", m.channels, "model");
  get_to(j, "fc_widths", m.fc_widths, "model");
  get_to(j, "n_regions", m.n_regions, "model");
}

void parse_train(const json& j, Hyperparams& hp) {
  check_keys(j, "train", {"lr", "lr_decay", "decay_step", "momentum", "batch_size", "epochs"});
  get_to(j, "lr", hp.lr, "train");
  get_to(j, "lr_decay", hp.lr_decay, "train");
  get_to(j, "decay_step", hp.decay_step, "train");
  get_to(j, "momentum", hp.momentum, "train");
  get_to(j, "batch_size", hp.batch_size, "train");
  get_to(j, "epochs", hp.epochs, "train");
}

void parse_aug(const json& j, AugmentConfig& a, bool& enabled) {
  check_keys(j, "aug",
             {"enabled", "rot_deg", "scale_lo", "scale_hi", "trans_mm", "p", "mirror_p"});
  get_to(j, "enabled", enabled, "aug");
  get_to(j, "rot_deg", a.rot_deg, "aug");
  get_to(j, "scale_lo", a.scale_lo, "aug");
  get_to(j, "scale_hi", a.scale_hi, "aug");
  get_to(j, "trans_mm", a.trans_mm, "aug");
  get_to(j, "p", a.p, "aug");
  get_to(j, "mirror_p", a.mirror_p, "aug");
}

void parse_intensity(const json& j, AugmentConfig& a) {
  check_keys(j, "intensity", {"min_hu", "max_hu", "f_lo", "f_hi", "y"});
  get_to(j, "min_hu", a.min_hu, "intensity");
  get_to(j, "max_hu", a.max_hu, "intensity");
  get_to(j, "f_lo", a.f_lo, "intensity");
  get_to(j, "f_hi", a.f_hi, "intensity");
  get_to(j, "y", a.y, "intensity");
}

void parse_dataset(const json& j, ManifestOptions& d) {
  check_keys(j, "dataset",
             {"region_counts", "dims", "spacing", "rot_deg", "trans_mm",
              "hard_fraction"});
  get_to(j, "region_counts", d.region_counts, "dataset");
  get_to(j, "dims", d.dims, "dataset");
  std::array<double, 3> sp{d.spacing.x, d.spacing.y, d.spacing.z};
  get_to(j, "spacing", sp, "dataset");
  d.spacing = {sp[0], sp[1], sp[2]};
  get_to(j, "rot_deg", d.rot_deg, "dataset");
  get_to(j, "trans_mm", d.trans_mm, "dataset");
  get_to(j, "hard_fraction", d.hard_fraction, "dataset");
}

}  // namespace

void AppConfig::validate() const {
  model.validate();
  train.validate();
  if (fold < 0) bad("run.fold must be >= 0");
  if (workers < 1) bad("run.workers must be >= 1");
  if (augment.scale_lo > augment.scale_hi) bad("aug.scale_lo > aug.scale_hi");
  if (augment.f_lo > augment.f_hi) bad("intensity.f_lo > intensity.f_hi");
  if (augment.y <= 0.0 || augment.y >= 1.0) bad("intensity.y must be in (0, 1)");
  if (augment.min_hu >= augment.max_hu) bad("intensity window is empty");
  for (int n : dataset.region_counts) {
    if (n < 1) bad("dataset.region_counts must be positive");
  }
  for (int d : dataset.dims) {
    if (d < 1) bad("dataset.dims must be positive");
  }
  if (dataset.spacing.x <= 0.0 || dataset.spacing.y <= 0.0 ||
      dataset.spacing.z <= 0.0) {
    bad("dataset.spacing must be positive");
  }
  if (dataset.rot_deg < 0.0 || dataset.trans_mm < 0.0) {
    bad("dataset pose ranges must be non-negative");
  }
  if (dataset.hard_fraction < 0.0 || dataset.hard_fraction > 1.0) {
    bad("dataset.hard_fraction must be in [0, 1]");
  }
}

AppConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    bad(std::string("parse error: ") + e.what());
  }
  if (!j.is_object()) bad("top level must be an object");
  check_keys(j, "top level",
             {"model", "train", "aug", "intensity", "data", "dataset", "run"});

  AppConfig c;
  if (j.contains("model")) parse_model(j.at("model"), c.model);
  if (j.contains("train")) parse_train(j.at("train"), c.train);
  if (j.contains("aug")) parse_aug(j.at("aug"), c.augment, c.augment_enabled);
  if (j.contains("intensity")) parse_intensity(j.at("intensity"), c.augment);
  if (j.contains("dataset")) parse_dataset(j.at("dataset"), c.dataset);
  if (j.contains("data")) {
    const json& d = j.at("data");
    check_keys(d, "data", {"manifest", "dir"});
    get_to(d, "manifest", c.manifest_path, "data");
    get_to(d, "dir", c.data_dir, "data");
  }
  if (j.contains("run")) {
    const json& r = j.at("run");
    check_keys(r, "run", {"seed", "fold", "workers", "out"});
    get_to(r, "seed", c.seed, "run");
    get_to(r, "fold", c.fold, "run");
    get_to(r, "workers", c.workers, "run");
    get_to(r, "out", c.out_dir, "run");
  }
  c.validate();
  return c;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

std::string config_to_json_text(const AppConfig& c) {
  json j;
  j["model"] = {{"variant", to_string(c.model.variant)},
                {"representation", to_string(c.model.representation)},
                {"input_dims", c.model.input_dims},
                {"channels", c.model.channels},
                {"fc_widths", c.model.fc_widths},
                {"n_regions", c.model.n_regions}};
  j["train"] = {{"lr", c.train.lr},
                {"lr_decay", c.train.lr_decay},
                {"decay_step", c.train.decay_step},
                {"momentum", c.train.momentum},
                {"batch_size", c.train.batch_size},
                {"epochs", c.train.epochs}};
  j["aug"] = {{"enabled", c.augment_enabled},
              {"rot_deg", c.augment.rot_deg},
              {"scale_lo", c.augment.scale_lo},
              {"scale_hi", c.augment.scale_hi},
              {"trans_mm", c.augment.trans_mm},
              {"p", c.augment.p},
              {"mirror_p", c.augment.mirror_p}};
  j["intensity"] = {{"min_hu", c.augment.min_hu},
                    {"max_hu", c.augment.max_hu},
                    {"f_lo", c.augment.f_lo},
                    {"f_hi", c.augment.f_hi},
                    {"y", c.augment.y}};
  j["data"] = {{"manifest", c.manifest_path}, {"dir", c.data_dir}};
  j["dataset"] = {{"region_counts", c.dataset.region_counts},
                  {"dims", c.dataset.dims},
                  {"spacing", std::array<double, 3>{c.dataset.spacing.x,
                                                    c.dataset.spacing.y,
                                                    c.dataset.spacing.z}},
                  {"rot_deg", c.dataset.rot_deg},
                  {"trans_mm", c.dataset.trans_mm},
                  {"hard_fraction", c.dataset.hard_fraction}};
  j["run"] = {{"seed", c.seed}, {"fold", c.fold}, {"workers", c.workers}, {"out", c.out_dir}};
  return j.dump(2) + "\n";
}

void save_config(const std::string& path, const AppConfig& c) {
  std::ofstream out(path);
  if (!out) throw DataError("config: cannot write " + path);
  out << config_to_json_text(c);
  if (!out) throw DataError("config: write failed for " + path);
}

}  // namespace planereg
