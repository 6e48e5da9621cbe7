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
#include <functional>
#include <string>
#include <vector>

#include "planereg/augment.hpp"
#include "planereg/manifest.hpp"
#include "planereg/model.hpp"

namespace planereg {

/// Optimizer settings.  Defaults are the published best configuration from
/// the hyperparameter search; only the epoch count is desk-sized down.
struct Hyperparams {
  double lr = 0.00164;
  double lr_decay = 0.27291;
  int decay_step = 75;  // epochs per decay
  double momentum = 0.957437;
  int batch_size = 9;
  int epochs = 50;  // the full protocol runs 400

  void validate() const;  // throws DataError
};

/// Step schedule, epochs 1-indexed: lr * decay^floor((epoch-1)/step), so the
/// first drop happens entering epoch step+1.
double learning_rate_at(const Hyperparams& hp, int epoch);

/// Mean squared error over every output node and batch row.  Throws
/// DataError on a size mismatch.
double mse_loss(const std::vector<float>& pred, const std::vector<float>& target);

/// d(mse)/d(pred): 2 (pred - target) / n.
std::vector<float> mse_loss_grad(const std::vector<float>& pred,
                                 const std::vector<float>& target);

/// Classic (Polyak) momentum: v <- mu v - lr g; w <- w + v.  With mu = 0
/// this is exactly vanilla gradient descent.
template <typename Scalar>
class SgdMomentum {
 public:
  explicit SgdMomentum(const ModelState<Scalar>& state);

  void step(ModelState<Scalar>& state,
            const std::vector<NamedTensor<Scalar>>& grads, double lr, double mu);

 private:
  std::vector<std::vector<Scalar>> velocity_;
};

/// Train / validation / test entry indices for one cross-validation rotation:
/// test = test_fold, validation = (test_fold + 1) mod num_folds, training =
/// the rest.  Only train respects the train_eligible flag (reduced-data runs
/// never touch evaluation folds).
struct FoldSplit {
  std::vector<int> train, val, test;
};

FoldSplit split_folds(const DatasetManifest& m, int test_fold);

/// One epoch's worth of training indices (length = training-set size unless
/// overridden).  Sampling is class-balanced: draws happen in blocks holding
/// one volume of every region in shuffled order, volumes uniform within
/// their region.  The per-volume probability is therefore proportional to
/// 1/(region count), and every region occurs in any window of >= 2*kNumRegions
/// draws.  Throws DataError when some region has no training volumes.
std::vector<int> oversample_schedule(const DatasetManifest& m, int test_fold,
                                     std::uint64_t seed, int length = -1);

/// A volume ready for the network, with its regression target.  When spatial
/// augmentation is active the annotation planes are mapped by the same
/// motion before encoding, so the target always matches the voxels.
struct TrainingSample {
  Volume volume;  // intensity-normalized, model input dims
  BodyRegion region = BodyRegion::kCalcaneus;
  RegressionTarget target;
};

/// Builds the sample fed to the network for (volume, truth).  `augment`
/// draws spatial + intensity parameters from `seed`; otherwise the volume is
/// only intensity-normalized (f = 1) and must already have model dims.
TrainingSample make_training_sample(const Volume& stored, const PlaneTriplet& truth,
                                    BodyRegion region, const ModelConfig& model,
                                    const AugmentConfig& cfg, bool augment,
                                    std::uint64_t seed);

struct TrainRun {
  const DatasetManifest* manifest = nullptr;
  int test_fold = 0;
  ModelConfig model;
  Hyperparams hp;
  AugmentConfig augment;
  bool augment_enabled = true;
  std::uint64_t seed = 1;
  int workers = 1;
  /// Loads the stored volume for an entry.  When empty, volumes are read
  /// from `data_dir`/<volume_base> as written by the dataset generator.
  std::function<Volume(const ManifestEntry&)> load_volume;
  std::string data_dir;
  /// Directory for best.ckpt / final.ckpt (and diagnostic.ckpt on NaN
  /// abort).  Empty disables writing.
  std::string checkpoint_dir;
  /// Progress lines on stderr (epoch, loss, val score).
  bool verbose = false;
};

struct TrainResult {
  ModelState<float> state;       // after the last epoch
  ModelState<float> best_state;  // lowest validation score; = state if no val
  std::vector<double> train_loss;  // per-epoch mean over samples
  std::vector<double> val_score;   // per-epoch median Eq. 6 score; empty if no val
  int best_epoch = -1;             // 1-indexed; -1 if validation never ran
};

/// Mini-batch SGD over the training folds with per-epoch class-balanced
/// oversampling and per-sample augmentation.  Deterministic in run.seed and
/// independent of run.workers.  Throws NumericalError on a non-finite loss
/// (after writing diagnostic.ckpt when a checkpoint dir is set).
TrainResult train(const TrainRun& run);

}  // namespace planereg
