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

#include "planereg/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <thread>
#include <utility>

#include "planereg/checkpoint.hpp"
#include "planereg/errors.hpp"
#include "planereg/evaluation.hpp"
#include "planereg/rng.hpp"

namespace planereg {
namespace {

constexpr std::uint64_t kScheduleSalt = 0x5c4edull;
constexpr std::uint64_t kAugmentSalt = 0xa06cull;

// Validation volumes that decode to a degenerate rotation (possible for an
// untrained net) count as this score so they can never win best-checkpoint.
constexpr double kDegenerateScore = 1.0e9;

}  // namespace

void Hyperparams::validate() const {
  if (!std::isfinite(lr) || lr < 0.0) throw DataError("hyperparams: lr must be finite and >= 0");
  if (!std::isfinite(lr_decay) || lr_decay <= 0.0 || lr_decay > 1.0)
    throw DataError("hyperparams: lr_decay must be in (0, 1]");
  if (decay_step < 1) throw DataError("hyperparams: decay_step must be >= 1");
  if (!std::isfinite(momentum) || momentum < 0.0 || momentum >= 1.0)
    throw DataError("hyperparams: momentum must be in [0, 1)");
  if (batch_size < 1) throw DataError("hyperparams: batch_size must be >= 1");
  if (epochs < 0) throw DataError("hyperparams: epochs must be >= 0");
}

double learning_rate_at(const Hyperparams& hp, int epoch) {
  hp.validate();
  if (epoch < 1) throw DataError("learning_rate_at: epochs are 1-indexed");
  // Repeated multiplication instead of pow keeps the first drop exactly
  // lr * decay.
  double lr = hp.lr;
  for (int k = (epoch - 1) / hp.decay_step; k > 0; --k) lr *= hp.lr_decay;
  return lr;
}

double mse_loss(const std::vector<float>& pred, const std::vector<float>& target) {
  if (pred.size() != target.size())
    throw DataError("mse_loss: size mismatch (" + std::to_string(pred.size()) + " vs " +
                    std::to_string(target.size()) + ")");
  if (pred.empty()) throw DataError("mse_loss: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

std::vector<float> mse_loss_grad(const std::vector<float>& pred,
                                 const std::vector<float>& target) {
  if (pred.size() != target.size()) throw DataError("mse_loss_grad: size mismatch");
  if (pred.empty()) throw DataError("mse_loss_grad: empty input");
  std::vector<float> g(pred.size());
  const double scale = 2.0 / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i)
    g[i] = static_cast<float>(scale * (static_cast<double>(pred[i]) - static_cast<double>(target[i])));
  return g;
}

template <typename Scalar>
SgdMomentum<Scalar>::SgdMomentum(const ModelState<Scalar>& state) {
  velocity_.reserve(state.params.size());
  for (const auto& p : state.params) velocity_.emplace_back(p.data.size(), Scalar(0));
}

template <typename Scalar>
void SgdMomentum<Scalar>::step(ModelState<Scalar>& state,
                               const std::vector<NamedTensor<Scalar>>& grads, double lr,
                               double mu) {
  if (grads.size() != state.params.size() || velocity_.size() != state.params.size())
    throw DataError("sgd: gradient/parameter tensor count mismatch");
  for (std::size_t t = 0; t < state.params.size(); ++t) {
    auto& w = state.params[t].data;
    const auto& g = grads[t].data;
    auto& v = velocity_[t];
    if (g.size() != w.size() || grads[t].name != state.params[t].name)
      throw DataError("sgd: gradient tensor mismatch for " + state.params[t].name);
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = static_cast<Scalar>(mu * static_cast<double>(v[i]) -
                                 lr * static_cast<double>(g[i]));
      w[i] += v[i];
    }
  }
}

template class SgdMomentum<float>;
template class SgdMomentum<double>;

FoldSplit split_folds(const DatasetManifest& m, int test_fold) {
  if (m.num_folds < 2) throw DataError("split_folds: need at least 2 folds");
  if (test_fold < 0 || test_fold >= m.num_folds)
    throw DataError("split_folds: test fold " + std::to_string(test_fold) + " out of range");
  const int val_fold = (test_fold + 1) % m.num_folds;
  FoldSplit s;
  for (int i = 0; i < static_cast<int>(m.entries.size()); ++i) {
    const ManifestEntry& e = m.entries[i];
    if (e.fold < 0 || e.fold >= m.num_folds)
      throw DataError("split_folds: entry fold out of range");
    if (e.fold == test_fold) {
      s.test.push_back(i);
    } else if (e.fold == val_fold) {
      s.val.push_back(i);
    } else if (e.train_eligible) {
      s.train.push_back(i);
    }
  }
  return s;
}

std::vector<int> oversample_schedule(const DatasetManifest& m, int test_fold,
                                     std::uint64_t seed, int length) {
  const FoldSplit split = split_folds(m, test_fold);
  std::array<std::vector<int>, kNumRegions> by_region;
  for (int idx : split.train)
    by_region[static_cast<int>(m.entries[idx].region)].push_back(idx);
  for (int r = 0; r < kNumRegions; ++r) {
    if (by_region[r].empty())
      throw DataError("oversample_schedule: no training volumes for region " +
                      std::string(to_string(static_cast<BodyRegion>(r))));
  }
  const int len = length < 0 ? static_cast<int>(split.train.size()) : length;
  if (length == 0) return {};
  Rng rng(seed);
  std::array<int, kNumRegions> order{};
  for (int r = 0; r < kNumRegions; ++r) order[r] = r;
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(len));
  while (static_cast<int>(out.size()) < len) {
    for (int i = kNumRegions - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i + 1)));
      std::swap(order[i], order[j]);
    }
    for (int r : order) {
      if (static_cast<int>(out.size()) == len) break;
      const auto& pool = by_region[r];
      out.push_back(pool[rng.uniform_int(pool.size())]);
    }
  }
  return out;
}

TrainingSample make_training_sample(const Volume& stored, const PlaneTriplet& truth,
                                    BodyRegion region, const ModelConfig& model,
                                    const AugmentConfig& cfg, bool augment,
                                    std::uint64_t seed) {
  TrainingSample s;
  s.region = region;
  IntensityParams ip;
  PlaneTriplet mapped = truth;
  if (augment) {
    auto [spatial, intensity] = sample_params(cfg, seed);
    ip = intensity;
    const Mat4 t = compose_transform(spatial);
    s.volume = resample(stored, t, model.input_dims);
    mapped = transform_annotation(truth, t);
  } else {
    if (stored.meta.dims != model.input_dims)
      throw DataError("make_training_sample: volume dims do not match model input");
    s.volume = stored;
    ip.f = 1.0;
    ip.min_hu = cfg.min_hu;
    ip.max_hu = cfg.max_hu;
    ip.y = cfg.y;
    ip.g = window_gain(cfg.y);
  }
  normalize_intensity(s.volume, ip);
  s.target = target_from_triplet(mapped, s.volume.meta, model.representation);
  return s;
}

namespace {

// Runs build(slot) for every slot, striped over min(workers, n) threads.
// Slot assignment depends only on the slot index, so results are identical
// for any worker count; the first exception is rethrown on the caller.
void for_each_slot(int n, int workers, const std::function<void(int)>& build) {
  const int nw = std::min(workers, n);
  if (nw <= 1) {
    for (int slot = 0; slot < n; ++slot) build(slot);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nw));
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(nw));
  for (int w = 0; w < nw; ++w) {
    threads.emplace_back([&, w]() {
      try {
        for (int slot = w; slot < n; slot += nw) build(slot);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

TrainResult train(const TrainRun& run) {
  if (run.manifest == nullptr) throw DataError("train: manifest is required");
  const DatasetManifest& m = *run.manifest;
  run.hp.validate();
  run.model.validate();
  if (run.workers < 1) throw DataError("train: workers must be >= 1");

  const FoldSplit split = split_folds(m, run.test_fold);
  if (split.train.empty()) throw DataError("train: training set is empty");

  auto loader = run.load_volume;
  if (!loader) {
    if (run.data_dir.empty())
      throw DataError("train: provide load_volume or data_dir");
    const std::string dir = run.data_dir;
    loader = [dir](const ManifestEntry& e) { return read_volume(dir + "/" + e.volume_base).volume; };
  }

  // All train and validation volumes are held in memory for the whole run;
  // at desk scale that is a few hundred MB at most.
  std::vector<Volume> cache(m.entries.size());
  for (int idx : split.train) cache[idx] = loader(m.entries[idx]);
  for (int idx : split.val) cache[idx] = loader(m.entries[idx]);

  // Validation inputs are fixed (no augmentation), so normalize them once.
  std::vector<TrainingSample> val_samples;
  val_samples.reserve(split.val.size());
  for (int idx : split.val) {
    const ManifestEntry& e = m.entries[idx];
    val_samples.push_back(make_training_sample(cache[idx], e.truth, e.region, run.model,
                                               run.augment, /*augment=*/false, 0));
  }

  ModelState<float> state = init_state<float>(run.model, run.seed);
  SgdMomentum<float> opt(state);

  TrainResult res;
  res.train_loss.reserve(static_cast<std::size_t>(run.hp.epochs));
  const int out_size = run.model.out_size();
  const std::size_t vox = static_cast<std::size_t>(run.model.input_dims[0]) *
                          static_cast<std::size_t>(run.model.input_dims[1]) *
                          static_cast<std::size_t>(run.model.input_dims[2]);
  double best_score = 0.0;

  for (int epoch = 1; epoch <= run.hp.epochs; ++epoch) {
    const double lr = learning_rate_at(run.hp, epoch);
    const std::vector<int> schedule =
        oversample_schedule(m, run.test_fold, derive_seed(run.seed, kScheduleSalt,
                                                          static_cast<std::uint64_t>(epoch)));
    const std::uint64_t epoch_seed =
        derive_seed(run.seed, kAugmentSalt, static_cast<std::uint64_t>(epoch));

    double loss_sum = 0.0;
    int n_seen = 0;
    const int len = static_cast<int>(schedule.size());
    for (int start = 0; start < len; start += run.hp.batch_size) {
      const int n = std::min(run.hp.batch_size, len - start);
      std::vector<TrainingSample> samples(static_cast<std::size_t>(n));
      for_each_slot(n, run.workers, [&](int slot) {
        const int idx = schedule[static_cast<std::size_t>(start + slot)];
        const ManifestEntry& e = m.entries[static_cast<std::size_t>(idx)];
        const std::uint64_t s =
            derive_seed(epoch_seed, 1, static_cast<std::uint64_t>(start + slot));
        samples[static_cast<std::size_t>(slot)] =
            make_training_sample(cache[static_cast<std::size_t>(idx)], e.truth, e.region,
                                 run.model, run.augment, run.augment_enabled, s);
      });

      Batch<float> batch;
      batch.n = n;
      batch.voxels.reserve(static_cast<std::size_t>(n) * vox);
      batch.region_ids.reserve(static_cast<std::size_t>(n));
      std::vector<float> target;
      target.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(out_size));
      for (const TrainingSample& s : samples) {
        batch.voxels.insert(batch.voxels.end(), s.volume.voxels.begin(), s.volume.voxels.end());
        batch.region_ids.push_back(static_cast<int>(s.region));
        for (double v : s.target.values) target.push_back(static_cast<float>(v));
      }

      ForwardCache<float> fwd_cache;
      const std::vector<float> out = forward(state, batch, RunMode::kTrain, &fwd_cache);
      const double loss = mse_loss(out, target);
      if (!std::isfinite(loss)) {
        std::string where = "epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(start / run.hp.batch_size);
        if (!run.checkpoint_dir.empty()) {
          const std::string snap = run.checkpoint_dir + "/diagnostic.ckpt";
          save_checkpoint(snap, state);
          where += "; state dumped to " + snap;
        }
        throw NumericalError("train: non-finite loss at " + where);
      }
      const std::vector<float> grad_out = mse_loss_grad(out, target);
      std::vector<NamedTensor<float>> grads = backward(state, batch, fwd_cache, grad_out);
      opt.step(state, grads, lr, run.hp.momentum);
      loss_sum += loss * n;
      n_seen += n;
    }
    res.train_loss.push_back(n_seen > 0 ? loss_sum / n_seen : 0.0);

    if (!val_samples.empty()) {
      std::vector<double> scores;
      scores.reserve(val_samples.size());
      for (std::size_t i = 0; i < val_samples.size(); ++i) {
        const ManifestEntry& e = m.entries[static_cast<std::size_t>(split.val[i])];
        try {
          const PlaneTriplet pred = predict_planes(state, val_samples[i].volume, e.region,
                                                   val_samples[i].volume.meta);
          scores.push_back(score(pred, e.truth).score);
        } catch (const DegenerateEncoding&) {
          scores.push_back(kDegenerateScore);
        }
      }
      const double med = median(scores);
      res.val_score.push_back(med);
      if (res.best_epoch < 0 || med < best_score) {
        best_score = med;
        res.best_epoch = epoch;
        res.best_state = state;
      }
    }

    if (run.verbose) {
      std::fprintf(stderr, "epoch %3d  lr %.6g  loss %.6g", epoch, lr, res.train_loss.back());
      if (!res.val_score.empty()) std::fprintf(stderr, "  val %.4f", res.val_score.back());
      std::fprintf(stderr, "\n");
    }
  }

  res.state = std::move(state);
  if (res.best_epoch < 0) res.best_state = res.state;
  if (!run.checkpoint_dir.empty()) {
    save_checkpoint(run.checkpoint_dir + "/final.ckpt", res.state);
    save_checkpoint(run.checkpoint_dir + "/best.ckpt", res.best_state);
  }
  return res;
}

}  // namespace planereg
