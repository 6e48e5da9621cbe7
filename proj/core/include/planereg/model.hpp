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

#ifndef PLANEREG_MODEL_HPP_
#define PLANEREG_MODEL_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "planereg/geometry.hpp"
#include "planereg/rotation.hpp"
#include "planereg/volume.hpp"

namespace planereg {

enum class ModelVariant { kBaseline = 0, kWithClass = 1, kMultiHead = 2 };

std::string to_string(ModelVariant variant);
ModelVariant variant_from_string(const std::string& name);  // throws DataError

/// Architecture description.  Each conv block is conv(3x3x3, stride 1, pad 1)
/// -> ReLU -> batch norm -> max pool(2, stride 2, ceil); the trunk flattens
/// into a small FC stack whose last layer is linear.
struct ModelConfig {
  ModelVariant variant = ModelVariant::kBaseline;
  RepresentationKind representation = RepresentationKind::kSixDxy;
  std::array<int, 3> input_dims{32, 32, 32};
  /// Channel ladder including the input channel count.
  std::vector<int> channels{1, 8, 16, 32, 64};
  /// Hidden FC widths; the output layer (out_size units) is appended.
  std::vector<int> fc_widths{256, 50};
  int n_regions = kNumRegions;

  int num_blocks() const { return static_cast<int>(channels.size()) - 1; }
  /// 3 planes x (3 translation + representation values).
  int out_size() const { return 3 * (3 + representation_size(representation)); }
  /// Tensor dims {C, D, H, W} entering each block; the last entry is the
  /// trunk output that gets flattened.
  std::vector<std::array<int, 4>> stage_dims() const;
  int flatten_size() const;
  /// Flattened features plus the one-hot width for the with_class variant.
  int fc_input_size() const;
  void validate() const;  // throws DataError

  /// Full-scale preset (72^3 input, ladder to 228 channels, FC 1300->50).
  /// Kept for shape checking; training it is far beyond desk budget.
  static ModelConfig full_scale();
};

template <typename Scalar>
struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<Scalar> data;

  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
};

/// All learnable parameters plus batch-norm running statistics, in a fixed
/// order so gradient vectors and checkpoints align by index.
template <typename Scalar>
struct ModelState {
  ModelConfig config;
  std::vector<NamedTensor<Scalar>> params;
  std::vector<NamedTensor<Scalar>> buffers;  // bn running mean/var

  NamedTensor<Scalar>& find(const std::string& name);              // throws DataError
  const NamedTensor<Scalar>& find(const std::string& name) const;  // throws DataError
  std::int64_t parameter_count() const;
};

/// He fan-in normal initialization for conv/FC weights, zero biases, identity
/// batch norm.  Deterministic in `seed`.
template <typename Scalar>
ModelState<Scalar> init_state(const ModelConfig& config, std::uint64_t seed);

/// A training/inference batch.  Voxels are intensity-normalized values laid
/// out as [n][channel][z][y][x], x fastest.
template <typename Scalar>
struct Batch {
  int n = 0;
  std::vector<Scalar> voxels;
  std::vector<int> region_ids;
  /// with_class corruption experiments: replaces every one-hot component with
  /// this constant at the FC input (e.g. 0.0, 0.5, 1.0).
  std::optional<Scalar> one_hot_override;
};

/// Activations recorded by a train-mode forward pass; backward consumes them.
template <typename Scalar>
struct ForwardCache {
  struct BlockCache {
    std::vector<Scalar> in;            // conv input
    std::vector<std::uint8_t> relu_mask;
    std::vector<Scalar> xhat;          // batch-norm normalized activations
    std::vector<Scalar> inv_std;       // per channel
    std::vector<int> argmax;           // pool source index per pooled element
    std::array<int, 4> in_dims{};      // {C, D, H, W} entering the block
    std::array<int, 4> out_dims{};     // {C, D, H, W} after pooling
  };
  std::vector<BlockCache> blocks;
  std::vector<Scalar> fc_in;                       // flattened (+ one-hot)
  std::vector<std::vector<Scalar>> fc_hidden;      // post-ReLU per hidden layer
  std::vector<std::vector<std::uint8_t>> fc_mask;  // ReLU masks per hidden layer
};

enum class RunMode { kTrain, kEval };

/// Runs the network over a batch and returns [n x out_size] outputs.  Train
/// mode normalizes with batch statistics and updates the running statistics
/// in `state`; eval mode reads the running statistics and leaves `state`
/// untouched.  `cache` (required for kTrain if backward will run) receives
/// everything backward needs.
template <typename Scalar>
std::vector<Scalar> forward(ModelState<Scalar>& state, const Batch<Scalar>& batch,
                            RunMode mode, ForwardCache<Scalar>* cache = nullptr);

/// Gradients of a scalar loss w.r.t. every parameter, given dLoss/dOutputs.
/// Returned tensors align index-for-index with state.params; parameters off
/// the active path (unselected multi-head stacks) come back exactly zero.
template <typename Scalar>
std::vector<NamedTensor<Scalar>> backward(const ModelState<Scalar>& state,
                                          const Batch<Scalar>& batch,
                                          const ForwardCache<Scalar>& cache,
                                          const std::vector<Scalar>& grad_outputs);

/// Per-plane regression target: normalized translation then the rotation
/// encoding, planes in axial/coronal/sagittal order.  All values in [-1, 1].
struct RegressionTarget {
  std::vector<double> values;
};

RegressionTarget target_from_triplet(const PlaneTriplet& truth,
                                     const VolumeMeta& meta,
                                     RepresentationKind representation);

/// Decodes raw outputs for one (already normalized) volume into planes:
/// rotation via the representation's decoder, centers via translation
/// denormalization.  Degenerate encodings propagate.
template <typename Scalar>
PlaneTriplet predict_planes(ModelState<Scalar>& state, const Volume& normalized,
                            BodyRegion region, const VolumeMeta& meta);

}  // namespace planereg

#endif  // PLANEREG_MODEL_HPP_
