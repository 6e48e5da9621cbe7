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

#include "planereg/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "planereg/errors.hpp"
#include "planereg/rng.hpp"

namespace planereg {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;

int ceil_div2(int x) { return (x + 1) / 2; }

std::string block_name(const char* kind, int block, const char* field) {
  return std::string(kind) + std::to_string(block + 1) + "." + field;
}

std::string fc_name(int head, int layer, const char* field, ModelVariant variant) {
  std::string name;
  if (variant == ModelVariant::kMultiHead) {
    name = "head" + std::to_string(head) + ".";
  }
  return name + "fc" + std::to_string(layer + 1) + "." + field;
}

/// FC layer sizes as {in, hidden..., out}.
std::vector<int> fc_sizes(const ModelConfig& config) {
  std::vector<int> sizes;
  sizes.push_back(config.fc_input_size());
  for (int w : config.fc_widths) sizes.push_back(w);
  sizes.push_back(config.out_size());
  return sizes;
}

}  // namespace

std::string to_string(ModelVariant variant) {
  switch (variant) {
    case ModelVariant::kBaseline: return "baseline";
    case ModelVariant::kWithClass: return "with_class";
    case ModelVariant::kMultiHead: return "multi_head";
  }
  throw DataError("unknown model variant");
}

ModelVariant variant_from_string(const std::string& name) {
  if (name == "baseline") return ModelVariant::kBaseline;
  if (name == "with_class") return ModelVariant::kWithClass;
  if (name == "multi_head") return ModelVariant::kMultiHead;
  throw DataError("unknown model variant: " + name);
}

std::vector<std::array<int, 4>> ModelConfig::stage_dims() const {
  std::vector<std::array<int, 4>> dims;
  dims.push_back({channels[0], input_dims[0], input_dims[1], input_dims[2]});
  for (int i = 0; i < num_blocks(); ++i) {
    const auto& prev = dims.back();
    dims.push_back({channels[i + 1], ceil_div2(prev[1]), ceil_div2(prev[2]),
                    ceil_div2(prev[3])});
  }
  return dims;
}

int ModelConfig::flatten_size() const {
  const auto dims = stage_dims().back();
  return dims[0] * dims[1] * dims[2] * dims[3];
}

int ModelConfig::fc_input_size() const {
  return flatten_size() + (variant == ModelVariant::kWithClass ? n_regions : 0);
}

void ModelConfig::validate() const {
  if (channels.size() < 2) throw DataError("model: need at least one conv block");
  for (int c : channels) {
    if (c < 1) throw DataError("model: channel counts must be positive");
  }
  for (int d : input_dims) {
    if (d < 1) throw DataError("model: input dims must be positive");
  }
  if (fc_widths.empty()) throw DataError("model: need at least one hidden FC layer");
  for (int w : fc_widths) {
    if (w < 1) throw DataError("model: FC widths must be positive");
  }
  if (n_regions < 1) throw DataError("model: n_regions must be positive");
}

ModelConfig ModelConfig::full_scale() {
  ModelConfig config;
  config.channels = {1, 8, 16, 32, 64, 228};
  config.input_dims = {72, 72, 72};
  config.fc_widths = {1300, 50};
  return config;
}

template <typename Scalar>
NamedTensor<Scalar>& ModelState<Scalar>::find(const std::string& name) {
  for (auto& t : params) {
    if (t.name == name) return t;
  }
  for (auto& t : buffers) {
    if (t.name == name) return t;
  }
  throw DataError("model state has no tensor named " + name);
}

template <typename Scalar>
const NamedTensor<Scalar>& ModelState<Scalar>::find(const std::string& name) const {
  return const_cast<ModelState*>(this)->find(name);
}

template <typename Scalar>
std::int64_t ModelState<Scalar>::parameter_count() const {
  std::int64_t total = 0;
  for (const auto& t : params) total += t.size();
  return total;
}

namespace {

template <typename Scalar>
NamedTensor<Scalar> make_tensor(std::string name, std::vector<int> shape) {
  NamedTensor<Scalar> t;
  t.name = std::move(name);
  t.shape = std::move(shape);
  std::int64_t n = 1;
  for (int d : t.shape) n *= d;
  t.data.assign(static_cast<std::size_t>(n), Scalar(0));
  return t;
}

// He fan-in scaling with the activation's gain: sqrt(2/fan_in) for layers
// feeding a ReLU (the factor 2 compensates the halved variance), plain
// sqrt(1/fan_in) for the linear output layer.  Using the ReLU gain on the
// output too would start predictions at > 2x the target scale, and the
// resulting shrink-everything gradient reliably kills the last hidden layer
// under the high-momentum optimizer.
template <typename Scalar>
void he_fill(NamedTensor<Scalar>& t, int fan_in, double gain, Rng& rng) {
  const double stddev = std::sqrt(gain / fan_in);
  for (Scalar& w : t.data) w = static_cast<Scalar>(stddev * rng.normal());
}

/// Builds the parameter/buffer lists in their canonical order.  Weights are
/// drawn in this same order, so initialization is reproducible.
template <typename Scalar>
void build_tensors(ModelState<Scalar>& state, Rng* rng) {
  const ModelConfig& config = state.config;
  for (int i = 0; i < config.num_blocks(); ++i) {
    const int c_in = config.channels[i];
    const int c_out = config.channels[i + 1];
    auto weight = make_tensor<Scalar>(block_name("conv", i, "weight"),
                                      {c_out, c_in, 3, 3, 3});
    if (rng != nullptr) he_fill(weight, c_in * 27, 2.0, *rng);
    state.params.push_back(std::move(weight));
    state.params.push_back(make_tensor<Scalar>(block_name("conv", i, "bias"), {c_out}));

    auto gamma = make_tensor<Scalar>(block_name("bn", i, "gamma"), {c_out});
    std::fill(gamma.data.begin(), gamma.data.end(), Scalar(1));
    state.params.push_back(std::move(gamma));
    state.params.push_back(make_tensor<Scalar>(block_name("bn", i, "beta"), {c_out}));

    state.buffers.push_back(
        make_tensor<Scalar>(block_name("bn", i, "running_mean"), {c_out}));
    auto rv = make_tensor<Scalar>(block_name("bn", i, "running_var"), {c_out});
    std::fill(rv.data.begin(), rv.data.end(), Scalar(1));
    state.buffers.push_back(std::move(rv));
  }

  const std::vector<int> sizes = fc_sizes(config);
  const int heads = config.variant == ModelVariant::kMultiHead ? config.n_regions : 1;
  for (int h = 0; h < heads; ++h) {
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      auto weight = make_tensor<Scalar>(
          fc_name(h, static_cast<int>(l), "weight", config.variant),
          {sizes[l + 1], sizes[l]});
      const bool last = l + 2 == sizes.size();
      if (rng != nullptr) he_fill(weight, sizes[l], last ? 1.0 : 2.0, *rng);
      state.params.push_back(std::move(weight));
      auto bias = make_tensor<Scalar>(
          fc_name(h, static_cast<int>(l), "bias", config.variant), {sizes[l + 1]});
      // Hidden-layer biases start slightly positive.  The early shrink phase of
      // the high-momentum optimizer otherwise drives every unit of the narrow
      // head layers negative on all inputs at once; ReLU gradients then vanish
      // and the head is permanently stuck predicting a constant.
      if (rng != nullptr && !last) {
        std::fill(bias.data.begin(), bias.data.end(), Scalar(0.1));
      }
      state.params.push_back(std::move(bias));
    }
  }
}

}  // namespace

template <typename Scalar>
ModelState<Scalar> init_state(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelState<Scalar> state;
  state.config = config;
  Rng rng(derive_seed(seed, 0x1417ull, 0));
  build_tensors(state, &rng);
  return state;
}

namespace {

// ---------------------------------------------------------------------------
// Layer kernels.  Activations are [C][D][H][W] per sample, x fastest; batches
// are stored sample-major.  The conv loops are arranged as shifted row "axpy"
// operations so the compiler can vectorize the x loop.
// ---------------------------------------------------------------------------

template <typename Scalar>
void conv3d_forward(const Scalar* in, Scalar* out, const Scalar* weight,
                    const Scalar* bias, int c_in, int c_out, int d, int h, int w) {
  const int spatial = d * h * w;
  for (int co = 0; co < c_out; ++co) {
    std::fill(out + co * spatial, out + (co + 1) * spatial, bias[co]);
  }
  for (int co = 0; co < c_out; ++co) {
    for (int ci = 0; ci < c_in; ++ci) {
      const Scalar* w_base = weight + ((co * c_in) + ci) * 27;
      for (int dz = 0; dz < 3; ++dz) {
        const int z0 = std::max(0, 1 - dz), z1 = std::min(d, d + 1 - dz);
        for (int dy = 0; dy < 3; ++dy) {
          const int y0 = std::max(0, 1 - dy), y1 = std::min(h, h + 1 - dy);
          for (int dx = 0; dx < 3; ++dx) {
            const Scalar wv = w_base[(dz * 3 + dy) * 3 + dx];
            const int x0 = std::max(0, 1 - dx), x1 = std::min(w, w + 1 - dx);
            for (int z = z0; z < z1; ++z) {
              for (int y = y0; y < y1; ++y) {
                Scalar* out_row = out + (co * d + z) * h * w + y * w;
                const Scalar* in_row =
                    in + (ci * d + (z + dz - 1)) * h * w + (y + dy - 1) * w + (dx - 1);
                for (int x = x0; x < x1; ++x) out_row[x] += wv * in_row[x];
              }
            }
          }
        }
      }
    }
  }
}

template <typename Scalar>
void conv3d_backward(const Scalar* in, const Scalar* gout, const Scalar* weight,
                     Scalar* gin, Scalar* gweight, Scalar* gbias, int c_in,
                     int c_out, int d, int h, int w) {
  const int spatial = d * h * w;
  for (int co = 0; co < c_out; ++co) {
    double acc = 0.0;
    const Scalar* g = gout + co * spatial;
    for (int s = 0; s < spatial; ++s) acc += g[s];
    gbias[co] += static_cast<Scalar>(acc);
  }
  for (int co = 0; co < c_out; ++co) {
    for (int ci = 0; ci < c_in; ++ci) {
      const Scalar* w_base = weight + ((co * c_in) + ci) * 27;
      Scalar* gw_base = gweight + ((co * c_in) + ci) * 27;
      for (int dz = 0; dz < 3; ++dz) {
        const int z0 = std::max(0, 1 - dz), z1 = std::min(d, d + 1 - dz);
        for (int dy = 0; dy < 3; ++dy) {
          const int y0 = std::max(0, 1 - dy), y1 = std::min(h, h + 1 - dy);
          for (int dx = 0; dx < 3; ++dx) {
            const Scalar wv = w_base[(dz * 3 + dy) * 3 + dx];
            const int x0 = std::max(0, 1 - dx), x1 = std::min(w, w + 1 - dx);
            double wgrad = 0.0;
            for (int z = z0; z < z1; ++z) {
              for (int y = y0; y < y1; ++y) {
                const Scalar* gout_row = gout + (co * d + z) * h * w + y * w;
                const int in_off =
                    (ci * d + (z + dz - 1)) * h * w + (y + dy - 1) * w + (dx - 1);
                const Scalar* in_row = in + in_off;
                double dot = 0.0;
                for (int x = x0; x < x1; ++x) dot += double(gout_row[x]) * in_row[x];
                wgrad += dot;
                if (gin != nullptr) {
                  Scalar* gin_row = gin + in_off;
                  for (int x = x0; x < x1; ++x) gin_row[x] += wv * gout_row[x];
                }
              }
            }
            gw_base[(dz * 3 + dy) * 3 + dx] += static_cast<Scalar>(wgrad);
          }
        }
      }
    }
  }
}

template <typename Scalar>
void maxpool_forward(const Scalar* in, Scalar* out, int* argmax, int c, int d,
                     int h, int w, int od, int oh, int ow) {
  for (int ch = 0; ch < c; ++ch) {
    for (int zo = 0; zo < od; ++zo) {
      for (int yo = 0; yo < oh; ++yo) {
        for (int xo = 0; xo < ow; ++xo) {
          const int z_end = std::min(2 * zo + 2, d);
          const int y_end = std::min(2 * yo + 2, h);
          const int x_end = std::min(2 * xo + 2, w);
          Scalar best{};
          int best_idx = -1;
          for (int z = 2 * zo; z < z_end; ++z) {
            for (int y = 2 * yo; y < y_end; ++y) {
              for (int x = 2 * xo; x < x_end; ++x) {
                const int idx = (ch * d + z) * h * w + y * w + x;
                if (best_idx < 0 || in[idx] > best) {
                  best = in[idx];
                  best_idx = idx;
                }
              }
            }
          }
          const int out_idx = (ch * od + zo) * oh * ow + yo * ow + xo;
          out[out_idx] = best;
          argmax[out_idx] = best_idx;
        }
      }
    }
  }
}

template <typename Scalar>
void fc_forward(const Scalar* in, Scalar* out, const Scalar* weight,
                const Scalar* bias, int n_in, int n_out) {
  for (int o = 0; o < n_out; ++o) {
    const Scalar* w_row = weight + o * n_in;
    double acc = bias[o];
    for (int i = 0; i < n_in; ++i) acc += double(w_row[i]) * in[i];
    out[o] = static_cast<Scalar>(acc);
  }
}

template <typename Scalar>
void fc_backward(const Scalar* in, const Scalar* gout, const Scalar* weight,
                 Scalar* gin, Scalar* gweight, Scalar* gbias, int n_in, int n_out) {
  if (gin != nullptr) std::fill(gin, gin + n_in, Scalar(0));
  for (int o = 0; o < n_out; ++o) {
    const Scalar g = gout[o];
    gbias[o] += g;
    const Scalar* w_row = weight + o * n_in;
    Scalar* gw_row = gweight + o * n_in;
    for (int i = 0; i < n_in; ++i) gw_row[i] += g * in[i];
    if (gin != nullptr) {
      for (int i = 0; i < n_in; ++i) gin[i] += g * w_row[i];
    }
  }
}

template <typename Scalar>
int head_of(const ModelConfig& config, const Batch<Scalar>& batch, int sample) {
  if (config.variant == ModelVariant::kBaseline) return 0;
  const int region = batch.region_ids[sample];
  return config.variant == ModelVariant::kMultiHead ? region : 0;
}

template <typename Scalar>
void check_batch(const ModelConfig& config, const Batch<Scalar>& batch) {
  const auto in = config.stage_dims().front();
  const std::size_t expect = static_cast<std::size_t>(batch.n) * in[0] * in[1] *
                             in[2] * in[3];
  if (batch.n < 1 || batch.voxels.size() != expect) {
    throw DataError("model: batch voxel buffer does not match config dims");
  }
  if (config.variant != ModelVariant::kBaseline) {
    if (static_cast<int>(batch.region_ids.size()) != batch.n) {
      throw DataError("model: region_ids required for this variant");
    }
    for (int r : batch.region_ids) {
      if (r < 0 || r >= config.n_regions) {
        throw DataError("model: region id out of range");
      }
    }
  }
}

}  // namespace

template <typename Scalar>
std::vector<Scalar> forward(ModelState<Scalar>& state, const Batch<Scalar>& batch,
                            RunMode mode, ForwardCache<Scalar>* cache) {
  const ModelConfig& config = state.config;
  check_batch(config, batch);
  const auto stages = config.stage_dims();
  const int n = batch.n;

  if (cache != nullptr) {
    cache->blocks.assign(config.num_blocks(), {});
    cache->fc_hidden.assign(config.fc_widths.size(), {});
    cache->fc_mask.assign(config.fc_widths.size(), {});
  }

  std::vector<Scalar> act = batch.voxels;
  for (int b = 0; b < config.num_blocks(); ++b) {
    const auto& in_d = stages[b];
    const auto& out_d = stages[b + 1];
    const int c_in = in_d[0], c_out = out_d[0];
    const int d = in_d[1], h = in_d[2], w = in_d[3];
    const int od = out_d[1], oh = out_d[2], ow = out_d[3];
    const int in_sz = c_in * d * h * w;
    const int conv_sz = c_out * d * h * w;
    const int out_sz = c_out * od * oh * ow;

    const Scalar* weight = state.find(block_name("conv", b, "weight")).data.data();
    const Scalar* bias = state.find(block_name("conv", b, "bias")).data.data();
    const Scalar* gamma = state.find(block_name("bn", b, "gamma")).data.data();
    const Scalar* beta = state.find(block_name("bn", b, "beta")).data.data();
    auto& running_mean = state.find(block_name("bn", b, "running_mean")).data;
    auto& running_var = state.find(block_name("bn", b, "running_var")).data;

    std::vector<Scalar> conv_out(static_cast<std::size_t>(n) * conv_sz);
    for (int s = 0; s < n; ++s) {
      conv3d_forward(act.data() + std::size_t(s) * in_sz,
                     conv_out.data() + std::size_t(s) * conv_sz, weight, bias,
                     c_in, c_out, d, h, w);
    }

    std::vector<std::uint8_t> relu_mask(conv_out.size());
    for (std::size_t i = 0; i < conv_out.size(); ++i) {
      relu_mask[i] = conv_out[i] > Scalar(0);
      if (!relu_mask[i]) conv_out[i] = Scalar(0);
    }

    // Batch norm over (sample, spatial) per channel.
    const int spatial = d * h * w;
    const std::int64_t count = std::int64_t(n) * spatial;
    std::vector<Scalar> inv_std(c_out);
    std::vector<Scalar> ch_mean(c_out);
    if (mode == RunMode::kTrain) {
      for (int ch = 0; ch < c_out; ++ch) {
        // Per-sample partial sums keep duplicate samples exactly additive.
        double sum = 0.0, sum_sq = 0.0;
        for (int s = 0; s < n; ++s) {
          const Scalar* p = conv_out.data() + std::size_t(s) * conv_sz + ch * spatial;
          double ps = 0.0, ps_sq = 0.0;
          for (int i = 0; i < spatial; ++i) {
            ps += p[i];
            ps_sq += double(p[i]) * p[i];
          }
          sum += ps;
          sum_sq += ps_sq;
        }
        const double mean = sum / count;
        const double var = std::max(0.0, sum_sq / count - mean * mean);
        ch_mean[ch] = static_cast<Scalar>(mean);
        inv_std[ch] = static_cast<Scalar>(1.0 / std::sqrt(var + kBnEps));
        const double unbiased = count > 1 ? var * count / (count - 1) : var;
        running_mean[ch] = static_cast<Scalar>((1.0 - kBnMomentum) * running_mean[ch] +
                                               kBnMomentum * mean);
        running_var[ch] = static_cast<Scalar>((1.0 - kBnMomentum) * running_var[ch] +
                                              kBnMomentum * unbiased);
      }
    } else {
      for (int ch = 0; ch < c_out; ++ch) {
        ch_mean[ch] = running_mean[ch];
        inv_std[ch] =
            static_cast<Scalar>(1.0 / std::sqrt(double(running_var[ch]) + kBnEps));
      }
    }

    std::vector<Scalar> xhat;
    if (cache != nullptr) xhat.resize(conv_out.size());
    std::vector<Scalar> bn_out(conv_out.size());
    for (int s = 0; s < n; ++s) {
      for (int ch = 0; ch < c_out; ++ch) {
        const std::size_t off = std::size_t(s) * conv_sz + std::size_t(ch) * spatial;
        const Scalar m = ch_mean[ch], is = inv_std[ch], g = gamma[ch], bt = beta[ch];
        for (int i = 0; i < spatial; ++i) {
          const Scalar norm = (conv_out[off + i] - m) * is;
          if (cache != nullptr) xhat[off + i] = norm;
          bn_out[off + i] = g * norm + bt;
        }
      }
    }

    std::vector<Scalar> pooled(static_cast<std::size_t>(n) * out_sz);
    std::vector<int> argmax(pooled.size());
    for (int s = 0; s < n; ++s) {
      maxpool_forward(bn_out.data() + std::size_t(s) * conv_sz,
                      pooled.data() + std::size_t(s) * out_sz,
                      argmax.data() + std::size_t(s) * out_sz, c_out, d, h, w, od,
                      oh, ow);
    }

    if (cache != nullptr) {
      auto& bc = cache->blocks[b];
      bc.in = std::move(act);
      bc.relu_mask = std::move(relu_mask);
      bc.xhat = std::move(xhat);
      bc.inv_std = std::move(inv_std);
      bc.argmax = std::move(argmax);
      bc.in_dims = in_d;
      bc.out_dims = out_d;
    }
    act = std::move(pooled);
  }

  // FC stack.
  const std::vector<int> sizes = fc_sizes(config);
  const int flat = config.flatten_size();
  const int fc_in_sz = sizes[0];
  std::vector<Scalar> fc_in(static_cast<std::size_t>(n) * fc_in_sz, Scalar(0));
  for (int s = 0; s < n; ++s) {
    std::copy(act.begin() + std::size_t(s) * flat,
              act.begin() + std::size_t(s + 1) * flat,
              fc_in.begin() + std::size_t(s) * fc_in_sz);
    if (config.variant == ModelVariant::kWithClass) {
      Scalar* one_hot = fc_in.data() + std::size_t(s) * fc_in_sz + flat;
      if (batch.one_hot_override.has_value()) {
        std::fill(one_hot, one_hot + config.n_regions, *batch.one_hot_override);
      } else {
        one_hot[batch.region_ids[s]] = Scalar(1);
      }
    }
  }

  const int n_hidden = static_cast<int>(config.fc_widths.size());
  std::vector<Scalar> outputs(static_cast<std::size_t>(n) * config.out_size());
  std::vector<std::vector<Scalar>> hidden(n_hidden);
  std::vector<std::vector<std::uint8_t>> masks(n_hidden);
  for (int l = 0; l < n_hidden; ++l) {
    hidden[l].resize(static_cast<std::size_t>(n) * sizes[l + 1]);
    masks[l].resize(hidden[l].size());
  }

  for (int s = 0; s < n; ++s) {
    const int head = head_of(config, batch, s);
    const Scalar* cur = fc_in.data() + std::size_t(s) * fc_in_sz;
    for (int l = 0; l <= n_hidden; ++l) {
      const Scalar* weight =
          state.find(fc_name(head, l, "weight", config.variant)).data.data();
      const Scalar* bias =
          state.find(fc_name(head, l, "bias", config.variant)).data.data();
      Scalar* dst = l == n_hidden
                        ? outputs.data() + std::size_t(s) * config.out_size()
                        : hidden[l].data() + std::size_t(s) * sizes[l + 1];
      fc_forward(cur, dst, weight, bias, sizes[l], sizes[l + 1]);
      if (l < n_hidden) {
        std::uint8_t* mask = masks[l].data() + std::size_t(s) * sizes[l + 1];
        for (int i = 0; i < sizes[l + 1]; ++i) {
          mask[i] = dst[i] > Scalar(0);
          if (!mask[i]) dst[i] = Scalar(0);
        }
      }
      cur = dst;
    }
  }

  if (cache != nullptr) {
    cache->fc_in = std::move(fc_in);
    cache->fc_hidden = std::move(hidden);
    cache->fc_mask = std::move(masks);
  }
  return outputs;
}

template <typename Scalar>
std::vector<NamedTensor<Scalar>> backward(const ModelState<Scalar>& state,
                                          const Batch<Scalar>& batch,
                                          const ForwardCache<Scalar>& cache,
                                          const std::vector<Scalar>& grad_outputs) {
  const ModelConfig& config = state.config;
  check_batch(config, batch);
  const int n = batch.n;
  if (grad_outputs.size() != static_cast<std::size_t>(n) * config.out_size()) {
    throw DataError("model: grad_outputs size mismatch");
  }

  ModelState<Scalar> grads;
  grads.config = config;
  build_tensors(grads, nullptr);  // names/shapes align with params
  for (auto& t : grads.params) std::fill(t.data.begin(), t.data.end(), Scalar(0));

  const std::vector<int> sizes = fc_sizes(config);
  const int n_hidden = static_cast<int>(config.fc_widths.size());
  const int flat = config.flatten_size();
  const int fc_in_sz = sizes[0];

  // FC stack, reverse per sample.
  std::vector<Scalar> g_fc_in(static_cast<std::size_t>(n) * fc_in_sz);
  std::vector<Scalar> g_buf_a, g_buf_b;
  for (int s = 0; s < n; ++s) {
    const int head = head_of(config, batch, s);
    g_buf_a.assign(grad_outputs.begin() + std::size_t(s) * config.out_size(),
                   grad_outputs.begin() + std::size_t(s + 1) * config.out_size());
    for (int l = n_hidden; l >= 0; --l) {
      const Scalar* in =
          l == 0 ? cache.fc_in.data() + std::size_t(s) * fc_in_sz
                 : cache.fc_hidden[l - 1].data() + std::size_t(s) * sizes[l];
      const Scalar* weight =
          state.find(fc_name(head, l, "weight", config.variant)).data.data();
      Scalar* gweight =
          grads.find(fc_name(head, l, "weight", config.variant)).data.data();
      Scalar* gbias = grads.find(fc_name(head, l, "bias", config.variant)).data.data();
      Scalar* gin = l == 0 ? g_fc_in.data() + std::size_t(s) * fc_in_sz
                           : (g_buf_b.assign(sizes[l], Scalar(0)), g_buf_b.data());
      fc_backward(in, g_buf_a.data(), weight, gin, gweight, gbias, sizes[l],
                  sizes[l + 1]);
      if (l > 0) {
        const std::uint8_t* mask =
            cache.fc_mask[l - 1].data() + std::size_t(s) * sizes[l];
        for (int i = 0; i < sizes[l]; ++i) {
          if (!mask[i]) gin[i] = Scalar(0);
        }
        g_buf_a.assign(gin, gin + sizes[l]);
      }
    }
  }

  // Trunk, reverse block order.  The one-hot tail of g_fc_in (with_class) has
  // no upstream parameters and is simply dropped.
  std::vector<Scalar> g_act(static_cast<std::size_t>(n) * flat);
  for (int s = 0; s < n; ++s) {
    std::copy(g_fc_in.begin() + std::size_t(s) * fc_in_sz,
              g_fc_in.begin() + std::size_t(s) * fc_in_sz + flat,
              g_act.begin() + std::size_t(s) * flat);
  }

  for (int b = config.num_blocks() - 1; b >= 0; --b) {
    const auto& bc = cache.blocks[b];
    const int c_in = bc.in_dims[0], d = bc.in_dims[1], h = bc.in_dims[2],
              w = bc.in_dims[3];
    const int c_out = bc.out_dims[0], od = bc.out_dims[1], oh = bc.out_dims[2],
              ow = bc.out_dims[3];
    const int spatial = d * h * w;
    const int conv_sz = c_out * spatial;
    const int out_sz = c_out * od * oh * ow;
    const int in_sz = c_in * spatial;

    // Pool backward: scatter into the bn output grid.
    std::vector<Scalar> g_bn(static_cast<std::size_t>(n) * conv_sz, Scalar(0));
    for (int s = 0; s < n; ++s) {
      const Scalar* g_pool = g_act.data() + std::size_t(s) * out_sz;
      const int* argmax = bc.argmax.data() + std::size_t(s) * out_sz;
      Scalar* dst = g_bn.data() + std::size_t(s) * conv_sz;
      for (int i = 0; i < out_sz; ++i) dst[argmax[i]] += g_pool[i];
    }

    // Batch-norm backward (train-mode statistics).
    const Scalar* gamma = state.find(block_name("bn", b, "gamma")).data.data();
    Scalar* ggamma = grads.find(block_name("bn", b, "gamma")).data.data();
    Scalar* gbeta = grads.find(block_name("bn", b, "beta")).data.data();
    const std::int64_t count = std::int64_t(n) * spatial;
    std::vector<Scalar> g_relu(g_bn.size());
    for (int ch = 0; ch < c_out; ++ch) {
      double sum_g = 0.0, sum_gx = 0.0;
      for (int s = 0; s < n; ++s) {
        const std::size_t off = std::size_t(s) * conv_sz + std::size_t(ch) * spatial;
        double pg = 0.0, pgx = 0.0;
        for (int i = 0; i < spatial; ++i) {
          pg += g_bn[off + i];
          pgx += double(g_bn[off + i]) * bc.xhat[off + i];
        }
        sum_g += pg;
        sum_gx += pgx;
      }
      ggamma[ch] += static_cast<Scalar>(sum_gx);
      gbeta[ch] += static_cast<Scalar>(sum_g);
      const double scale = double(gamma[ch]) * bc.inv_std[ch];
      const double mean_g = sum_g / count;
      const double mean_gx = sum_gx / count;
      for (int s = 0; s < n; ++s) {
        const std::size_t off = std::size_t(s) * conv_sz + std::size_t(ch) * spatial;
        for (int i = 0; i < spatial; ++i) {
          g_relu[off + i] = static_cast<Scalar>(
              scale * (g_bn[off + i] - mean_g - bc.xhat[off + i] * mean_gx));
        }
      }
    }

    // ReLU backward.
    for (std::size_t i = 0; i < g_relu.size(); ++i) {
      if (!bc.relu_mask[i]) g_relu[i] = Scalar(0);
    }

    // Conv backward; the input volume itself needs no gradient.
    const Scalar* weight = state.find(block_name("conv", b, "weight")).data.data();
    Scalar* gweight = grads.find(block_name("conv", b, "weight")).data.data();
    Scalar* gbias = grads.find(block_name("conv", b, "bias")).data.data();
    std::vector<Scalar> g_in;
    if (b > 0) g_in.assign(static_cast<std::size_t>(n) * in_sz, Scalar(0));
    for (int s = 0; s < n; ++s) {
      conv3d_backward(bc.in.data() + std::size_t(s) * in_sz,
                      g_relu.data() + std::size_t(s) * conv_sz, weight,
                      b > 0 ? g_in.data() + std::size_t(s) * in_sz : nullptr,
                      gweight, gbias, c_in, c_out, d, h, w);
    }
    g_act = std::move(g_in);
  }

  return std::move(grads.params);
}

RegressionTarget target_from_triplet(const PlaneTriplet& truth,
                                     const VolumeMeta& meta,
                                     RepresentationKind representation) {
  RegressionTarget target;
  const int repr = representation_size(representation);
  target.values.reserve(3 * (3 + repr));
  for (int j = 0; j < kNumPlanes; ++j) {
    const Plane& p = truth.plane(j);
    const Vec3 t = normalize_translation(p.center(), meta);
    target.values.push_back(t.x);
    target.values.push_back(t.y);
    target.values.push_back(t.z);
    const Mat3 rot = Mat3::from_rows(p.e_u(), p.e_v(), p.e_w());
    const RotationEncoding enc = encode(rot, representation);
    for (int i = 0; i < repr; ++i) target.values.push_back(enc.v[i]);
  }
  return target;
}

template <typename Scalar>
PlaneTriplet predict_planes(ModelState<Scalar>& state, const Volume& normalized,
                            BodyRegion region, const VolumeMeta& meta) {
  const ModelConfig& config = state.config;
  if (normalized.meta.dims != config.input_dims) {
    throw DataError("predict_planes: volume dims do not match model input");
  }
  Batch<Scalar> batch;
  batch.n = 1;
  batch.region_ids = {static_cast<int>(region)};
  batch.voxels.assign(normalized.voxels.begin(), normalized.voxels.end());
  const std::vector<Scalar> out = forward(state, batch, RunMode::kEval);

  const int repr = representation_size(config.representation);
  PlaneTriplet triplet;
  triplet.region = region;
  for (int j = 0; j < kNumPlanes; ++j) {
    const int base = j * (3 + repr);
    const Vec3 t{double(out[base]), double(out[base + 1]), double(out[base + 2])};
    RotationEncoding enc;
    enc.kind = config.representation;
    for (int i = 0; i < repr; ++i) enc.v[i] = double(out[base + 3 + i]);
    const Mat3 rot = decode(enc);
    triplet.plane(j) = Plane(denormalize_translation(t, meta), rot.row(0), rot.row(1));
  }
  return triplet;
}

template struct ModelState<float>;
template struct ModelState<double>;
template ModelState<float> init_state<float>(const ModelConfig&, std::uint64_t);
template ModelState<double> init_state<double>(const ModelConfig&, std::uint64_t);
template std::vector<float> forward<float>(ModelState<float>&, const Batch<float>&,
                                           RunMode, ForwardCache<float>*);
template std::vector<double> forward<double>(ModelState<double>&,
                                             const Batch<double>&, RunMode,
                                             ForwardCache<double>*);
template std::vector<NamedTensor<float>> backward<float>(
    const ModelState<float>&, const Batch<float>&, const ForwardCache<float>&,
    const std::vector<float>&);
template std::vector<NamedTensor<double>> backward<double>(
    const ModelState<double>&, const Batch<double>&, const ForwardCache<double>&,
    const std::vector<double>&);
template PlaneTriplet predict_planes<float>(ModelState<float>&, const Volume&,
                                            BodyRegion, const VolumeMeta&);
template PlaneTriplet predict_planes<double>(ModelState<double>&, const Volume&,
                                             BodyRegion, const VolumeMeta&);

}  // namespace planereg
