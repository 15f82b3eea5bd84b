#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spdnet/layers.hpp"
#include "spdnet/rng.hpp"
#include "spdnet/skeleton.hpp"
#include "spdnet/tape.hpp"

namespace spdnet {

enum class Ablation { kNone, kNoConv, kNoRecursive, kEuclidean };

std::string to_string(Ablation a);
Ablation ablation_from_string(const std::string& s);

struct ConvSpec {
  int out_channels = 0;
  int in_channels = 0;
  int kernel_size = 0;
};

struct ModelConfig {
  int input_dim = 15;  // joint count of the incoming descriptors
  int classes = 3;
  int subclips = 12;
  std::vector<ConvSpec> conv = {{4, 1, 6}, {8, 4, 3}};
  int hidden_dim = 9;
  int fc_units = 800;
  ActKind conv_activation = ActKind::kSinh;
  BiasMode gru_bias_mode = BiasMode::kAllOnes;
  double kernel_epsilon = 1e-4;
  double gru_epsilon = 1e-3;
  Ablation ablation = Ablation::kNone;
  std::uint64_t seed = 1;

  // Euclidean-space baseline: temporal 1d convolutions over raw joint
  // coordinates followed by a standard GRU.
  int eu_channels = 24;
  int eu_kernel = 3;
  int eu_hidden = 48;

  bool uses_conv() const { return ablation == Ablation::kNone || ablation == Ablation::kNoRecursive; }
  bool uses_recursion() const { return ablation == Ablation::kNone || ablation == Ablation::kNoConv; }

  int conv_output_dim() const;
  int conv_output_channels() const;
  int hidden_channels() const;
  int feature_length() const;

  void validate() const;  // throws std::invalid_argument on an inconsistent chain
};

struct Param {
  std::string name;
  Mat value;
};

// The network with its trainable parameters. Forward passes are recorded
// on a Tape so the same construction serves training, prediction and
// gradient checking.
class Model {
 public:
  explicit Model(ModelConfig cfg);

  // Seeds every parameter from the config seed.
  void init_params();

  struct Built {
    int loss = -1;
    int softmax = -1;
  };

  // Records the forward pass and loss for one sample. The label stored in
  // the sample is used as the cross-entropy target.
  Built build(Tape& tape, const PreparedSample& sample) const;

  std::vector<double> predict_probs(const PreparedSample& sample) const;
  int predict(const PreparedSample& sample) const;

  const ModelConfig& config() const { return cfg_; }
  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  int param_count() const { return int(params_.size()); }
  std::vector<Mat> zero_grads() const;

  int find_param(const std::string& name) const;  // -1 when absent

 private:
  struct GruChannelIds {
    int fr = -1, hr = -1, fz = -1, hz = -1, fh = -1;
  };
  struct EuGruIds {
    int wz = -1, uz = -1, bz = -1;
    int wr = -1, ur = -1, br = -1;
    int wh = -1, uh = -1, bh = -1;
  };

  int add_param(const std::string& name, Mat value);
  void build_param_table();

  // builders, all returning tape node ids
  std::vector<std::vector<int>> kernel_nodes(Tape& t, const std::vector<int>& leaves) const;
  std::vector<int> conv_stack(Tape& t, std::vector<int> channels,
                              const std::vector<std::vector<int>>& kernels) const;
  int gate_nodes(Tape& t, int pre) const;
  int recursion_nodes(Tape& t, const std::vector<std::vector<int>>& features,
                      const std::vector<int>& leaves) const;
  int head_nodes(Tape& t, int feat, const std::vector<int>& leaves) const;
  Built build_spd(Tape& t, const PreparedSample& sample) const;
  Built build_euclidean(Tape& t, const PreparedSample& sample) const;

  ModelConfig cfg_;
  std::vector<Param> params_;

  std::vector<std::vector<int>> conv_v_;  // per layer, per (m, c) param id
  std::vector<GruChannelIds> gru_;
  int beta_r_ = -1, beta_z_ = -1, beta_h_ = -1;
  int fc_w_ = -1, fc_b_ = -1, out_w_ = -1, out_b_ = -1;
  std::vector<std::vector<int>> eu_taps_;  // per layer, per tap param id
  std::vector<int> eu_bias_;
  EuGruIds eu_gru_;
};

}  // namespace spdnet
