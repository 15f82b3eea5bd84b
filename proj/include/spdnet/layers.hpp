#pragma once

#include <span>
#include <vector>

#include "spdnet/mat.hpp"
#include "spdnet/mc_spd.hpp"

namespace spdnet {

// Element-wise activations that map SPD matrices to SPD matrices.
enum class ActKind { kExp, kSinh, kCosh };

// Reading of the scalar bias term added inside the recursive layer:
// a nonnegative rank-1 all-ones matrix b*J (default) or b*I.
enum class BiasMode { kAllOnes, kIdentity };

// Per-channel rescale threshold guarding exp/sinh against overflow. A
// channel whose max |entry| exceeds this is multiplied by tau/max|entry|
// before the activation; positive scalar scaling keeps the channel SPD.
inline constexpr double kOverflowCap = 30.0;

// Returns the guard factor (1.0 when no rescale is needed) and bumps the
// overflow counter when it fires.
double overflow_guard_factor(const Mat& a, double cap = kOverflowCap);

double apply_activation(double x, ActKind kind);

// ---------------------------------------------------------------------------
// SPD convolutional layer
// ---------------------------------------------------------------------------

// Kernels parameterized as W = V^T V + eps*I so that every materialized
// kernel is SPD by construction and only V is learned.
struct SpdKernelBank {
  int out_channels = 0;
  int in_channels = 0;
  int kernel_size = 0;
  std::vector<Mat> v;  // out_channels * in_channels entries, row-major by (m, c)
  double epsilon = 1e-4;

  const Mat& v_at(int m, int c) const { return v[std::size_t(m) * in_channels + c]; }
  Mat& v_at(int m, int c) { return v[std::size_t(m) * in_channels + c]; }
};

std::vector<Mat> materialize_kernels(const SpdKernelBank& bank);

// F(m)_{i,j} = sum_c sum_p sum_q W(m,c)_{p,q} X(c)_{i+p,j+q}, stride 1,
// valid only; output channels are symmetrized to absorb rounding drift.
// certify_input runs the eigen certification on x first and rejects a
// non-SPD channel; it is off by default to keep the oracle out of the
// training path.
McSpdTensor spd_conv_forward(const McSpdTensor& x, const SpdKernelBank& bank,
                             bool certify_input = false);

// Same contraction on explicitly supplied kernels. Used by the verification
// suites, including fault injection with doctored kernels.
McSpdTensor spd_conv_with_kernels(const McSpdTensor& x, const std::vector<Mat>& kernels,
                                  int out_channels, int in_channels);

// Element-wise exp/sinh/cosh per channel with the overflow guard.
McSpdTensor spd_activate(const McSpdTensor& x, ActKind kind);

// sigma_g(X) = exp(X) / max(exp(X)): element-wise exp divided by its largest
// entry. Output entries lie in (0, 1] with the max entry exactly 1.
Mat gate_activation(const Mat& x);

// ---------------------------------------------------------------------------
// SPD recursive layer
// ---------------------------------------------------------------------------

struct RecursiveChannelParams {
  Mat w_fr, w_hr, w_fz, w_hz, w_fh;  // input-dim x hidden-dim / hidden x hidden
};

struct RecursiveParams {
  std::vector<RecursiveChannelParams> channels;
  double beta_r = 0.0, beta_z = 0.0, beta_h = 0.0;  // effective bias is beta^2
  double epsilon = 1e-3;
  BiasMode bias_mode = BiasMode::kAllOnes;
  bool check_rank = true;  // eigen-based rank probe; the tape path skips it

  double bias_r() const { return beta_r * beta_r; }
  double bias_z() const { return beta_z * beta_z; }
  double bias_h() const { return beta_h * beta_h; }
  int channel_count() const { return int(channels.size()); }
  int input_dim() const { return channels.empty() ? 0 : channels.front().w_fr.rows(); }
  int hidden_dim() const { return channels.empty() ? 0 : channels.front().w_fr.cols(); }
};

struct RecursiveState {
  McSpdTensor h;
  McSpdTensor r, z;  // gates of the step that produced h

  static RecursiveState initial(int channel_count, int hidden_dim) {
    RecursiveState s;
    s.h = McSpdTensor::zeros(channel_count, hidden_dim);
    return s;
  }
};

// One step of the manifold-preserved recursion:
//   R_t = sigma_g(W_fr^T F_t W_fr + W_hr^T H_{t-1} W_hr + b_r + eps*I)
//   Z_t = sigma_g(W_fz^T F_t W_fz + W_hz^T H_{t-1} W_hz + b_z + eps*I)
//   H~_t = sinh(W_fh^T F_t W_fh + H_{t-1} o R_t + b_h + eps*I)
//   H_t = Z_t o H_{t-1} + H~_t
RecursiveState spd_gru_step(const McSpdTensor& f_t, const RecursiveState& prev,
                            const RecursiveParams& p);

// Folds spd_gru_step over the sequence from the zero initial state. When
// trajectory is non-null every intermediate H_t is appended to it.
RecursiveState spd_gru_rollout(const std::vector<McSpdTensor>& seq, const RecursiveParams& p,
                               std::vector<McSpdTensor>* trajectory = nullptr);

// ---------------------------------------------------------------------------
// Diagonalizing layer and head
// ---------------------------------------------------------------------------

// Element-wise exp per channel, flattened row-major and concatenated across
// channels. Conceptually the diagonal of a C*D^2 x C*D^2 diagonal SPD matrix;
// only the diagonal is stored. All entries strictly positive.
std::vector<double> diagonalize_forward(const McSpdTensor& z);

// sqrt(sum_i (log d1_i - log d2_i)^2): the log-Euclidean distance specialized
// to diagonal SPD matrices, no eigendecomposition involved.
double diag_log_euclidean_distance(std::span<const double> d1, std::span<const double> d2);

struct HeadParams {
  Mat fc_weight;   // feature-length x hidden-units
  Mat fc_bias;     // 1 x hidden-units
  Mat out_weight;  // hidden-units x classes
  Mat out_bias;    // 1 x classes
};

std::vector<double> softmax(std::span<const double> logits);

// fc -> tanh -> linear -> softmax.
std::vector<double> head_forward(std::span<const double> feat, const HeadParams& h);

// E = -sum_j log P(y_j | X_j), summed over the batch. Probabilities below
// 1e-15 at the true label are clamped, with the event counted.
double cross_entropy_loss(const std::vector<std::vector<double>>& probs,
                          const std::vector<int>& labels);

}  // namespace spdnet
