#include "spdnet/layers.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "spdnet/diagnostics.hpp"
#include "spdnet/sym_eig.hpp"

namespace spdnet {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void require_finite(const Mat& a, const char* where) {
  if (!all_finite(a)) throw std::runtime_error(std::string(where) + ": non-finite entries");
}

Mat add_bias_terms(Mat a, double bias, double epsilon, BiasMode mode) {
  if (mode == BiasMode::kAllOnes) {
    for (int i = 0; i < a.size(); ++i) a[i] += bias;
  } else {
    for (int i = 0; i < a.rows(); ++i) a(i, i) += bias;
  }
  for (int i = 0; i < a.rows(); ++i) a(i, i) += epsilon;
  return a;
}

}  // namespace

double overflow_guard_factor(const Mat& a, double cap) {
  const double m = max_abs_entry(a);
  if (m <= cap) return 1.0;
  diag::counters().overflow_rescales++;
  return cap / m;
}

double apply_activation(double x, ActKind kind) {
  switch (kind) {
    case ActKind::kExp: return std::exp(x);
    case ActKind::kSinh: return std::sinh(x);
    case ActKind::kCosh: return std::cosh(x);
  }
  return 0.0;
}

std::vector<Mat> materialize_kernels(const SpdKernelBank& bank) {
  require(bank.epsilon > 0.0, "materialize_kernels: epsilon must be positive");
  require(int(bank.v.size()) == bank.out_channels * bank.in_channels,
          "materialize_kernels: V count does not match channel counts");
  std::vector<Mat> out;
  out.reserve(bank.v.size());
  for (const Mat& v : bank.v) {
    require(v.rows() == bank.kernel_size && v.cols() == bank.kernel_size,
            "materialize_kernels: V shape " + shape_string(v) + " != kernel size");
    Mat w = matmul(transpose(v), v);
    for (int i = 0; i < w.rows(); ++i) w(i, i) += bank.epsilon;
    out.push_back(std::move(w));
  }
  return out;
}

McSpdTensor spd_conv_with_kernels(const McSpdTensor& x, const std::vector<Mat>& kernels,
                                  int out_channels, int in_channels) {
  require(x.channel_count() == in_channels, "spd_conv: input has " +
                                                std::to_string(x.channel_count()) +
                                                " channels, kernels expect " +
                                                std::to_string(in_channels));
  require(int(kernels.size()) == out_channels * in_channels,
          "spd_conv: kernel count mismatch");
  const int d = x.dim();
  const int k = kernels.front().rows();
  require(d >= k, "spd_conv: input dim " + std::to_string(d) + " smaller than kernel " +
                      std::to_string(k));

  McSpdTensor out;
  out.channels.reserve(out_channels);
  for (int m = 0; m < out_channels; ++m) {
    Mat acc(d - k + 1, d - k + 1);
    for (int c = 0; c < in_channels; ++c)
      acc = add(acc, conv2d_valid(x.channel(c), kernels[std::size_t(m) * in_channels + c]));
    acc = symmetrize(acc);
    require_finite(acc, "spd_conv");
    out.channels.push_back(std::move(acc));
  }
  return out;
}

McSpdTensor spd_conv_forward(const McSpdTensor& x, const SpdKernelBank& bank,
                             bool certify_input) {
  if (certify_input) {
    for (int c = 0; c < x.channel_count(); ++c) {
      const Mat& ch = x.channel(c);
      if (!is_symmetric(ch, 1e-10))
        throw std::invalid_argument("spd_conv: channel " + std::to_string(c) +
                                    " is not symmetric");
      const double floor = -1e-10 * trace(ch) / std::max(1, ch.rows());
      if (min_eigenvalue(ch) <= floor)
        throw std::invalid_argument("spd_conv: channel " + std::to_string(c) +
                                    " is not positive definite");
    }
  }
  return spd_conv_with_kernels(x, materialize_kernels(bank), bank.out_channels,
                               bank.in_channels);
}

McSpdTensor spd_activate(const McSpdTensor& x, ActKind kind) {
  McSpdTensor out;
  out.channels.reserve(x.channels.size());
  for (const Mat& ch : x.channels) {
    const double f = overflow_guard_factor(ch);
    Mat r = ew_map(ch, [&](double v) { return apply_activation(f * v, kind); });
    require_finite(r, "spd_activate");
    out.channels.push_back(std::move(r));
  }
  return out;
}

Mat gate_activation(const Mat& x) {
  require(x.rows() == x.cols(), "gate_activation: not square " + shape_string(x));
  const double f = overflow_guard_factor(x);
  Mat e = ew_map(x, [&](double v) { return std::exp(f * v); });
  const double m = max_entry(e);
  for (int i = 0; i < e.size(); ++i) e[i] /= m;
  return e;
}

RecursiveState spd_gru_step(const McSpdTensor& f_t, const RecursiveState& prev,
                            const RecursiveParams& p) {
  require(f_t.channel_count() == p.channel_count(),
          "spd_gru_step: feature has " + std::to_string(f_t.channel_count()) +
              " channels, params have " + std::to_string(p.channel_count()));
  require(prev.h.channel_count() == p.channel_count(),
          "spd_gru_step: state channel count mismatch");

  const double b_r = p.bias_r(), b_z = p.bias_z(), b_h = p.bias_h();
  RecursiveState next;
  next.h.channels.reserve(p.channel_count());
  next.r.channels.reserve(p.channel_count());
  next.z.channels.reserve(p.channel_count());

  for (int c = 0; c < p.channel_count(); ++c) {
    const RecursiveChannelParams& w = p.channels[c];
    const Mat& f = f_t.channel(c);
    const Mat& h_prev = prev.h.channel(c);
    require(f.rows() == w.w_fr.rows(), "spd_gru_step: channel " + std::to_string(c) +
                                           " feature dim " + shape_string(f) +
                                           " vs projection " + shape_string(w.w_fr));

    if (p.check_rank) {
      for (const Mat* proj : {&w.w_fr, &w.w_hr, &w.w_fz, &w.w_hz, &w.w_fh}) {
        if (min_eigenvalue(matmul(transpose(*proj), *proj)) < 1e-12) {
          diag::counters().rank_warnings++;
          break;  // epsilon*I still guarantees positive definiteness
        }
      }
    }

    Mat a_r = symmetrize(add(bilinear_project(w.w_fr, f), bilinear_project(w.w_hr, h_prev)));
    Mat r = gate_activation(add_bias_terms(std::move(a_r), b_r, p.epsilon, p.bias_mode));

    Mat a_z = symmetrize(add(bilinear_project(w.w_fz, f), bilinear_project(w.w_hz, h_prev)));
    Mat z = gate_activation(add_bias_terms(std::move(a_z), b_z, p.epsilon, p.bias_mode));

    Mat a_h = symmetrize(add(bilinear_project(w.w_fh, f), hadamard(h_prev, r)));
    a_h = add_bias_terms(std::move(a_h), b_h, p.epsilon, p.bias_mode);
    const double guard = overflow_guard_factor(a_h);
    Mat h_cand = ew_map(a_h, [&](double v) { return std::sinh(guard * v); });

    Mat h = symmetrize(add(hadamard(z, h_prev), h_cand));
    require_finite(h, "spd_gru_step");

    next.r.channels.push_back(std::move(r));
    next.z.channels.push_back(std::move(z));
    next.h.channels.push_back(std::move(h));
  }
  return next;
}

RecursiveState spd_gru_rollout(const std::vector<McSpdTensor>& seq, const RecursiveParams& p,
                               std::vector<McSpdTensor>* trajectory) {
  require(!seq.empty(), "spd_gru_rollout: empty sequence");
  RecursiveState state = RecursiveState::initial(p.channel_count(), p.hidden_dim());
  for (const McSpdTensor& f_t : seq) {
    state = spd_gru_step(f_t, state, p);
    if (trajectory) trajectory->push_back(state.h);
  }
  return state;
}

std::vector<double> diagonalize_forward(const McSpdTensor& z) {
  std::vector<double> out;
  out.reserve(std::size_t(z.channel_count()) * z.dim() * z.dim());
  for (const Mat& ch : z.channels) {
    const double f = overflow_guard_factor(ch);
    for (int i = 0; i < ch.size(); ++i) out.push_back(std::exp(f * ch[i]));
  }
  return out;
}

double diag_log_euclidean_distance(std::span<const double> d1, std::span<const double> d2) {
  require(d1.size() == d2.size(), "diag_log_euclidean_distance: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < d1.size(); ++i) {
    require(d1[i] > 0.0 && d2[i] > 0.0,
            "diag_log_euclidean_distance: non-positive entry at index " + std::to_string(i));
    const double d = std::log(d1[i]) - std::log(d2[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<double> softmax(std::span<const double> logits) {
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

std::vector<double> head_forward(std::span<const double> feat, const HeadParams& h) {
  require(int(feat.size()) == h.fc_weight.rows(),
          "head_forward: feature length " + std::to_string(feat.size()) +
              " does not match fc weight " + shape_string(h.fc_weight));
  const int units = h.fc_weight.cols();
  std::vector<double> hidden(units);
  for (int u = 0; u < units; ++u) {
    double acc = h.fc_bias(0, u);
    for (int i = 0; i < int(feat.size()); ++i) acc += feat[i] * h.fc_weight(i, u);
    hidden[u] = std::tanh(acc);
  }
  require(units == h.out_weight.rows(), "head_forward: fc/out shape mismatch");
  const int classes = h.out_weight.cols();
  std::vector<double> logits(classes);
  for (int c = 0; c < classes; ++c) {
    double acc = h.out_bias(0, c);
    for (int u = 0; u < units; ++u) acc += hidden[u] * h.out_weight(u, c);
    logits[c] = acc;
  }
  return softmax(logits);
}

double cross_entropy_loss(const std::vector<std::vector<double>>& probs,
                          const std::vector<int>& labels) {
  require(probs.size() == labels.size(), "cross_entropy_loss: batch size mismatch");
  double loss = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    const auto& row = probs[j];
    double row_sum = 0.0;
    for (double v : row) row_sum += v;
    require(std::fabs(row_sum - 1.0) <= 1e-9,
            "cross_entropy_loss: row " + std::to_string(j) + " does not sum to 1");
    require(labels[j] >= 0 && labels[j] < int(row.size()),
            "cross_entropy_loss: label out of range at row " + std::to_string(j));
    double p = row[labels[j]];
    if (p < 1e-15) {
      diag::counters().probability_clamps++;
      p = 1e-15;
    }
    loss -= std::log(p);
  }
  return loss;
}

}  // namespace spdnet
