#include "spdnet/model.hpp"

#include <cmath>
#include <stdexcept>

namespace spdnet {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

Mat uniform_mat(int rows, int cols, double limit, Rng& rng) {
  Mat m(rows, cols);
  for (int i = 0; i < m.size(); ++i) m[i] = rng.uniform(-limit, limit);
  return m;
}

}  // namespace

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::kNone: return "none";
    case Ablation::kNoConv: return "no-conv";
    case Ablation::kNoRecursive: return "no-recursive";
    case Ablation::kEuclidean: return "euclidean";
  }
  return "none";
}

Ablation ablation_from_string(const std::string& s) {
  if (s == "none") return Ablation::kNone;
  if (s == "no-conv") return Ablation::kNoConv;
  if (s == "no-recursive") return Ablation::kNoRecursive;
  if (s == "euclidean") return Ablation::kEuclidean;
  throw std::invalid_argument("unknown ablation '" + s + "'");
}

int ModelConfig::conv_output_dim() const {
  if (!uses_conv()) return input_dim;
  int d = input_dim;
  for (const ConvSpec& c : conv) d = d - c.kernel_size + 1;
  return d;
}

int ModelConfig::conv_output_channels() const {
  if (!uses_conv() || conv.empty()) return 1;
  return conv.back().out_channels;
}

int ModelConfig::hidden_channels() const { return conv_output_channels(); }

int ModelConfig::feature_length() const {
  switch (ablation) {
    case Ablation::kNone:
      return hidden_channels() * hidden_dim * hidden_dim;
    case Ablation::kNoConv:
      return hidden_dim * hidden_dim;
    case Ablation::kNoRecursive:
      return subclips * conv_output_channels() * conv_output_dim() * conv_output_dim();
    case Ablation::kEuclidean:
      return eu_hidden;
  }
  return 0;
}

void ModelConfig::validate() const {
  require(input_dim >= 1, "config: input_dim must be >= 1");
  require(classes >= 2, "config: need at least 2 classes");
  require(subclips >= 1, "config: subclips must be >= 1");
  require(fc_units >= 1, "config: fc_units must be >= 1");
  require(kernel_epsilon > 0.0 && gru_epsilon > 0.0, "config: epsilon must be positive");
  if (uses_conv()) {
    require(!conv.empty(), "config: conv chain empty");
    int d = input_dim;
    int ch = 1;
    for (std::size_t i = 0; i < conv.size(); ++i) {
      const ConvSpec& c = conv[i];
      require(c.in_channels == ch, "config: conv layer " + std::to_string(i) +
                                       " expects " + std::to_string(c.in_channels) +
                                       " input channels, chain provides " + std::to_string(ch));
      require(c.kernel_size >= 1 && c.kernel_size <= d,
              "config: conv layer " + std::to_string(i) + " kernel " +
                  std::to_string(c.kernel_size) + " does not fit dim " + std::to_string(d));
      require(c.out_channels >= 1, "config: conv layer needs output channels");
      d = d - c.kernel_size + 1;
      ch = c.out_channels;
    }
    require(d >= 1, "config: conv chain collapses below 1x1");
  }
  if (uses_recursion()) require(hidden_dim >= 1, "config: hidden_dim must be >= 1");
  if (ablation == Ablation::kEuclidean) {
    require(eu_channels >= 1 && eu_hidden >= 1, "config: euclidean sizes must be positive");
    require(subclips - 2 * (eu_kernel - 1) >= 1,
            "config: euclidean conv kernels do not fit " + std::to_string(subclips) +
                " subclips");
  }
}

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  init_params();
}

int Model::add_param(const std::string& name, Mat value) {
  params_.push_back({name, std::move(value)});
  return int(params_.size()) - 1;
}

int Model::find_param(const std::string& name) const {
  for (int i = 0; i < int(params_.size()); ++i)
    if (params_[i].name == name) return i;
  return -1;
}

void Model::init_params() {
  params_.clear();
  conv_v_.clear();
  gru_.clear();
  eu_taps_.clear();
  eu_bias_.clear();
  Rng rng(cfg_.seed);

  if (cfg_.uses_conv()) {
    for (std::size_t l = 0; l < cfg_.conv.size(); ++l) {
      const ConvSpec& c = cfg_.conv[l];
      const double limit = 1.0 / (c.kernel_size * std::sqrt(double(c.in_channels)));
      std::vector<int> ids;
      for (int m = 0; m < c.out_channels; ++m)
        for (int in = 0; in < c.in_channels; ++in)
          ids.push_back(add_param("conv" + std::to_string(l) + ".v." + std::to_string(m) +
                                      "." + std::to_string(in),
                                  uniform_mat(c.kernel_size, c.kernel_size, limit, rng)));
      conv_v_.push_back(std::move(ids));
    }
  }

  if (cfg_.uses_recursion()) {
    const int d_in = cfg_.conv_output_dim();
    const int d_h = cfg_.hidden_dim;
    const double f_limit = 1.0 / std::sqrt(double(d_in) * d_h);
    const double h_limit = 1.0 / d_h;
    for (int c = 0; c < cfg_.hidden_channels(); ++c) {
      const std::string p = "gru." + std::to_string(c) + ".";
      GruChannelIds ids;
      ids.fr = add_param(p + "fr", uniform_mat(d_in, d_h, f_limit, rng));
      ids.hr = add_param(p + "hr", uniform_mat(d_h, d_h, h_limit, rng));
      ids.fz = add_param(p + "fz", uniform_mat(d_in, d_h, f_limit, rng));
      ids.hz = add_param(p + "hz", uniform_mat(d_h, d_h, h_limit, rng));
      ids.fh = add_param(p + "fh", uniform_mat(d_in, d_h, f_limit, rng));
      gru_.push_back(ids);
    }
    beta_r_ = add_param("gru.beta_r", Mat(1, 1, 0.3));
    beta_z_ = add_param("gru.beta_z", Mat(1, 1, 0.3));
    beta_h_ = add_param("gru.beta_h", Mat(1, 1, 0.3));
  }

  if (cfg_.ablation == Ablation::kEuclidean) {
    const int feat = 3 * cfg_.input_dim;
    int in_dim = feat;
    for (int l = 0; l < 2; ++l) {
      const double limit = 1.0 / std::sqrt(double(cfg_.eu_kernel) * in_dim);
      std::vector<int> taps;
      for (int k = 0; k < cfg_.eu_kernel; ++k)
        taps.push_back(add_param("euconv" + std::to_string(l) + ".tap" + std::to_string(k),
                                 uniform_mat(in_dim, cfg_.eu_channels, limit, rng)));
      eu_taps_.push_back(std::move(taps));
      eu_bias_.push_back(add_param("euconv" + std::to_string(l) + ".bias",
                                   Mat(1, cfg_.eu_channels)));
      in_dim = cfg_.eu_channels;
    }
    const int h = cfg_.eu_hidden;
    const double wl = 1.0 / std::sqrt(double(cfg_.eu_channels + h));
    auto gate = [&](const char* n, int& w, int& u, int& b) {
      w = add_param(std::string("egru.w") + n, uniform_mat(cfg_.eu_channels, h, wl, rng));
      u = add_param(std::string("egru.u") + n, uniform_mat(h, h, wl, rng));
      b = add_param(std::string("egru.b") + n, Mat(1, h));
    };
    gate("z", eu_gru_.wz, eu_gru_.uz, eu_gru_.bz);
    gate("r", eu_gru_.wr, eu_gru_.ur, eu_gru_.br);
    gate("h", eu_gru_.wh, eu_gru_.uh, eu_gru_.bh);
  }

  const int len = cfg_.feature_length();
  fc_w_ = add_param("fc.weight", uniform_mat(len, cfg_.fc_units, 1.0 / std::sqrt(double(len)), rng));
  fc_b_ = add_param("fc.bias", Mat(1, cfg_.fc_units));
  out_w_ = add_param("out.weight",
                     uniform_mat(cfg_.fc_units, cfg_.classes,
                                 1.0 / std::sqrt(double(cfg_.fc_units)), rng));
  out_b_ = add_param("out.bias", Mat(1, cfg_.classes));
}

std::vector<Mat> Model::zero_grads() const {
  std::vector<Mat> g;
  g.reserve(params_.size());
  for (const Param& p : params_) g.emplace_back(p.value.rows(), p.value.cols());
  return g;
}

std::vector<std::vector<int>> Model::kernel_nodes(Tape& t, const std::vector<int>& leaves) const {
  std::vector<std::vector<int>> out;
  const int eps = t.leaf(Mat(1, 1, cfg_.kernel_epsilon));
  for (std::size_t l = 0; l < conv_v_.size(); ++l) {
    std::vector<int> layer;
    for (int id : conv_v_[l]) {
      const int v = leaves[id];
      layer.push_back(t.add_scalar_identity(t.matmul(t.transpose(v), v), eps));
    }
    out.push_back(std::move(layer));
  }
  return out;
}

std::vector<int> Model::conv_stack(Tape& t, std::vector<int> channels,
                                   const std::vector<std::vector<int>>& kernels) const {
  for (std::size_t l = 0; l < cfg_.conv.size(); ++l) {
    const ConvSpec& spec = cfg_.conv[l];
    std::vector<int> next;
    for (int m = 0; m < spec.out_channels; ++m) {
      int acc = t.conv(channels[0], kernels[l][std::size_t(m) * spec.in_channels]);
      for (int c = 1; c < spec.in_channels; ++c)
        acc = t.add(acc, t.conv(channels[c], kernels[l][std::size_t(m) * spec.in_channels + c]));
      acc = t.symmetrize(acc);
      const int capped = t.cap_rescale(acc, kOverflowCap);
      switch (cfg_.conv_activation) {
        case ActKind::kExp: next.push_back(t.ew_exp(capped)); break;
        case ActKind::kSinh: next.push_back(t.ew_sinh(capped)); break;
        case ActKind::kCosh: next.push_back(t.ew_cosh(capped)); break;
      }
    }
    channels = std::move(next);
  }
  return channels;
}

int Model::gate_nodes(Tape& t, int pre) const {
  return t.div_by_max(t.ew_exp(t.cap_rescale(pre, kOverflowCap)));
}

int Model::recursion_nodes(Tape& t, const std::vector<std::vector<int>>& features,
                           const std::vector<int>& leaves) const {
  auto congr = [&](int w, int x) { return t.matmul(t.matmul(t.transpose(w), x), w); };
  const int eps = t.leaf(Mat(1, 1, cfg_.gru_epsilon));
  const int b_r = t.ew_square(leaves[beta_r_]);
  const int b_z = t.ew_square(leaves[beta_z_]);
  const int b_h = t.ew_square(leaves[beta_h_]);
  auto add_bias = [&](int node, int bias) {
    const int with_b = cfg_.gru_bias_mode == BiasMode::kAllOnes
                           ? t.add_scalar_all_ones(node, bias)
                           : t.add_scalar_identity(node, bias);
    return t.add_scalar_identity(with_b, eps);
  };

  const int channels = cfg_.hidden_channels();
  std::vector<int> h(channels);
  for (int c = 0; c < channels; ++c)
    h[c] = t.leaf(Mat(cfg_.hidden_dim, cfg_.hidden_dim));

  for (const std::vector<int>& f_t : features) {
    for (int c = 0; c < channels; ++c) {
      const GruChannelIds& w = gru_[c];
      const int f = f_t[c];
      int a_r = t.symmetrize(t.add(congr(leaves[w.fr], f), congr(leaves[w.hr], h[c])));
      const int r = gate_nodes(t, add_bias(a_r, b_r));
      int a_z = t.symmetrize(t.add(congr(leaves[w.fz], f), congr(leaves[w.hz], h[c])));
      const int z = gate_nodes(t, add_bias(a_z, b_z));
      int a_h = t.symmetrize(t.add(congr(leaves[w.fh], f), t.hadamard(h[c], r)));
      const int cand = t.ew_sinh(t.cap_rescale(add_bias(a_h, b_h), kOverflowCap));
      h[c] = t.symmetrize(t.add(t.hadamard(z, h[c]), cand));
    }
  }

  std::vector<int> diag;
  diag.reserve(channels);
  for (int c = 0; c < channels; ++c)
    diag.push_back(t.ew_exp(t.cap_rescale(h[c], kOverflowCap)));
  return t.concat(diag);
}

int Model::head_nodes(Tape& t, int feat, const std::vector<int>& leaves) const {
  const int hidden = t.ew_tanh(t.add(t.matmul(feat, leaves[fc_w_]), leaves[fc_b_]));
  return t.add(t.matmul(hidden, leaves[out_w_]), leaves[out_b_]);
}

Model::Built Model::build_spd(Tape& t, const PreparedSample& sample) const {
  require(int(sample.spd.descriptors.size()) == cfg_.subclips,
          "model: sample has " + std::to_string(sample.spd.descriptors.size()) +
              " descriptors, config expects " + std::to_string(cfg_.subclips));

  std::vector<int> leaves(params_.size());
  for (int i = 0; i < int(params_.size()); ++i) leaves[i] = t.leaf(params_[i].value, i);
  const auto kernels = cfg_.uses_conv() ? kernel_nodes(t, leaves)
                                        : std::vector<std::vector<int>>{};

  std::vector<std::vector<int>> features;
  features.reserve(cfg_.subclips);
  for (const McSpdTensor& desc : sample.spd.descriptors) {
    require(desc.dim() == cfg_.input_dim,
            "model: descriptor dim " + std::to_string(desc.dim()) +
                " does not match input_dim " + std::to_string(cfg_.input_dim));
    std::vector<int> channels;
    for (const Mat& ch : desc.channels) channels.push_back(t.leaf(ch));
    if (cfg_.uses_conv()) channels = conv_stack(t, std::move(channels), kernels);
    features.push_back(std::move(channels));
  }

  int feat;
  if (cfg_.uses_recursion()) {
    feat = recursion_nodes(t, features, leaves);
  } else {
    std::vector<int> diag;
    for (const std::vector<int>& f_t : features)
      for (int ch : f_t) diag.push_back(t.ew_exp(t.cap_rescale(ch, kOverflowCap)));
    feat = t.concat(diag);
  }

  Built b;
  const int logits = head_nodes(t, feat, leaves);
  b.softmax = t.softmax_ce(logits, sample.label);
  b.loss = b.softmax;
  return b;
}

Model::Built Model::build_euclidean(Tape& t, const PreparedSample& sample) const {
  require(int(sample.frames.size()) == cfg_.subclips,
          "model: sample has " + std::to_string(sample.frames.size()) +
              " frames, config expects " + std::to_string(cfg_.subclips));

  std::vector<int> leaves(params_.size());
  for (int i = 0; i < int(params_.size()); ++i) leaves[i] = t.leaf(params_[i].value, i);

  std::vector<int> steps;
  steps.reserve(sample.frames.size());
  for (const auto& frame : sample.frames) {
    require(int(frame.size()) == 3 * cfg_.input_dim, "model: frame length mismatch");
    Mat row(1, int(frame.size()));
    for (std::size_t i = 0; i < frame.size(); ++i) row[int(i)] = frame[i];
    steps.push_back(t.leaf(std::move(row)));
  }

  for (int l = 0; l < 2; ++l) {
    std::vector<int> next;
    const int out_steps = int(steps.size()) - cfg_.eu_kernel + 1;
    for (int s = 0; s < out_steps; ++s) {
      int acc = t.matmul(steps[s], leaves[eu_taps_[l][0]]);
      for (int k = 1; k < cfg_.eu_kernel; ++k)
        acc = t.add(acc, t.matmul(steps[s + k], leaves[eu_taps_[l][k]]));
      next.push_back(t.ew_tanh(t.add(acc, leaves[eu_bias_[l]])));
    }
    steps = std::move(next);
  }

  const int ones = t.leaf(Mat(1, cfg_.eu_hidden, 1.0));
  int h = t.leaf(Mat(1, cfg_.eu_hidden));
  for (int x : steps) {
    const int z = t.ew_sigmoid(t.add(
        t.add(t.matmul(x, leaves[eu_gru_.wz]), t.matmul(h, leaves[eu_gru_.uz])),
        leaves[eu_gru_.bz]));
    const int r = t.ew_sigmoid(t.add(
        t.add(t.matmul(x, leaves[eu_gru_.wr]), t.matmul(h, leaves[eu_gru_.ur])),
        leaves[eu_gru_.br]));
    const int cand = t.ew_tanh(t.add(
        t.add(t.matmul(x, leaves[eu_gru_.wh]), t.matmul(t.hadamard(r, h), leaves[eu_gru_.uh])),
        leaves[eu_gru_.bh]));
    const int keep = t.add(ones, t.scale(z, -1.0));
    h = t.add(t.hadamard(keep, h), t.hadamard(z, cand));
  }

  Built b;
  const int logits = head_nodes(t, h, leaves);
  b.softmax = t.softmax_ce(logits, sample.label);
  b.loss = b.softmax;
  return b;
}

Model::Built Model::build(Tape& tape, const PreparedSample& sample) const {
  require(sample.label >= 0 && sample.label < cfg_.classes,
          "model: label " + std::to_string(sample.label) + " out of range for " +
              std::to_string(cfg_.classes) + " classes");
  if (cfg_.ablation == Ablation::kEuclidean) return build_euclidean(tape, sample);
  return build_spd(tape, sample);
}

std::vector<double> Model::predict_probs(const PreparedSample& sample) const {
  PreparedSample s = sample;
  s.label = 0;  // probabilities do not depend on the target
  Tape t;
  const Built b = build(t, s);
  return t.probs(b.softmax);
}

int Model::predict(const PreparedSample& sample) const {
  const std::vector<double> p = predict_probs(sample);
  int best = 0;
  for (int i = 1; i < int(p.size()); ++i)
    if (p[i] > p[best]) best = i;
  return best;
}

}  // namespace spdnet
