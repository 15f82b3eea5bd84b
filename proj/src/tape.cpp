#include "spdnet/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spdnet {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

int Tape::check(int node) const {
  require(node >= 0 && node < int(nodes_.size()),
          "tape: node id " + std::to_string(node) + " out of range");
  return node;
}

int Tape::check_input(int node) const {
  // Inputs must precede the node being built; a forward reference would
  // make the record cyclic.
  require(node >= 0 && node < int(nodes_.size()),
          "tape: cycle detected, input " + std::to_string(node) +
              " does not precede node " + std::to_string(nodes_.size()));
  return node;
}

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  has_adjoints_ = false;
  return int(nodes_.size()) - 1;
}

int Tape::leaf(Mat value, int param_id) {
  Node n{Op::kLeaf};
  n.value = std::move(value);
  n.param = param_id;
  return push(std::move(n));
}

int Tape::add(int a, int b) {
  Node n{Op::kAdd};
  n.a = check_input(a);
  n.b = check_input(b);
  n.value = spdnet::add(nodes_[a].value, nodes_[b].value);
  return push(std::move(n));
}

int Tape::scale(int a, double c) {
  Node n{Op::kScale};
  n.a = check_input(a);
  n.scalar = c;
  n.value = spdnet::scale(nodes_[a].value, c);
  return push(std::move(n));
}

int Tape::transpose(int a) {
  Node n{Op::kTranspose};
  n.a = check_input(a);
  n.value = spdnet::transpose(nodes_[a].value);
  return push(std::move(n));
}

int Tape::matmul(int a, int b) {
  Node n{Op::kMatMul};
  n.a = check_input(a);
  n.b = check_input(b);
  n.value = spdnet::matmul(nodes_[a].value, nodes_[b].value);
  return push(std::move(n));
}

int Tape::hadamard(int a, int b) {
  Node n{Op::kHadamard};
  n.a = check_input(a);
  n.b = check_input(b);
  n.value = spdnet::hadamard(nodes_[a].value, nodes_[b].value);
  return push(std::move(n));
}

int Tape::symmetrize(int a) {
  Node n{Op::kSymmetrize};
  n.a = check_input(a);
  n.value = spdnet::symmetrize(nodes_[a].value);
  return push(std::move(n));
}

int Tape::ew_exp(int a) {
  Node n{Op::kExp};
  n.a = check_input(a);
  n.value = ew_map(nodes_[a].value, [](double v) { return std::exp(v); });
  return push(std::move(n));
}

int Tape::ew_sinh(int a) {
  Node n{Op::kSinh};
  n.a = check_input(a);
  n.value = ew_map(nodes_[a].value, [](double v) { return std::sinh(v); });
  return push(std::move(n));
}

int Tape::ew_cosh(int a) {
  Node n{Op::kCosh};
  n.a = check_input(a);
  n.value = ew_map(nodes_[a].value, [](double v) { return std::cosh(v); });
  return push(std::move(n));
}

int Tape::ew_tanh(int a) {
  Node n{Op::kTanh};
  n.a = check_input(a);
  n.value = ew_map(nodes_[a].value, [](double v) { return std::tanh(v); });
  return push(std::move(n));
}

int Tape::ew_sigmoid(int a) {
  Node n{Op::kSigmoid};
  n.a = check_input(a);
  n.value = ew_map(nodes_[a].value, [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  return push(std::move(n));
}

int Tape::ew_square(int a) {
  Node n{Op::kSquare};
  n.a = check_input(a);
  n.value = ew_map(nodes_[a].value, [](double v) { return v * v; });
  return push(std::move(n));
}

int Tape::div_by_max(int a) {
  Node n{Op::kDivByMax};
  n.a = check_input(a);
  const Mat& x = nodes_[a].value;
  int best = 0;
  for (int i = 1; i < x.size(); ++i)
    if (x[i] > x[best]) best = i;
  n.aux = best;
  n.value = spdnet::scale(x, 1.0 / x[best]);
  return push(std::move(n));
}

int Tape::cap_rescale(int a, double cap) {
  Node n{Op::kCapRescale};
  n.a = check_input(a);
  const Mat& x = nodes_[a].value;
  int best = 0;
  for (int i = 1; i < x.size(); ++i)
    if (std::fabs(x[i]) > std::fabs(x[best])) best = i;
  const double m = std::fabs(x[best]);
  if (m <= cap) {
    n.scalar = 1.0;
    n.aux = -1;
    n.value = x;
  } else {
    n.scalar = cap / m;
    n.aux = best;
    n.value = spdnet::scale(x, n.scalar);
  }
  return push(std::move(n));
}

int Tape::conv(int x, int w) {
  Node n{Op::kConv};
  n.a = check_input(x);
  n.b = check_input(w);
  n.value = conv2d_valid(nodes_[x].value, nodes_[w].value);
  return push(std::move(n));
}

int Tape::add_scalar_all_ones(int a, int s) {
  Node n{Op::kAddScalarAllOnes};
  n.a = check_input(a);
  n.b = check_input(s);
  require(nodes_[s].value.size() == 1, "add_scalar_all_ones: scalar node must be 1x1");
  const double v = nodes_[s].value[0];
  n.value = ew_map(nodes_[a].value, [&](double u) { return u + v; });
  return push(std::move(n));
}

int Tape::add_scalar_identity(int a, int s) {
  Node n{Op::kAddScalarIdentity};
  n.a = check_input(a);
  n.b = check_input(s);
  require(nodes_[s].value.size() == 1, "add_scalar_identity: scalar node must be 1x1");
  const Mat& x = nodes_[a].value;
  require(x.rows() == x.cols(), "add_scalar_identity: not square " + shape_string(x));
  Mat out = x;
  for (int i = 0; i < out.rows(); ++i) out(i, i) += nodes_[s].value[0];
  n.value = std::move(out);
  return push(std::move(n));
}

int Tape::sum(int a) {
  Node n{Op::kSum};
  n.a = check_input(a);
  n.value = Mat(1, 1, entry_sum(nodes_[a].value));
  return push(std::move(n));
}

int Tape::concat(const std::vector<int>& parts) {
  require(!parts.empty(), "concat: no inputs");
  Node n{Op::kConcat};
  int total = 0;
  for (int p : parts) {
    check_input(p);
    total += nodes_[p].value.size();
  }
  n.inputs = parts;
  Mat out(1, total);
  int at = 0;
  for (int p : parts) {
    const Mat& v = nodes_[p].value;
    for (int i = 0; i < v.size(); ++i) out[at++] = v[i];
  }
  n.value = std::move(out);
  return push(std::move(n));
}

int Tape::softmax_ce(int logits, int label) {
  Node n{Op::kSoftmaxCe};
  n.a = check_input(logits);
  const Mat& l = nodes_[logits].value;
  require(l.rows() == 1, "softmax_ce: logits must be a row vector, got " + shape_string(l));
  require(label >= 0 && label < l.cols(), "softmax_ce: label out of range");
  n.aux = label;
  double m = l[0];
  for (int i = 1; i < l.size(); ++i) m = std::max(m, l[i]);
  double z = 0.0;
  n.probs.resize(l.size());
  for (int i = 0; i < l.size(); ++i) {
    n.probs[i] = std::exp(l[i] - m);
    z += n.probs[i];
  }
  double log_z = std::log(z);
  for (double& p : n.probs) p /= z;
  n.value = Mat(1, 1, -(l[label] - m - log_z));
  return push(std::move(n));
}

const Mat& Tape::adjoint(int node) const {
  require(has_adjoints_, "tape: backward has not run");
  return adjoints_[check(node)];
}

const std::vector<double>& Tape::probs(int softmax_node) const {
  const Node& n = nodes_[check(softmax_node)];
  require(n.op == Op::kSoftmaxCe, "tape: probs requested from a non-softmax node");
  return n.probs;
}

void Tape::backward(int loss_node) {
  check(loss_node);
  require(nodes_[loss_node].value.size() == 1, "backward: loss must be scalar");
  for (int i = 0; i < int(nodes_.size()); ++i) {
    const Node& n = nodes_[i];
    const bool ok = (n.a < i) && (n.b < i);
    require(ok, "backward: cycle detected at node " + std::to_string(i));
    for (int p : n.inputs) require(p < i, "backward: cycle detected at node " + std::to_string(i));
  }

  adjoints_.assign(nodes_.size(), Mat());
  auto adj = [&](int i) -> Mat& {
    if (adjoints_[i].empty())
      adjoints_[i] = Mat(nodes_[i].value.rows(), nodes_[i].value.cols());
    return adjoints_[i];
  };
  adj(loss_node)[0] = 1.0;

  for (int i = loss_node; i >= 0; --i) {
    const Node& n = nodes_[i];
    if (adjoints_[i].empty()) continue;  // not on the path to the loss
    const Mat& g = adjoints_[i];
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kAdd: {
        Mat& ga = adj(n.a);
        Mat& gb = adj(n.b);
        for (int k = 0; k < g.size(); ++k) {
          ga[k] += g[k];
          gb[k] += g[k];
        }
        break;
      }
      case Op::kScale: {
        Mat& ga = adj(n.a);
        for (int k = 0; k < g.size(); ++k) ga[k] += n.scalar * g[k];
        break;
      }
      case Op::kTranspose: {
        Mat& ga = adj(n.a);
        const Mat gt = spdnet::transpose(g);
        for (int k = 0; k < gt.size(); ++k) ga[k] += gt[k];
        break;
      }
      case Op::kMatMul: {
        const Mat& a = nodes_[n.a].value;
        const Mat& b = nodes_[n.b].value;
        const Mat da = spdnet::matmul(g, spdnet::transpose(b));
        const Mat db = spdnet::matmul(spdnet::transpose(a), g);
        Mat& ga = adj(n.a);
        Mat& gb = adj(n.b);
        for (int k = 0; k < da.size(); ++k) ga[k] += da[k];
        for (int k = 0; k < db.size(); ++k) gb[k] += db[k];
        break;
      }
      case Op::kHadamard: {
        const Mat& a = nodes_[n.a].value;
        const Mat& b = nodes_[n.b].value;
        Mat& ga = adj(n.a);
        Mat& gb = adj(n.b);
        for (int k = 0; k < g.size(); ++k) {
          ga[k] += g[k] * b[k];
          gb[k] += g[k] * a[k];
        }
        break;
      }
      case Op::kSymmetrize: {
        Mat& ga = adj(n.a);
        for (int r = 0; r < g.rows(); ++r)
          for (int c = 0; c < g.cols(); ++c) ga(r, c) += 0.5 * (g(r, c) + g(c, r));
        break;
      }
      case Op::kExp: {
        Mat& ga = adj(n.a);
        for (int k = 0; k < g.size(); ++k) ga[k] += g[k] * n.value[k];
        break;
      }
      case Op::kSinh: {
        const Mat& x = nodes_[n.a].value;
        Mat& ga = adj(n.a);
        for (int k = 0; k < g.size(); ++k) ga[k] += g[k] * std::cosh(x[k]);
        break;
      }
      case Op::kCosh: {
        const Mat& x = nodes_[n.a].value;
        Mat& ga = adj(n.a);
        for (int k = 0; k < g.size(); ++k) ga[k] += g[k] * std::sinh(x[k]);
        break;
      }
      case Op::kTanh: {
        Mat& ga = adj(n.a);
        for (int k = 0; k < g.size(); ++k) ga[k] += g[k] * (1.0 - n.value[k] * n.value[k]);
        break;
      }
      case Op::kSigmoid: {
        Mat& ga = adj(n.a);
        for (int k = 0; k < g.size(); ++k)
          ga[k] += g[k] * n.value[k] * (1.0 - n.value[k]);
        break;
      }
      case Op::kSquare: {
        const Mat& x = nodes_[n.a].value;
        Mat& ga = adj(n.a);
        for (int k = 0; k < g.size(); ++k) ga[k] += g[k] * 2.0 * x[k];
        break;
      }
      case Op::kDivByMax: {
        const Mat& x = nodes_[n.a].value;
        const double m = x[n.aux];
        Mat& ga = adj(n.a);
        double dot = 0.0;
        for (int k = 0; k < g.size(); ++k) {
          ga[k] += g[k] / m;
          dot += g[k] * x[k];
        }
        ga[n.aux] -= dot / (m * m);
        break;
      }
      case Op::kCapRescale: {
        const Mat& x = nodes_[n.a].value;
        Mat& ga = adj(n.a);
        if (n.aux < 0) {
          for (int k = 0; k < g.size(); ++k) ga[k] += g[k];
        } else {
          const double f = n.scalar;
          double dot = 0.0;
          for (int k = 0; k < g.size(); ++k) {
            ga[k] += f * g[k];
            dot += g[k] * x[k];
          }
          const double xk = x[n.aux];
          ga[n.aux] += dot * (-(f * std::fabs(xk)) * (xk >= 0.0 ? 1.0 : -1.0) / (xk * xk));
        }
        break;
      }
      case Op::kConv: {
        const Mat& x = nodes_[n.a].value;
        const Mat& w = nodes_[n.b].value;
        Mat& gx = adj(n.a);
        Mat& gw = adj(n.b);
        const int k = w.rows();
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < g.cols(); ++j) {
            const double go = g(i, j);
            if (go == 0.0) continue;
            for (int p = 0; p < k; ++p)
              for (int q = 0; q < k; ++q) {
                gx(i + p, j + q) += w(p, q) * go;
                gw(p, q) += x(i + p, j + q) * go;
              }
          }
        break;
      }
      case Op::kAddScalarAllOnes: {
        Mat& ga = adj(n.a);
        Mat& gs = adj(n.b);
        double s = 0.0;
        for (int k = 0; k < g.size(); ++k) {
          ga[k] += g[k];
          s += g[k];
        }
        gs[0] += s;
        break;
      }
      case Op::kAddScalarIdentity: {
        Mat& ga = adj(n.a);
        Mat& gs = adj(n.b);
        for (int k = 0; k < g.size(); ++k) ga[k] += g[k];
        double tr = 0.0;
        for (int r = 0; r < g.rows(); ++r) tr += g(r, r);
        gs[0] += tr;
        break;
      }
      case Op::kSum: {
        Mat& ga = adj(n.a);
        const double go = g[0];
        for (int k = 0; k < ga.size(); ++k) ga[k] += go;
        break;
      }
      case Op::kConcat: {
        int at = 0;
        for (int p : n.inputs) {
          Mat& gp = adj(p);
          for (int k = 0; k < gp.size(); ++k) gp[k] += g[at++];
        }
        break;
      }
      case Op::kSoftmaxCe: {
        Mat& gl = adj(n.a);
        const double go = g[0];
        for (int k = 0; k < gl.size(); ++k)
          gl[k] += go * (n.probs[k] - (k == n.aux ? 1.0 : 0.0));
        break;
      }
    }
  }
  has_adjoints_ = true;
}

void Tape::accumulate_param_grads(std::vector<Mat>& grads) const {
  require(has_adjoints_, "tape: backward has not run");
  for (int i = 0; i < int(nodes_.size()); ++i) {
    const Node& n = nodes_[i];
    if (n.param < 0) continue;
    require(n.param < int(grads.size()), "tape: parameter id out of range");
    Mat& g = grads[n.param];
    if (g.empty()) g = Mat(n.value.rows(), n.value.cols());
    if (adjoints_[i].empty()) continue;
    for (int k = 0; k < g.size(); ++k) g[k] += adjoints_[i][k];
  }
}

}  // namespace spdnet
