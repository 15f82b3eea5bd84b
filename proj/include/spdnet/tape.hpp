#pragma once

#include <vector>

#include "spdnet/mat.hpp"

namespace spdnet {

// Reverse-mode differentiation tape. Forward calls append nodes in
// execution order; backward walks them in reverse and fills adjoints.
// Construction enforces the DAG property (inputs must already exist), so a
// cycle is rejected at the point it would be created.
class Tape {
 public:
  enum class Op {
    kLeaf,
    kAdd,
    kScale,
    kTranspose,
    kMatMul,
    kHadamard,
    kSymmetrize,
    kExp,
    kSinh,
    kCosh,
    kTanh,
    kSigmoid,
    kSquare,
    kDivByMax,
    kCapRescale,
    kConv,
    kAddScalarAllOnes,
    kAddScalarIdentity,
    kSum,
    kConcat,
    kSoftmaxCe,
  };

  // param_id >= 0 marks a trainable leaf; gradients accumulate by that id.
  int leaf(Mat value, int param_id = -1);

  int add(int a, int b);
  int scale(int a, double c);
  int transpose(int a);
  int matmul(int a, int b);
  int hadamard(int a, int b);
  int symmetrize(int a);

  int ew_exp(int a);
  int ew_sinh(int a);
  int ew_cosh(int a);
  int ew_tanh(int a);
  int ew_sigmoid(int a);
  int ew_square(int a);

  // y = x / max_entry(x); gradient routes through the argmax entry,
  // ties broken by lowest row-major index. Entries must be positive.
  int div_by_max(int a);

  // y = x * (cap / max|x|) when max|x| > cap, else identity.
  int cap_rescale(int a, double cap);

  // y = x * f for externally chosen constant f (no gradient through f).
  int conv(int x, int w);

  int add_scalar_all_ones(int a, int s);
  int add_scalar_identity(int a, int s);

  int sum(int a);

  // Row-major flatten of each input, concatenated into a 1 x N row.
  int concat(const std::vector<int>& parts);

  // Fused softmax + cross-entropy against one label; value is the scalar
  // loss, probabilities are retained for metrics.
  int softmax_ce(int logits, int label);

  void backward(int loss_node);

  const Mat& value(int node) const { return nodes_[check(node)].value; }
  const Mat& adjoint(int node) const;
  const std::vector<double>& probs(int softmax_node) const;

  // grads[param_id] += adjoint of every leaf bound to that id. Parameters
  // never touched by the loss keep their zero gradient.
  void accumulate_param_grads(std::vector<Mat>& grads) const;

  int node_count() const { return int(nodes_.size()); }

 private:
  struct Node {
    Op op;
    int a = -1, b = -1;
    std::vector<int> inputs;  // kConcat only
    Mat value;
    double scalar = 0.0;  // kScale factor, kCapRescale factor
    int aux = -1;         // argmax flat index / label
    int param = -1;
    std::vector<double> probs;  // kSoftmaxCe only
  };

  int push(Node n);
  int check(int node) const;
  int check_input(int node) const;

  std::vector<Node> nodes_;
  std::vector<Mat> adjoints_;
  bool has_adjoints_ = false;
};

}  // namespace spdnet
