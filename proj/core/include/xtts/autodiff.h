// Copyright 2026 The xtts Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// A small tape-based reverse-mode automatic differentiation engine over
// dense row-major double matrices. Every value in the graph is 2-D; vectors
// are 1 x n rows and scalars are 1 x 1.

#ifndef XTTS_AUTODIFF_H_
#define XTTS_AUTODIFF_H_

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace xtts {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor>;

/// A trainable tensor: value plus accumulated gradient.
struct Parameter {
  std::string name;
  Mat value;
  Mat grad;

  Parameter(std::string n, Mat v)
      : name(std::move(n)), value(std::move(v)), grad(Mat::Zero(value.rows(), value.cols())) {}
  void ZeroGrad() { grad.setZero(value.rows(), value.cols()); }
};

/// Ordered, name-addressable collection of parameters. Addresses are stable.
class ParamSet {
 public:
  Parameter& Add(const std::string& name, Mat value);
  Parameter& Get(const std::string& name);
  const Parameter& Get(const std::string& name) const;
  bool Has(const std::string& name) const;

  std::vector<Parameter*> All();
  std::vector<const Parameter*> All() const;
  size_t size() const { return params_.size(); }

  void ZeroGrad();
  double GradNorm() const;
  bool AllFinite() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

class Tape;

/// Handle to a node on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Mat& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
  bool needs_grad() const;
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Records operations; Backward() runs them in reverse.
///
/// A tape built with grad_enabled = false records values only, which is the
/// mode used for free-running inference. Parameters entered through Frozen()
/// (or through Param() on a no-grad tape) become constants: their gradients
/// are never touched.
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Constant(Mat value);
  /// Leaf bound to `p`; repeated calls on one tape return the same node.
  Var Param(Parameter& p);
  Var Frozen(const Parameter& p) { return Constant(p.value); }

  /// Seeds d(root)/d(root) = 1 and accumulates gradients into leaves.
  void Backward(Var root);

  bool grad_enabled() const { return grad_enabled_; }
  size_t size() const { return nodes_.size(); }
  /// Hash of the sign pattern of every Relu input recorded so far. Two
  /// evaluations of one graph with equal signatures lie on the same linear
  /// piece of every Relu.
  std::uint64_t relu_signature() const { return relu_signature_; }

  // Internal node API used by the op implementations.
  using BackwardFn = std::function<void(Tape&, const Mat& grad_out)>;
  Var Push(Mat value, bool needs_grad, BackwardFn fn);
  const Mat& ValueOf(int id) const { return nodes_[id].value; }
  bool NeedsGrad(int id) const { return nodes_[id].needs_grad; }
  void AccumulateGrad(int id, const Mat& g);
  void FoldReluPattern(const Mat& x);
  template <typename Expr>
  void AccumulateGradExpr(int id, const Expr& g) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool needs_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };
  bool grad_enabled_;
  std::uint64_t relu_signature_ = 0xcbf29ce484222325ULL;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

// ---- Elementwise / linear algebra -------------------------------------

Var MatMul(Var a, Var b);
/// a * b^T
Var MatMulT(Var a, Var b);
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Scale(Var a, double s);
/// Adds a 1 x n row to every row of a (bias / broadcast conditioning).
Var AddRow(Var a, Var row);
/// a + c where c is a constant matrix of the same shape (masks, encodings).
Var AddConst(Var a, const Mat& c);
Var Affine(Var x, Var w, Var b);

Var Relu(Var a);
Var Tanh(Var a);
Var Sigmoid(Var a);
Var Square(Var a);

// ---- Shape -------------------------------------------------------------

Var ConcatCols(std::span<const Var> parts);
Var ConcatRows(std::span<const Var> parts);
Var SliceRows(Var a, Eigen::Index start, Eigen::Index n);
Var SliceCols(Var a, Eigen::Index start, Eigen::Index n);
/// Row lookup into an embedding table.
Var GatherRows(Var table, std::span<const int> ids);
/// Repeats a 1 x n row t times.
Var RepeatRow(Var row, Eigen::Index t);
/// Time splicing for frame-level layers: output row t concatenates input rows
/// t + offsets[k] + shift for every k, where shift = -min(offsets). Only fully
/// supported positions are produced (valid convolution).
Var Splice(Var a, std::span<const int> offsets);

// ---- Reductions / normalisation ---------------------------------------

Var SumAll(Var a);
Var MeanAll(Var a);
/// Column-wise mean over rows, 1 x n.
Var MeanRows(Var a);
/// Row-wise softmax.
Var SoftmaxRows(Var a);
/// Per-row layer normalisation with learned gain and bias (1 x n each).
Var LayerNorm(Var a, Var gain, Var bias, double eps = 1e-5);
/// Statistics pooling: [mean | sqrt(max(var, var_floor))] over rows, 1 x 2n.
Var StatsPool(Var a, double var_floor);
/// Euclidean norm of a - b as a 1 x 1 value. Gradient is defined as zero when
/// a == b.
Var L2Distance(Var a, Var b);

// ---- Losses ------------------------------------------------------------

/// Mean squared error over all entries.
Var MseLoss(Var pred, const Mat& target);
/// Mean per-element binary cross-entropy on logits; entries with target 1 are
/// weighted by pos_weight.
Var BceWithLogits(Var logits, const Mat& target, double pos_weight);
/// Cross-entropy of a 1 x K logit row against class index.
Var CrossEntropy(Var logits, int target);

/// Inverted dropout; identity when rate == 0 or rng == nullptr.
Var Dropout(Var a, double rate, std::mt19937_64* rng);

/// Numerically stable log-softmax of a row vector (no graph).
RowVec LogSoftmax(const RowVec& logits);

}  // namespace xtts

#endif  // XTTS_AUTODIFF_H_
