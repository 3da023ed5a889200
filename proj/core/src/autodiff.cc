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

#include "xtts/autodiff.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace xtts {

namespace {

void CheckSameTape(Var a, Var b) {
  if (a.tape() != b.tape()) throw std::logic_error("vars live on different tapes");
}

void CheckSameShape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

}  // namespace

// ---- ParamSet ----------------------------------------------------------

Parameter& ParamSet::Add(const std::string& name, Mat value) {
  if (Has(name)) throw std::invalid_argument("duplicate parameter: " + name);
  params_.push_back(std::make_unique<Parameter>(name, std::move(value)));
  return *params_.back();
}

Parameter& ParamSet::Get(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return *p;
  }
  throw std::out_of_range("no parameter named " + name);
}

const Parameter& ParamSet::Get(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return *p;
  }
  throw std::out_of_range("no parameter named " + name);
}

bool ParamSet::Has(const std::string& name) const {
  return std::any_of(params_.begin(), params_.end(),
                     [&](const auto& p) { return p->name == name; });
}

std::vector<Parameter*> ParamSet::All() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParamSet::All() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

void ParamSet::ZeroGrad() {
  for (auto& p : params_) p->ZeroGrad();
}

double ParamSet::GradNorm() const {
  double sq = 0.0;
  for (const auto& p : params_) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

bool ParamSet::AllFinite() const {
  return std::all_of(params_.begin(), params_.end(),
                     [](const auto& p) { return p->value.allFinite(); });
}

// ---- Tape --------------------------------------------------------------

const Mat& Var::value() const { return tape_->ValueOf(id_); }
bool Var::needs_grad() const { return tape_->NeedsGrad(id_); }

Var Tape::Push(Mat value, bool needs_grad, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad && grad_enabled_;
  if (n.needs_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::Constant(Mat value) { return Push(std::move(value), false, nullptr); }

Var Tape::Param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  Var v = Push(p.value, true, nullptr);
  if (grad_enabled_) nodes_[v.id()].param = &p;
  param_nodes_[&p] = v.id();
  return v;
}

void Tape::AccumulateGrad(int id, const Mat& g) { AccumulateGradExpr(id, g); }

void Tape::Backward(Var root) {
  if (root.tape() != this) throw std::logic_error("root on a different tape");
  if (root.rows() != 1 || root.cols() != 1) throw std::invalid_argument("Backward needs a scalar root");
  if (!NeedsGrad(root.id())) return;
  nodes_[root.id()].grad = Mat::Ones(1, 1);
  for (int i = root.id(); i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.param != nullptr) n.param->grad += n.grad;
    n.grad.resize(0, 0);
  }
}

// ---- Elementwise / linear algebra -------------------------------------

Var MatMul(Var a, Var b) {
  CheckSameTape(a, b);
  if (a.cols() != b.rows()) throw std::invalid_argument("MatMul: inner dimension mismatch");
  const int ia = a.id(), ib = b.id();
  return a.tape()->Push(a.value() * b.value(), a.needs_grad() || b.needs_grad(),
                        [ia, ib](Tape& t, const Mat& g) {
                          if (t.NeedsGrad(ia)) t.AccumulateGradExpr(ia, g * t.ValueOf(ib).transpose());
                          if (t.NeedsGrad(ib)) t.AccumulateGradExpr(ib, t.ValueOf(ia).transpose() * g);
                        });
}

Var MatMulT(Var a, Var b) {
  CheckSameTape(a, b);
  if (a.cols() != b.cols()) throw std::invalid_argument("MatMulT: inner dimension mismatch");
  const int ia = a.id(), ib = b.id();
  return a.tape()->Push(a.value() * b.value().transpose(), a.needs_grad() || b.needs_grad(),
                        [ia, ib](Tape& t, const Mat& g) {
                          if (t.NeedsGrad(ia)) t.AccumulateGradExpr(ia, g * t.ValueOf(ib));
                          if (t.NeedsGrad(ib)) t.AccumulateGradExpr(ib, g.transpose() * t.ValueOf(ia));
                        });
}

Var Add(Var a, Var b) {
  CheckSameTape(a, b);
  CheckSameShape(a.value(), b.value(), "Add");
  const int ia = a.id(), ib = b.id();
  return a.tape()->Push(a.value() + b.value(), a.needs_grad() || b.needs_grad(),
                        [ia, ib](Tape& t, const Mat& g) {
                          t.AccumulateGrad(ia, g);
                          t.AccumulateGrad(ib, g);
                        });
}

Var Sub(Var a, Var b) {
  CheckSameTape(a, b);
  CheckSameShape(a.value(), b.value(), "Sub");
  const int ia = a.id(), ib = b.id();
  return a.tape()->Push(a.value() - b.value(), a.needs_grad() || b.needs_grad(),
                        [ia, ib](Tape& t, const Mat& g) {
                          t.AccumulateGrad(ia, g);
                          t.AccumulateGradExpr(ib, -g);
                        });
}

Var Mul(Var a, Var b) {
  CheckSameTape(a, b);
  CheckSameShape(a.value(), b.value(), "Mul");
  const int ia = a.id(), ib = b.id();
  return a.tape()->Push(a.value().cwiseProduct(b.value()), a.needs_grad() || b.needs_grad(),
                        [ia, ib](Tape& t, const Mat& g) {
                          if (t.NeedsGrad(ia)) t.AccumulateGradExpr(ia, g.cwiseProduct(t.ValueOf(ib)));
                          if (t.NeedsGrad(ib)) t.AccumulateGradExpr(ib, g.cwiseProduct(t.ValueOf(ia)));
                        });
}

Var Scale(Var a, double s) {
  const int ia = a.id();
  return a.tape()->Push(a.value() * s, a.needs_grad(),
                        [ia, s](Tape& t, const Mat& g) { t.AccumulateGradExpr(ia, g * s); });
}

Var AddRow(Var a, Var row) {
  CheckSameTape(a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) throw std::invalid_argument("AddRow: bad row shape");
  const int ia = a.id(), ir = row.id();
  Mat out = a.value().rowwise() + row.value().row(0);
  return a.tape()->Push(std::move(out), a.needs_grad() || row.needs_grad(),
                        [ia, ir](Tape& t, const Mat& g) {
                          t.AccumulateGrad(ia, g);
                          if (t.NeedsGrad(ir)) t.AccumulateGradExpr(ir, g.colwise().sum());
                        });
}

Var AddConst(Var a, const Mat& c) {
  CheckSameShape(a.value(), c, "AddConst");
  const int ia = a.id();
  return a.tape()->Push(a.value() + c, a.needs_grad(),
                        [ia](Tape& t, const Mat& g) { t.AccumulateGrad(ia, g); });
}

Var Affine(Var x, Var w, Var b) { return AddRow(MatMul(x, w), b); }

void Tape::FoldReluPattern(const Mat& x) {
  std::uint64_t h = relu_signature_ ^ static_cast<std::uint64_t>(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    h = (h ^ static_cast<std::uint64_t>(x.data()[i] > 0.0)) * 0x100000001b3ULL;
  }
  relu_signature_ = h;
}

Var Relu(Var a) {
  const int ia = a.id();
  a.tape()->FoldReluPattern(a.value());
  return a.tape()->Push(a.value().cwiseMax(0.0), a.needs_grad(), [ia](Tape& t, const Mat& g) {
    const Mat& x = t.ValueOf(ia);
    t.AccumulateGradExpr(ia, (x.array() > 0.0).select(g, 0.0));
  });
}

Var Tanh(Var a) {
  const int ia = a.id();
  Mat y = a.value().array().tanh().matrix();
  Mat ycopy = y;
  return a.tape()->Push(std::move(y), a.needs_grad(), [ia, ycopy](Tape& t, const Mat& g) {
    t.AccumulateGradExpr(ia, g.cwiseProduct((1.0 - ycopy.array().square()).matrix()));
  });
}

Var Sigmoid(Var a) {
  const int ia = a.id();
  Mat y = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  Mat ycopy = y;
  return a.tape()->Push(std::move(y), a.needs_grad(), [ia, ycopy](Tape& t, const Mat& g) {
    t.AccumulateGradExpr(ia, g.cwiseProduct((ycopy.array() * (1.0 - ycopy.array())).matrix()));
  });
}

Var Square(Var a) {
  const int ia = a.id();
  return a.tape()->Push(a.value().array().square().matrix(), a.needs_grad(),
                        [ia](Tape& t, const Mat& g) {
                          t.AccumulateGradExpr(ia, 2.0 * g.cwiseProduct(t.ValueOf(ia)));
                        });
}

// ---- Shape -------------------------------------------------------------

Var ConcatCols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("ConcatCols: no inputs");
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  bool ng = false;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("ConcatCols: row mismatch");
    cols += p.cols();
    ng = ng || p.needs_grad();
  }
  Mat out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> ids;
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    ids.emplace_back(p.id(), c);
    c += p.cols();
  }
  return parts[0].tape()->Push(std::move(out), ng, [ids](Tape& t, const Mat& g) {
    for (const auto& [id, start] : ids) {
      if (t.NeedsGrad(id)) t.AccumulateGradExpr(id, g.middleCols(start, t.ValueOf(id).cols()));
    }
  });
}

Var ConcatRows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("ConcatRows: no inputs");
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  bool ng = false;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("ConcatRows: col mismatch");
    rows += p.rows();
    ng = ng || p.needs_grad();
  }
  Mat out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> ids;
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    ids.emplace_back(p.id(), r);
    r += p.rows();
  }
  return parts[0].tape()->Push(std::move(out), ng, [ids](Tape& t, const Mat& g) {
    for (const auto& [id, start] : ids) {
      if (t.NeedsGrad(id)) t.AccumulateGradExpr(id, g.middleRows(start, t.ValueOf(id).rows()));
    }
  });
}

Var SliceRows(Var a, Eigen::Index start, Eigen::Index n) {
  if (start < 0 || n < 0 || start + n > a.rows()) throw std::out_of_range("SliceRows");
  const int ia = a.id();
  const Eigen::Index rows = a.rows(), cols = a.cols();
  return a.tape()->Push(a.value().middleRows(start, n), a.needs_grad(),
                        [ia, start, n, rows, cols](Tape& t, const Mat& g) {
                          Mat full = Mat::Zero(rows, cols);
                          full.middleRows(start, n) = g;
                          t.AccumulateGrad(ia, full);
                        });
}

Var SliceCols(Var a, Eigen::Index start, Eigen::Index n) {
  if (start < 0 || n < 0 || start + n > a.cols()) throw std::out_of_range("SliceCols");
  const int ia = a.id();
  const Eigen::Index rows = a.rows(), cols = a.cols();
  return a.tape()->Push(a.value().middleCols(start, n), a.needs_grad(),
                        [ia, start, n, rows, cols](Tape& t, const Mat& g) {
                          Mat full = Mat::Zero(rows, cols);
                          full.middleCols(start, n) = g;
                          t.AccumulateGrad(ia, full);
                        });
}

Var GatherRows(Var table, std::span<const int> ids) {
  const Mat& tv = table.value();
  Mat out(static_cast<Eigen::Index>(ids.size()), tv.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tv.rows()) throw std::out_of_range("GatherRows: id out of range");
    out.row(static_cast<Eigen::Index>(i)) = tv.row(ids[i]);
  }
  const int it = table.id();
  std::vector<int> idv(ids.begin(), ids.end());
  const Eigen::Index rows = tv.rows(), cols = tv.cols();
  return table.tape()->Push(std::move(out), table.needs_grad(),
                            [it, idv, rows, cols](Tape& t, const Mat& g) {
                              Mat full = Mat::Zero(rows, cols);
                              for (size_t i = 0; i < idv.size(); ++i) {
                                full.row(idv[i]) += g.row(static_cast<Eigen::Index>(i));
                              }
                              t.AccumulateGrad(it, full);
                            });
}

Var RepeatRow(Var row, Eigen::Index n) {
  if (row.rows() != 1) throw std::invalid_argument("RepeatRow: input must be a row");
  const int ir = row.id();
  Mat out = row.value().replicate(n, 1);
  return row.tape()->Push(std::move(out), row.needs_grad(), [ir](Tape& t, const Mat& g) {
    t.AccumulateGradExpr(ir, g.colwise().sum());
  });
}

Var Splice(Var a, std::span<const int> offsets) {
  if (offsets.empty()) throw std::invalid_argument("Splice: empty context");
  const int lo = *std::min_element(offsets.begin(), offsets.end());
  const int hi = *std::max_element(offsets.begin(), offsets.end());
  const Eigen::Index span_len = hi - lo;
  const Eigen::Index out_rows = a.rows() - span_len;
  if (out_rows < 1) throw std::invalid_argument("Splice: input shorter than context");
  const Eigen::Index c = a.cols();
  const Mat& x = a.value();
  Mat out(out_rows, c * static_cast<Eigen::Index>(offsets.size()));
  for (Eigen::Index r = 0; r < out_rows; ++r) {
    for (size_t k = 0; k < offsets.size(); ++k) {
      out.block(r, static_cast<Eigen::Index>(k) * c, 1, c) = x.row(r + offsets[k] - lo);
    }
  }
  const int ia = a.id();
  std::vector<int> off(offsets.begin(), offsets.end());
  const Eigen::Index in_rows = a.rows();
  return a.tape()->Push(std::move(out), a.needs_grad(),
                        [ia, off, lo, c, in_rows, out_rows](Tape& t, const Mat& g) {
                          Mat full = Mat::Zero(in_rows, c);
                          for (Eigen::Index r = 0; r < out_rows; ++r) {
                            for (size_t k = 0; k < off.size(); ++k) {
                              full.row(r + off[k] - lo) += g.block(r, static_cast<Eigen::Index>(k) * c, 1, c);
                            }
                          }
                          t.AccumulateGrad(ia, full);
                        });
}

// ---- Reductions / normalisation ---------------------------------------

Var SumAll(Var a) {
  const int ia = a.id();
  const Eigen::Index r = a.rows(), c = a.cols();
  Mat out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape()->Push(std::move(out), a.needs_grad(), [ia, r, c](Tape& t, const Mat& g) {
    t.AccumulateGradExpr(ia, Mat::Constant(r, c, g(0, 0)));
  });
}

Var MeanAll(Var a) {
  const double n = static_cast<double>(a.value().size());
  return Scale(SumAll(a), 1.0 / n);
}

Var MeanRows(Var a) {
  const int ia = a.id();
  const Eigen::Index r = a.rows();
  Mat out = a.value().colwise().mean();
  return a.tape()->Push(std::move(out), a.needs_grad(), [ia, r](Tape& t, const Mat& g) {
    t.AccumulateGradExpr(ia, (g / static_cast<double>(r)).replicate(r, 1));
  });
}

Var SoftmaxRows(Var a) {
  const Mat& x = a.value();
  Mat y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    auto e = (x.row(r).array() - m).exp();
    y.row(r) = e / e.sum();
  }
  const int ia = a.id();
  Mat ycopy = y;
  return a.tape()->Push(std::move(y), a.needs_grad(), [ia, ycopy](Tape& t, const Mat& g) {
    // dx = y * (g - sum(g * y))
    Eigen::VectorXd dot = g.cwiseProduct(ycopy).rowwise().sum();
    Mat dx = ycopy.cwiseProduct(g - dot.replicate(1, g.cols()));
    t.AccumulateGrad(ia, dx);
  });
}

Var LayerNorm(Var a, Var gain, Var bias, double eps) {
  CheckSameTape(a, gain);
  CheckSameTape(a, bias);
  const Mat& x = a.value();
  const Eigen::Index n = x.cols();
  if (gain.cols() != n || bias.cols() != n) throw std::invalid_argument("LayerNorm: bad gain/bias shape");
  Mat xhat(x.rows(), n);
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (x.row(r).array() - mu) * inv_std(r);
  }
  Mat y = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
  y.rowwise() += bias.value().row(0);
  const int ia = a.id(), ig = gain.id(), ib = bias.id();
  const bool ng = a.needs_grad() || gain.needs_grad() || bias.needs_grad();
  return a.tape()->Push(std::move(y), ng, [ia, ig, ib, xhat, inv_std](Tape& t, const Mat& g) {
    const Mat& gv = t.ValueOf(ig);
    if (t.NeedsGrad(ig)) t.AccumulateGradExpr(ig, g.cwiseProduct(xhat).colwise().sum());
    if (t.NeedsGrad(ib)) t.AccumulateGradExpr(ib, g.colwise().sum());
    if (t.NeedsGrad(ia)) {
      const double n = static_cast<double>(xhat.cols());
      Mat gh = (g.array().rowwise() * gv.row(0).array()).matrix();
      Mat dx(g.rows(), g.cols());
      for (Eigen::Index r = 0; r < g.rows(); ++r) {
        const double s1 = gh.row(r).sum();
        const double s2 = gh.row(r).dot(xhat.row(r));
        dx.row(r) = inv_std(r) / n * (n * gh.row(r).array() - s1 - xhat.row(r).array() * s2);
      }
      t.AccumulateGrad(ia, dx);
    }
  });
}

Var StatsPool(Var a, double var_floor) {
  const Mat& x = a.value();
  const Eigen::Index t_len = x.rows(), c = x.cols();
  if (t_len < 1) throw std::invalid_argument("StatsPool: empty input");
  RowVec mean = x.colwise().mean();
  RowVec var = (x.rowwise() - mean).array().square().colwise().mean();
  RowVec sd(c);
  std::vector<bool> floored(static_cast<size_t>(c));
  for (Eigen::Index j = 0; j < c; ++j) {
    floored[static_cast<size_t>(j)] = var(j) < var_floor;
    sd(j) = std::sqrt(std::max(var(j), var_floor));
  }
  Mat out(1, 2 * c);
  out.leftCols(c) = mean;
  out.rightCols(c) = sd;
  const int ia = a.id();
  return a.tape()->Push(std::move(out), a.needs_grad(),
                        [ia, mean, sd, floored, t_len, c](Tape& t, const Mat& g) {
                          const Mat& x = t.ValueOf(ia);
                          const double n = static_cast<double>(t_len);
                          Mat dx(t_len, c);
                          for (Eigen::Index j = 0; j < c; ++j) {
                            const double gm = g(0, j) / n;
                            double gs = 0.0;
                            if (!floored[static_cast<size_t>(j)]) gs = g(0, c + j) / (n * sd(j));
                            dx.col(j) = (gm + gs * (x.col(j).array() - mean(j))).matrix();
                          }
                          t.AccumulateGrad(ia, dx);
                        });
}

Var L2Distance(Var a, Var b) {
  CheckSameTape(a, b);
  CheckSameShape(a.value(), b.value(), "L2Distance");
  Mat diff = a.value() - b.value();
  const double d = diff.norm();
  Mat out(1, 1);
  out(0, 0) = d;
  const int ia = a.id(), ib = b.id();
  return a.tape()->Push(std::move(out), a.needs_grad() || b.needs_grad(),
                        [ia, ib, diff, d](Tape& t, const Mat& g) {
                          if (d == 0.0) return;
                          Mat gd = diff * (g(0, 0) / d);
                          t.AccumulateGrad(ia, gd);
                          t.AccumulateGradExpr(ib, -gd);
                        });
}

// ---- Losses ------------------------------------------------------------

Var MseLoss(Var pred, const Mat& target) {
  CheckSameShape(pred.value(), target, "MseLoss");
  Mat diff = pred.value() - target;
  const double n = static_cast<double>(diff.size());
  Mat out(1, 1);
  out(0, 0) = diff.squaredNorm() / n;
  const int ip = pred.id();
  return pred.tape()->Push(std::move(out), pred.needs_grad(), [ip, diff, n](Tape& t, const Mat& g) {
    t.AccumulateGradExpr(ip, diff * (2.0 * g(0, 0) / n));
  });
}

Var BceWithLogits(Var logits, const Mat& target, double pos_weight) {
  CheckSameShape(logits.value(), target, "BceWithLogits");
  const Mat& z = logits.value();
  const double n = static_cast<double>(z.size());
  double loss = 0.0;
  Mat dz(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const double x = z(i, j), y = target(i, j);
      const double w = y > 0.5 ? pos_weight : 1.0;
      // log(1 + exp(-|x|)) + max(x, 0) - x*y
      loss += w * (std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0) - x * y);
      const double s = 1.0 / (1.0 + std::exp(-x));
      dz(i, j) = w * (s - y);
    }
  }
  Mat out(1, 1);
  out(0, 0) = loss / n;
  const int il = logits.id();
  return logits.tape()->Push(std::move(out), logits.needs_grad(), [il, dz, n](Tape& t, const Mat& g) {
    t.AccumulateGradExpr(il, dz * (g(0, 0) / n));
  });
}

RowVec LogSoftmax(const RowVec& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return (logits.array() - lse).matrix();
}

Var CrossEntropy(Var logits, int target) {
  if (logits.rows() != 1) throw std::invalid_argument("CrossEntropy: logits must be a row");
  if (target < 0 || target >= logits.cols()) throw std::out_of_range("CrossEntropy: bad target");
  RowVec lsm = LogSoftmax(logits.value().row(0));
  Mat out(1, 1);
  out(0, 0) = -lsm(target);
  Mat dz = lsm.array().exp().matrix();
  dz(0, target) -= 1.0;
  const int il = logits.id();
  return logits.tape()->Push(std::move(out), logits.needs_grad(), [il, dz](Tape& t, const Mat& g) {
    t.AccumulateGradExpr(il, dz * g(0, 0));
  });
}

Var Dropout(Var a, double rate, std::mt19937_64* rng) {
  if (rate <= 0.0 || rng == nullptr) return a;
  if (rate >= 1.0) throw std::invalid_argument("Dropout: rate must be < 1");
  std::bernoulli_distribution keep(1.0 - rate);
  Mat mask(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(*rng) ? 1.0 / (1.0 - rate) : 0.0;
  return Mul(a, a.tape()->Constant(std::move(mask)));
}

}  // namespace xtts
