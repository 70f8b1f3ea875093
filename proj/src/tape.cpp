#include "mfb/tape.hpp"

#include <cmath>
#include <utility>

#include "mfb/errors.hpp"
#include "mfb/kernels.hpp"

namespace mfb {

namespace {
const kernels::Ops& K() { return kernels::ops(); }
}  // namespace

Tape::Id Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return (Id)nodes_.size() - 1;
}

Tape::Id Tape::leaf(const Mat& v, bool requires_grad) {
  Node n;
  n.op = Op::leaf;
  n.val = v;
  n.needs = requires_grad;
  return push(std::move(n));
}

Tape::Id Tape::add(Id a, Id b) {
  if (!nodes_[a].val.same_shape(nodes_[b].val)) throw ShapeError("tape add: shape mismatch");
  Node n;
  n.op = Op::add;
  n.a = a;
  n.b = b;
  n.needs = nodes_[a].needs || nodes_[b].needs;
  n.val.resize(nodes_[a].val.rows(), nodes_[a].val.cols());
  K().add(nodes_[a].val.data(), nodes_[b].val.data(), n.val.data(), n.val.size());
  return push(std::move(n));
}

Tape::Id Tape::sub(Id a, Id b) {
  if (!nodes_[a].val.same_shape(nodes_[b].val)) throw ShapeError("tape sub: shape mismatch");
  Node n;
  n.op = Op::sub;
  n.a = a;
  n.b = b;
  n.needs = nodes_[a].needs || nodes_[b].needs;
  n.val.resize(nodes_[a].val.rows(), nodes_[a].val.cols());
  K().sub(nodes_[a].val.data(), nodes_[b].val.data(), n.val.data(), n.val.size());
  return push(std::move(n));
}

Tape::Id Tape::mul(Id a, Id b) {
  if (!nodes_[a].val.same_shape(nodes_[b].val)) throw ShapeError("tape mul: shape mismatch");
  Node n;
  n.op = Op::mul;
  n.a = a;
  n.b = b;
  n.needs = nodes_[a].needs || nodes_[b].needs;
  n.val.resize(nodes_[a].val.rows(), nodes_[a].val.cols());
  K().mul(nodes_[a].val.data(), nodes_[b].val.data(), n.val.data(), n.val.size());
  return push(std::move(n));
}

Tape::Id Tape::div(Id a, Id b) {
  if (!nodes_[a].val.same_shape(nodes_[b].val)) throw ShapeError("tape div: shape mismatch");
  Node n;
  n.op = Op::div;
  n.a = a;
  n.b = b;
  n.needs = nodes_[a].needs || nodes_[b].needs;
  n.val.resize(nodes_[a].val.rows(), nodes_[a].val.cols());
  K().div(nodes_[a].val.data(), nodes_[b].val.data(), n.val.data(), n.val.size());
  return push(std::move(n));
}

Tape::Id Tape::matmul(Id a, Id b) {
  const Mat& A = nodes_[a].val;
  const Mat& B = nodes_[b].val;
  if (A.cols() != B.rows()) throw ShapeError("tape matmul: inner dimension mismatch");
  Node n;
  n.op = Op::matmul;
  n.a = a;
  n.b = b;
  n.needs = nodes_[a].needs || nodes_[b].needs;
  n.val.resize(A.rows(), B.cols());
  K().matmul_nn(A.data(), B.data(), n.val.data(), A.rows(), A.cols(), B.cols());
  return push(std::move(n));
}

Tape::Id Tape::add_rowvec(Id a, Id r) {
  const Mat& A = nodes_[a].val;
  const Mat& R = nodes_[r].val;
  if (R.rows() != 1 || R.cols() != A.cols()) throw ShapeError("tape add_rowvec: bad row vector");
  Node n;
  n.op = Op::add_rowvec;
  n.a = a;
  n.b = r;
  n.needs = nodes_[a].needs || nodes_[r].needs;
  n.val.resize(A.rows(), A.cols());
  for (int i = 0; i < A.rows(); ++i)
    K().add(A.row_ptr(i), R.data(), n.val.row_ptr(i), (std::size_t)A.cols());
  return push(std::move(n));
}

Tape::Id Tape::mul_rowvec(Id a, Id r) {
  const Mat& A = nodes_[a].val;
  const Mat& R = nodes_[r].val;
  if (R.rows() != 1 || R.cols() != A.cols()) throw ShapeError("tape mul_rowvec: bad row vector");
  Node n;
  n.op = Op::mul_rowvec;
  n.a = a;
  n.b = r;
  n.needs = nodes_[a].needs || nodes_[r].needs;
  n.val.resize(A.rows(), A.cols());
  for (int i = 0; i < A.rows(); ++i)
    K().mul(A.row_ptr(i), R.data(), n.val.row_ptr(i), (std::size_t)A.cols());
  return push(std::move(n));
}

Tape::Id Tape::mul_scalar(Id a, Id s) {
  const Mat& S = nodes_[s].val;
  if (S.size() != 1) throw ShapeError("tape mul_scalar: scalar operand must be 1x1");
  Node n;
  n.op = Op::mul_scalar;
  n.a = a;
  n.b = s;
  n.needs = nodes_[a].needs || nodes_[s].needs;
  n.val.resize(nodes_[a].val.rows(), nodes_[a].val.cols());
  K().scale(nodes_[a].val.data(), S[0], n.val.data(), n.val.size());
  return push(std::move(n));
}

Tape::Id Tape::div_scalar(Id a, Id s) {
  const Mat& S = nodes_[s].val;
  if (S.size() != 1) throw ShapeError("tape div_scalar: scalar operand must be 1x1");
  Node n;
  n.op = Op::div_scalar;
  n.a = a;
  n.b = s;
  n.needs = nodes_[a].needs || nodes_[s].needs;
  n.val.resize(nodes_[a].val.rows(), nodes_[a].val.cols());
  K().scale(nodes_[a].val.data(), 1.0 / S[0], n.val.data(), n.val.size());
  return push(std::move(n));
}

Tape::Id Tape::unary(Op op, Id a, double c) {
  Node n;
  n.op = op;
  n.a = a;
  n.c = c;
  n.needs = nodes_[a].needs;
  const Mat& A = nodes_[a].val;
  n.val.resize(A.rows(), A.cols());
  switch (op) {
    case Op::tanh: K().tanh(A.data(), n.val.data(), A.size()); break;
    case Op::exp: K().exp(A.data(), n.val.data(), A.size()); break;
    case Op::log: K().log(A.data(), n.val.data(), A.size()); break;
    case Op::square: K().mul(A.data(), A.data(), n.val.data(), A.size()); break;
    case Op::sqrt: K().sqrt(A.data(), n.val.data(), A.size()); break;
    case Op::softplus: K().softplus(A.data(), n.val.data(), A.size()); break;
    case Op::scale: K().scale(A.data(), c, n.val.data(), A.size()); break;
    case Op::add_const: K().add_scalar(A.data(), c, n.val.data(), A.size()); break;
    default: throw CapabilityError("tape: not a unary op");
  }
  return push(std::move(n));
}

Tape::Id Tape::tanh(Id a) { return unary(Op::tanh, a); }
Tape::Id Tape::exp(Id a) { return unary(Op::exp, a); }
Tape::Id Tape::log(Id a) { return unary(Op::log, a); }
Tape::Id Tape::square(Id a) { return unary(Op::square, a); }
Tape::Id Tape::sqrt(Id a) { return unary(Op::sqrt, a); }
Tape::Id Tape::softplus(Id a) { return unary(Op::softplus, a); }
Tape::Id Tape::neg(Id a) { return unary(Op::scale, a, -1.0); }
Tape::Id Tape::scale(Id a, double c) { return unary(Op::scale, a, c); }
Tape::Id Tape::add_const(Id a, double c) { return unary(Op::add_const, a, c); }

Tape::Id Tape::sum(Id a) {
  Node n;
  n.op = Op::sum;
  n.a = a;
  n.needs = nodes_[a].needs;
  n.val.resize(1, 1);
  n.val[0] = K().sum(nodes_[a].val.data(), nodes_[a].val.size());
  return push(std::move(n));
}

Tape::Id Tape::mean(Id a) {
  if (nodes_[a].val.size() == 0) throw ShapeError("tape mean: empty operand");
  Node n;
  n.op = Op::mean;
  n.a = a;
  n.needs = nodes_[a].needs;
  n.val.resize(1, 1);
  n.val[0] = K().sum(nodes_[a].val.data(), nodes_[a].val.size()) / (double)nodes_[a].val.size();
  return push(std::move(n));
}

Tape::Id Tape::gather(Id src, std::vector<int> idx) {
  const Mat& S = nodes_[src].val;
  if (S.rows() != 1) throw ShapeError("tape gather: source must be 1xK");
  Node n;
  n.op = Op::gather;
  n.a = src;
  n.needs = nodes_[src].needs;
  n.val.resize((int)idx.size(), 1);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= S.cols()) throw ShapeError("tape gather: index out of range");
    n.val[(int)i] = S[(std::size_t)idx[i]];
  }
  n.idx = std::move(idx);
  return push(std::move(n));
}

Tape::Id Tape::concat_cols(Id a, Id b) {
  const Mat& A = nodes_[a].val;
  const Mat& B = nodes_[b].val;
  if (A.rows() != 1 || B.rows() != 1) throw ShapeError("tape concat_cols: operands must be 1xN");
  Node n;
  n.op = Op::concat_cols;
  n.a = a;
  n.b = b;
  n.needs = nodes_[a].needs || nodes_[b].needs;
  n.val.resize(1, A.cols() + B.cols());
  for (int j = 0; j < A.cols(); ++j) n.val(0, j) = A(0, j);
  for (int j = 0; j < B.cols(); ++j) n.val(0, A.cols() + j) = B(0, j);
  return push(std::move(n));
}

Mat& Tape::g(Id id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.resize(n.val.rows(), n.val.cols());
  return n.grad;
}

const Mat& Tape::grad(Id id) const {
  static const Mat kEmpty;
  return nodes_[id].grad.empty() ? kEmpty : nodes_[id].grad;
}

void Tape::backward(Id loss) {
  if (loss < 0 || loss >= (Id)nodes_.size()) throw ShapeError("tape backward: bad node id");
  if (nodes_[loss].val.size() != 1) throw ShapeError("tape backward: loss must be 1x1");
  g(loss)[0] = 1.0;

  for (Id id = loss; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs || n.grad.empty()) continue;
    const Mat& gr = n.grad;
    Node* pa = n.a >= 0 ? &nodes_[n.a] : nullptr;
    Node* pb = n.b >= 0 ? &nodes_[n.b] : nullptr;
    bool na = pa && pa->needs;
    bool nb = pb && pb->needs;

    switch (n.op) {
      case Op::leaf:
        break;
      case Op::add:
        if (na) K().add(g(n.a).data(), gr.data(), g(n.a).data(), gr.size());
        if (nb) K().add(g(n.b).data(), gr.data(), g(n.b).data(), gr.size());
        break;
      case Op::sub:
        if (na) K().add(g(n.a).data(), gr.data(), g(n.a).data(), gr.size());
        if (nb) K().axpy(-1.0, gr.data(), g(n.b).data(), gr.size());
        break;
      case Op::mul:
        if (na) K().fmacc(gr.data(), pb->val.data(), g(n.a).data(), gr.size());
        if (nb) K().fmacc(gr.data(), pa->val.data(), g(n.b).data(), gr.size());
        break;
      case Op::div:
        if (na) K().divacc(gr.data(), pb->val.data(), g(n.a).data(), gr.size());
        if (nb) {
          scratch_.resize(gr.rows(), gr.cols());
          K().mul(gr.data(), n.val.data(), scratch_.data(), gr.size());
          K().scale(scratch_.data(), -1.0, scratch_.data(), gr.size());
          K().divacc(scratch_.data(), pb->val.data(), g(n.b).data(), gr.size());
        }
        break;
      case Op::matmul:
        if (na)
          K().matmul_acc_nt(gr.data(), pb->val.data(), g(n.a).data(), gr.rows(), gr.cols(),
                            pa->val.cols());
        if (nb)
          K().matmul_acc_tn(pa->val.data(), gr.data(), g(n.b).data(), pa->val.rows(),
                            pa->val.cols(), gr.cols());
        break;
      case Op::add_rowvec:
        if (na) K().add(g(n.a).data(), gr.data(), g(n.a).data(), gr.size());
        if (nb) K().colsum_acc(gr.data(), g(n.b).data(), gr.rows(), gr.cols());
        break;
      case Op::mul_rowvec:
        if (na) {
          Mat& da = g(n.a);
          for (int i = 0; i < gr.rows(); ++i)
            K().fmacc(gr.row_ptr(i), pb->val.data(), da.row_ptr(i), (std::size_t)gr.cols());
        }
        if (nb) {
          scratch_.resize(gr.rows(), gr.cols());
          K().mul(gr.data(), pa->val.data(), scratch_.data(), gr.size());
          K().colsum_acc(scratch_.data(), g(n.b).data(), gr.rows(), gr.cols());
        }
        break;
      case Op::mul_scalar:
        if (na) K().axpy(pb->val[0], gr.data(), g(n.a).data(), gr.size());
        if (nb) g(n.b)[0] += K().dot(gr.data(), pa->val.data(), gr.size());
        break;
      case Op::div_scalar:
        if (na) K().axpy(1.0 / pb->val[0], gr.data(), g(n.a).data(), gr.size());
        if (nb) g(n.b)[0] -= K().dot(gr.data(), n.val.data(), gr.size()) / pb->val[0];
        break;
      case Op::tanh:
        if (na) K().grad_tanh_acc(gr.data(), n.val.data(), g(n.a).data(), gr.size());
        break;
      case Op::exp:
        if (na) K().fmacc(gr.data(), n.val.data(), g(n.a).data(), gr.size());
        break;
      case Op::log:
        if (na) K().divacc(gr.data(), pa->val.data(), g(n.a).data(), gr.size());
        break;
      case Op::square:
        if (na) {
          scratch_.resize(gr.rows(), gr.cols());
          K().scale(gr.data(), 2.0, scratch_.data(), gr.size());
          K().fmacc(scratch_.data(), pa->val.data(), g(n.a).data(), gr.size());
        }
        break;
      case Op::sqrt:
        if (na) {
          scratch_.resize(gr.rows(), gr.cols());
          K().scale(n.val.data(), 2.0, scratch_.data(), gr.size());
          K().divacc(gr.data(), scratch_.data(), g(n.a).data(), gr.size());
        }
        break;
      case Op::softplus:
        if (na) {
          scratch_.resize(gr.rows(), gr.cols());
          K().sigmoid(pa->val.data(), scratch_.data(), gr.size());
          K().fmacc(gr.data(), scratch_.data(), g(n.a).data(), gr.size());
        }
        break;
      case Op::scale:
        if (na) K().axpy(n.c, gr.data(), g(n.a).data(), gr.size());
        break;
      case Op::add_const:
        if (na) K().add(g(n.a).data(), gr.data(), g(n.a).data(), gr.size());
        break;
      case Op::sum:
        if (na) {
          Mat& da = g(n.a);
          K().add_scalar(da.data(), gr[0], da.data(), da.size());
        }
        break;
      case Op::mean:
        if (na) {
          Mat& da = g(n.a);
          K().add_scalar(da.data(), gr[0] / (double)da.size(), da.data(), da.size());
        }
        break;
      case Op::gather:
        if (na) {
          Mat& da = g(n.a);
          for (std::size_t i = 0; i < n.idx.size(); ++i) da[(std::size_t)n.idx[i]] += gr[i];
        }
        break;
      case Op::concat_cols:
        if (na) {
          Mat& da = g(n.a);
          for (int j = 0; j < da.cols(); ++j) da(0, j) += gr(0, j);
        }
        if (nb) {
          Mat& db = g(n.b);
          int off = pa->val.cols();
          for (int j = 0; j < db.cols(); ++j) db(0, j) += gr(0, off + j);
        }
        break;
      default:
        throw CapabilityError("tape backward: unsupported primitive");
    }
  }
}

}  // namespace mfb
