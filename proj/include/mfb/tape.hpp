#pragma once

#include <vector>

#include "mfb/mat.hpp"

namespace mfb {

/// Reverse-mode autodiff tape over matrices. Values are computed eagerly as
/// ops are recorded; backward() walks the record once in reverse creation
/// order (creation order is topological by construction).
///
/// Batch quantities are NxM matrices (rows = samples); parameter vectors are
/// 1xK. Broadcast ops are explicit (add_rowvec / mul_rowvec / *_scalar).
class Tape {
 public:
  using Id = int;

  Id leaf(const Mat& v, bool requires_grad = false);

  // binary, same shape
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);
  Id div(Id a, Id b);
  // matrix product: (NxK)*(KxM) -> NxM
  Id matmul(Id a, Id b);
  // broadcasts: a NxM with r 1xM, s 1x1
  Id add_rowvec(Id a, Id r);
  Id mul_rowvec(Id a, Id r);
  Id mul_scalar(Id a, Id s);
  Id div_scalar(Id a, Id s);
  // unary elementwise
  Id tanh(Id a);
  Id exp(Id a);
  Id log(Id a);
  Id square(Id a);
  Id sqrt(Id a);
  Id softplus(Id a);
  Id neg(Id a);
  Id scale(Id a, double c);      // c*a
  Id add_const(Id a, double c);  // a+c
  // reductions to 1x1
  Id sum(Id a);
  Id mean(Id a);
  // indexing / shape
  Id gather(Id src, std::vector<int> idx);  // src 1xK -> |idx| x 1
  Id concat_cols(Id a, Id b);               // 1xP, 1xQ -> 1x(P+Q)

  /// Backpropagate from a 1x1 loss node.
  void backward(Id loss);

  const Mat& val(Id id) const { return nodes_[id].val; }
  const Mat& grad(Id id) const;
  /// Like grad(), but materializes a zero gradient of the right shape for
  /// nodes backward() never reached.
  const Mat& grad_or_zero(Id id) { return g(id); }
  bool requires_grad(Id id) const { return nodes_[id].needs; }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  enum class Op {
    leaf,
    add,
    sub,
    mul,
    div,
    matmul,
    add_rowvec,
    mul_rowvec,
    mul_scalar,
    div_scalar,
    tanh,
    exp,
    log,
    square,
    sqrt,
    softplus,
    scale,
    add_const,
    sum,
    mean,
    gather,
    concat_cols,
  };

  struct Node {
    Op op = Op::leaf;
    Id a = -1, b = -1;
    double c = 0.0;
    bool needs = false;
    Mat val;
    Mat grad;
    std::vector<int> idx;
  };

  Id push(Node n);
  Id unary(Op op, Id a, double c = 0.0);
  Mat& g(Id id);  // grad storage, allocated+zeroed on demand

  std::vector<Node> nodes_;
  Mat scratch_;
};

}  // namespace mfb
