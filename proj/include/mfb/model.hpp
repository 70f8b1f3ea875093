#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <vector>

#include "mfb/errors.hpp"

namespace mfb {

/// A deterministic forward map R^d -> R^m. Implementations must be safe for
/// concurrent evaluation.
class Model {
 public:
  virtual ~Model() = default;
  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual void eval(const double* x, double* out) const = 0;

  std::vector<double> operator()(const std::vector<double>& x) const {
    if ((int)x.size() != input_dim()) throw ShapeError("Model: input dimension mismatch");
    std::vector<double> out(output_dim());
    eval(x.data(), out.data());
    return out;
  }
};

/// Wraps a plain function as a Model.
class FunctionModel : public Model {
 public:
  using Fn = std::function<void(const double*, double*)>;
  FunctionModel(int in_dim, int out_dim, Fn fn)
      : in_(in_dim), out_(out_dim), fn_(std::move(fn)) {}
  static std::shared_ptr<FunctionModel> scalar(int in_dim, std::function<double(const double*)> f) {
    return std::make_shared<FunctionModel>(
        in_dim, 1, [f = std::move(f)](const double* x, double* out) { out[0] = f(x); });
  }
  int input_dim() const override { return in_; }
  int output_dim() const override { return out_; }
  void eval(const double* x, double* out) const override { fn_(x, out); }

 private:
  int in_, out_;
  Fn fn_;
};

/// Counts evaluations of the wrapped model (used to verify that expensive
/// models are never called on the inference hot path).
class CountingModel : public Model {
 public:
  explicit CountingModel(std::shared_ptr<const Model> inner) : inner_(std::move(inner)) {}
  int input_dim() const override { return inner_->input_dim(); }
  int output_dim() const override { return inner_->output_dim(); }
  void eval(const double* x, double* out) const override {
    count_.fetch_add(1, std::memory_order_relaxed);
    inner_->eval(x, out);
  }
  long count() const { return count_.load(std::memory_order_relaxed); }
  void reset() { count_.store(0, std::memory_order_relaxed); }

 private:
  std::shared_ptr<const Model> inner_;
  mutable std::atomic<long> count_{0};
};

}  // namespace mfb
