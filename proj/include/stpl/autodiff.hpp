#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "stpl/tensor.hpp"

namespace stpl::ag {

struct Node;
using Var = std::shared_ptr<Node>;

/// One tape entry: a value, the nodes it was computed from, and the rule that
/// scatters an incoming gradient back onto those parents.
struct Node {
  Tensor value;
  Tensor grad;  // lazily allocated, same shape as value
  std::vector<Var> parents;
  std::function<void(Node&)> backward_rule;  // reads this->grad, accumulates into parents
  bool requires_grad = true;
  std::string name;  // nonempty for named leaves (parameters, actions)

  Tensor& ensure_grad() {
    if (grad.empty()) grad = Tensor::zeros_like(value);
    return grad;
  }
};

Var constant(Tensor value);
Var leaf(Tensor value, std::string name = "");

// Forward ops. Every op checks shapes and registers its backward rule.
Var matmul(const Var& a, const Var& b);  // [m,n]x[n,p] -> [m,p], [m,n]x[n] -> [m]
Var add(const Var& a, const Var& b);     // equal shapes, or [m,n] + [n] bias-add
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);  // elementwise
Var scale(const Var& a, double c);
Var relu(const Var& a);
Var tanh_(const Var& a);
Var sum(const Var& a);
Var mean(const Var& a);
Var mse(const Var& a, const Var& b);     // mean squared difference, scalar
Var l2norm(const Var& a);
Var cosine(const Var& u, const Var& v);  // flattened; throws DegenerateVelocity on ~zero norm
Var concat(const std::vector<Var>& parts);            // 1-D
Var slice(const Var& a, int offset, int len);         // 1-D
Var reshape(const Var& a, std::vector<int> shape);
Var stop_gradient(const Var& a);

/// Reverse pass from a scalar root. Zeroes grads of every reachable node
/// first, so leaves can be reused across graphs without manual zeroing.
void backward(const Var& root);

/// Gradients of `root` w.r.t. the named leaves it reaches (runs backward()).
std::vector<std::pair<std::string, Tensor>> gradient_map(const Var& root);

// ---------------------------------------------------------------------------

/// Adam with bias correction; one state per parameter set, per-slot learning
/// rates so encoder and predictor groups can share a step counter.
class Adam {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void add(const Var& param, double lr);
  void set_lr(const std::string& name, double lr);
  void step();  // consumes param->grad; caller runs backward() first
  long step_count() const { return t_; }

 private:
  struct Slot {
    Var param;
    double lr;
    Tensor m, v;
  };
  std::vector<Slot> slots_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

/// Single bias-corrected Adam update on raw tensors (the primitive Adam::step
/// applies per slot).
void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, long t, double lr,
                 double beta1, double beta2, double eps);

}  // namespace stpl::ag
