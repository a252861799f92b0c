#include "stpl/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace stpl::ag {

namespace {

Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> rule) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  n->backward_rule = std::move(rule);
  if (!n->parents.empty()) {
    n->requires_grad = false;
    for (const auto& p : n->parents)
      if (p->requires_grad) n->requires_grad = true;
  }
  return n;
}

void check_finite_scalar(const Tensor& t, const char* op) {
  if (!std::isfinite(t[0])) throw ContractError(std::string(op) + " produced a non-finite value");
}

// C(m x p) += A(m x n) * B(n x p)
void gemm_acc(const double* a, const double* b, double* c, int m, int n, int p) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * n;
    double* ci = c + static_cast<std::size_t>(i) * p;
    for (int k = 0; k < n; ++k) {
      const double aik = ai[k];
      if (aik == 0.0) continue;
      const double* bk = b + static_cast<std::size_t>(k) * p;
      for (int j = 0; j < p; ++j) ci[j] += aik * bk[j];
    }
  }
}

// dA(m x n) += G(m x p) * B^T  (B is n x p)
void gemm_acc_bt(const double* g, const double* b, double* da, int m, int n, int p) {
  for (int i = 0; i < m; ++i) {
    const double* gi = g + static_cast<std::size_t>(i) * p;
    double* dai = da + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<std::size_t>(j) * p;
      double acc = 0.0;
      for (int k = 0; k < p; ++k) acc += gi[k] * bj[k];
      dai[j] += acc;
    }
  }
}

// dB(n x p) += A^T * G  (A is m x n, G is m x p)
void gemm_acc_at(const double* a, const double* g, double* db, int m, int n, int p) {
  for (int k = 0; k < m; ++k) {
    const double* ak = a + static_cast<std::size_t>(k) * n;
    const double* gk = g + static_cast<std::size_t>(k) * p;
    for (int i = 0; i < n; ++i) {
      const double aki = ak[i];
      if (aki == 0.0) continue;
      double* dbi = db + static_cast<std::size_t>(i) * p;
      for (int j = 0; j < p; ++j) dbi[j] += aki * gk[j];
    }
  }
}

}  // namespace

Var constant(Tensor value) {
  auto n = make_node(std::move(value), {}, nullptr);
  n->requires_grad = false;
  return n;
}

Var leaf(Tensor value, std::string name) {
  auto n = make_node(std::move(value), {}, nullptr);
  n->name = std::move(name);
  return n;
}

Var matmul(const Var& a, const Var& b) {
  const auto& as = a->value.shape();
  const auto& bs = b->value.shape();
  if (as.size() != 2) throw DimensionError("matmul: lhs must be 2-D, got " + shape_str(a->value));
  const int m = as[0], n = as[1];
  const bool vec_rhs = bs.size() == 1;
  const int p = vec_rhs ? 1 : bs[1];
  const int bn = bs[0];
  if (!vec_rhs && bs.size() != 2) throw DimensionError("matmul: rhs must be 1-D or 2-D");
  if (bn != n) throw DimensionError("matmul: inner extents differ: " + shape_str(a->value) +
                                    " vs " + shape_str(b->value));
  Tensor out(vec_rhs ? std::vector<int>{m} : std::vector<int>{m, p});
  gemm_acc(a->value.data(), b->value.data(), out.data(), m, n, p);
  return make_node(std::move(out), {a, b}, [m, n, p](Node& self) {
    const Var& a = self.parents[0];
    const Var& b = self.parents[1];
    if (a->requires_grad)
      gemm_acc_bt(self.grad.data(), b->value.data(), a->ensure_grad().data(), m, n, p);
    if (b->requires_grad)
      gemm_acc_at(a->value.data(), self.grad.data(), b->ensure_grad().data(), m, n, p);
  });
}

Var add(const Var& a, const Var& b) {
  if (a->value.same_shape(b->value)) {
    Tensor out = a->value;
    const double* bd = b->value.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bd[i];
    return make_node(std::move(out), {a, b}, [](Node& self) {
      for (int s = 0; s < 2; ++s) {
        const Var& p = self.parents[s];
        if (!p->requires_grad) continue;
        Tensor& g = p->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      }
    });
  }
  // bias-add: [m,n] + [n]
  const auto& as = a->value.shape();
  if (as.size() == 2 && b->value.shape() == std::vector<int>{as[1]}) {
    const int m = as[0], n = as[1];
    Tensor out = a->value;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) out.at(i, j) += b->value[j];
    return make_node(std::move(out), {a, b}, [m, n](Node& self) {
      const Var& a = self.parents[0];
      const Var& b = self.parents[1];
      if (a->requires_grad) {
        Tensor& g = a->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      }
      if (b->requires_grad) {
        Tensor& g = b->ensure_grad();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) g[j] += self.grad.at(i, j);
      }
    });
  }
  throw DimensionError("add: incompatible shapes " + shape_str(a->value) + " and " +
                       shape_str(b->value));
}

Var sub(const Var& a, const Var& b) {
  if (!a->value.same_shape(b->value))
    throw DimensionError("sub: shapes differ: " + shape_str(a->value) + " vs " +
                         shape_str(b->value));
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b->value[i];
  return make_node(std::move(out), {a, b}, [](Node& self) {
    if (self.parents[0]->requires_grad) {
      Tensor& g = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (self.parents[1]->requires_grad) {
      Tensor& g = self.parents[1]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  if (!a->value.same_shape(b->value))
    throw DimensionError("mul: shapes differ: " + shape_str(a->value) + " vs " +
                         shape_str(b->value));
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b->value[i];
  return make_node(std::move(out), {a, b}, [](Node& self) {
    const Var& a = self.parents[0];
    const Var& b = self.parents[1];
    if (a->requires_grad) {
      Tensor& g = a->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * b->value[i];
    }
    if (b->requires_grad) {
      Tensor& g = b->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * a->value[i];
    }
  });
}

Var scale(const Var& a, double c) {
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c;
  return make_node(std::move(out), {a}, [c](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += c * self.grad[i];
  });
}

Var relu(const Var& a) {
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
  return make_node(std::move(out), {a}, [](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (self.parents[0]->value[i] > 0.0) g[i] += self.grad[i];
  });
}

Var tanh_(const Var& a) {
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
  return make_node(std::move(out), {a}, [](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double y = self.value[i];
      g[i] += self.grad[i] * (1.0 - y * y);
    }
  });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a->value.size(); ++i) s += a->value[i];
  Tensor out = Tensor::scalar(s);
  check_finite_scalar(out, "sum");
  return make_node(std::move(out), {a}, [](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0];
  });
}

Var mean(const Var& a) {
  const double n = static_cast<double>(a->value.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a->value.size(); ++i) s += a->value[i];
  Tensor out = Tensor::scalar(s / n);
  check_finite_scalar(out, "mean");
  return make_node(std::move(out), {a}, [n](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& g = self.parents[0]->ensure_grad();
    const double gs = self.grad[0] / n;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += gs;
  });
}

Var mse(const Var& a, const Var& b) {
  if (!a->value.same_shape(b->value))
    throw DimensionError("mse: shapes differ: " + shape_str(a->value) + " vs " +
                         shape_str(b->value));
  const double n = static_cast<double>(a->value.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a->value.size(); ++i) {
    const double d = a->value[i] - b->value[i];
    s += d * d;
  }
  Tensor out = Tensor::scalar(s / n);
  check_finite_scalar(out, "mse");
  return make_node(std::move(out), {a, b}, [n](Node& self) {
    const Var& a = self.parents[0];
    const Var& b = self.parents[1];
    const double gs = 2.0 * self.grad[0] / n;
    if (a->requires_grad) {
      Tensor& g = a->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += gs * (a->value[i] - b->value[i]);
    }
    if (b->requires_grad) {
      Tensor& g = b->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= gs * (a->value[i] - b->value[i]);
    }
  });
}

Var l2norm(const Var& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a->value.size(); ++i) s += a->value[i] * a->value[i];
  const double norm = std::sqrt(s);
  Tensor out = Tensor::scalar(norm);
  check_finite_scalar(out, "l2norm");
  return make_node(std::move(out), {a}, [norm](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    if (norm < 1e-12) throw DegenerateVelocity("l2norm backward at zero vector");
    Tensor& g = self.parents[0]->ensure_grad();
    const double gs = self.grad[0] / norm;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += gs * self.parents[0]->value[i];
  });
}

Var cosine(const Var& u, const Var& v) {
  if (u->value.size() != v->value.size())
    throw DimensionError("cosine: operand sizes differ: " + shape_str(u->value) + " vs " +
                         shape_str(v->value));
  const std::size_t n = u->value.size();
  double dot = 0.0, nu2 = 0.0, nv2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += u->value[i] * v->value[i];
    nu2 += u->value[i] * u->value[i];
    nv2 += v->value[i] * v->value[i];
  }
  const double nu = std::sqrt(nu2), nv = std::sqrt(nv2);
  if (nu < 1e-12 || nv < 1e-12) throw DegenerateVelocity("cosine of near-zero vector");
  Tensor out = Tensor::scalar(dot / (nu * nv));
  check_finite_scalar(out, "cosine");
  return make_node(std::move(out), {u, v}, [dot, nu, nv](Node& self) {
    const Var& u = self.parents[0];
    const Var& v = self.parents[1];
    const double gs = self.grad[0];
    const double inv = 1.0 / (nu * nv);
    if (u->requires_grad) {
      Tensor& g = u->ensure_grad();
      const double s = dot / (nu * nu);
      for (std::size_t i = 0; i < g.size(); ++i)
        g[i] += gs * inv * (v->value[i] - s * u->value[i]);
    }
    if (v->requires_grad) {
      Tensor& g = v->ensure_grad();
      const double s = dot / (nv * nv);
      for (std::size_t i = 0; i < g.size(); ++i)
        g[i] += gs * inv * (u->value[i] - s * v->value[i]);
    }
  });
}

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat: empty input");
  int total = 0;
  for (const auto& p : parts) {
    if (p->value.shape().size() != 1) throw DimensionError("concat: all parts must be 1-D");
    total += p->value.shape()[0];
  }
  Tensor out({total});
  int off = 0;
  for (const auto& p : parts) {
    std::copy(p->value.data(), p->value.data() + p->value.size(), out.data() + off);
    off += static_cast<int>(p->value.size());
  }
  return make_node(std::move(out), parts, [](Node& self) {
    int off = 0;
    for (const auto& p : self.parents) {
      const int len = static_cast<int>(p->value.size());
      if (p->requires_grad) {
        Tensor& g = p->ensure_grad();
        for (int i = 0; i < len; ++i) g[i] += self.grad[off + i];
      }
      off += len;
    }
  });
}

Var slice(const Var& a, int offset, int len) {
  if (a->value.shape().size() != 1) throw DimensionError("slice: input must be 1-D");
  const int n = a->value.shape()[0];
  if (offset < 0 || len <= 0 || offset + len > n)
    throw DimensionError("slice: range [" + std::to_string(offset) + "," +
                         std::to_string(offset + len) + ") out of [0," + std::to_string(n) + ")");
  Tensor out({len});
  std::copy(a->value.data() + offset, a->value.data() + offset + len, out.data());
  return make_node(std::move(out), {a}, [offset, len](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& g = self.parents[0]->ensure_grad();
    for (int i = 0; i < len; ++i) g[offset + i] += self.grad[i];
  });
}

Var reshape(const Var& a, std::vector<int> shape) {
  if (Tensor::count(shape) != a->value.size())
    throw DimensionError("reshape: element count mismatch");
  Tensor out(std::move(shape), a->value.vec());
  return make_node(std::move(out), {a}, [](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Var stop_gradient(const Var& a) {
  auto n = make_node(a->value, {}, nullptr);
  n->requires_grad = false;
  return n;
}

namespace {

// Iterative post-order over parents; children before parents in `order`.
void topo_order(const Var& root, std::vector<Node*>& order) {
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx++].get();
      if (seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
}

}  // namespace

void backward(const Var& root) {
  if (root->value.size() != 1) throw ContractError("backward: root must be scalar-valued");
  if (!root->value.finite()) throw ContractError("backward: root value is not finite");
  std::vector<Node*> order;
  topo_order(root, order);
  for (Node* n : order) {
    if (!n->grad.empty()) std::fill(n->grad.vec().begin(), n->grad.vec().end(), 0.0);
  }
  root->ensure_grad()[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_rule && n->requires_grad && !n->grad.empty()) n->backward_rule(*n);
  }
}

std::vector<std::pair<std::string, Tensor>> gradient_map(const Var& root) {
  backward(root);
  std::vector<Node*> order;
  topo_order(root, order);
  std::vector<std::pair<std::string, Tensor>> out;
  for (Node* n : order) {
    if (n->parents.empty() && n->requires_grad && !n->name.empty())
      out.emplace_back(n->name, n->grad.empty() ? Tensor::zeros_like(n->value) : n->grad);
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, long t, double lr,
                 double beta1, double beta2, double eps) {
  if (!param.same_shape(grad)) throw DimensionError("adam_update: grad shape mismatch");
  if (m.empty()) m = Tensor::zeros_like(param);
  if (v.empty()) v = Tensor::zeros_like(param);
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void Adam::add(const Var& param, double lr) { slots_.push_back({param, lr, Tensor(), Tensor()}); }

void Adam::set_lr(const std::string& name, double lr) {
  for (auto& s : slots_)
    if (s.param->name == name) s.lr = lr;
}

void Adam::step() {
  ++t_;
  for (auto& s : slots_) {
    if (s.param->grad.empty()) s.param->ensure_grad();
    adam_update(s.param->value, s.param->grad, s.m, s.v, t_, s.lr, beta1_, beta2_, eps_);
  }
}

}  // namespace stpl::ag
