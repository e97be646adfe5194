#include "kstrip/autograd.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <unordered_set>
#include <utility>

#include "kstrip/error.hpp"

namespace kstrip {

namespace {

std::atomic<std::uint64_t> next_id{1};
thread_local bool recording = true;

Var make_node(ComplexTensor value, bool requires_grad, bool leaf) {
  auto n = std::make_shared<Node>();
  n->id = next_id.fetch_add(1, std::memory_order_relaxed);
  n->requires_grad = requires_grad;
  if (requires_grad && leaf) n->grad = ComplexTensor::zeros_like(value);
  n->value = std::move(value);
  return n;
}

Var make_leaf(ComplexTensor value, bool requires_grad) { return make_node(std::move(value), requires_grad, true); }

}  // namespace

Var constant(ComplexTensor value) { return make_leaf(std::move(value), false); }
Var parameter(ComplexTensor value) { return make_leaf(std::move(value), true); }

Var make_result(ComplexTensor value, std::vector<Var> parents, BackwardFn fn) {
  const bool track = recording && std::any_of(parents.begin(), parents.end(),
                                              [](const Var& p) { return p && p->requires_grad; });
  if (!track) return make_leaf(std::move(value), false);
  auto n = make_node(std::move(value), true, false);
  n->parents = std::move(parents);
  n->backward_fn = std::move(fn);
  return n;
}

void accumulate_grad(const Var& v, ComplexTensor&& g) {
  if (!v || !v->requires_grad) return;
  if (v->grad.empty()) {
    require_same_shape(v->value.shape(), g.shape(), "accumulate_grad");
    v->grad = std::move(g);
  } else {
    v->grad.add_inplace(g);
  }
}

void accumulate_grad(const Var& v, const ComplexTensor& g) {
  if (!v || !v->requires_grad) return;
  if (v->grad.empty()) {
    require_same_shape(v->value.shape(), g.shape(), "accumulate_grad");
    v->grad = g;
  } else {
    v->grad.add_inplace(g);
  }
}

bool grad_enabled() { return recording; }

NoGradGuard::NoGradGuard() : previous_(recording) { recording = false; }
NoGradGuard::~NoGradGuard() { recording = previous_; }

namespace {

std::vector<Node*> reachable(const Var& root) {
  std::vector<Node*> nodes;
  if (!root || !root->requires_grad) return nodes;
  std::unordered_set<const Node*> seen;
  std::vector<Node*> stack{root.get()};
  seen.insert(root.get());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    nodes.push_back(n);
    for (const auto& p : n->parents) {
      if (p && p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  std::sort(nodes.begin(), nodes.end(), [](const Node* a, const Node* b) { return a->id < b->id; });
  return nodes;
}

}  // namespace

std::vector<std::uint64_t> tape(const Var& root) {
  std::vector<std::uint64_t> ids;
  for (const Node* n : reachable(root)) ids.push_back(n->id);
  return ids;
}

GradientMap backward(const Var& loss) {
  GradientMap result;
  if (!loss || !loss->requires_grad) return result;
  if (loss->value.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " + shape_str(loss->value.shape()));
  }
  if (loss->value.im()[0] != 0.0) throw ContractError("backward: loss must be real-valued");

  auto nodes = reachable(loss);
  for (Node* n : nodes) {
    if (!n->is_leaf()) n->grad = ComplexTensor();
  }
  if (loss->grad.empty()) loss->grad = ComplexTensor::zeros_like(loss->value);
  loss->grad.re()[0] += 1.0;
  // Nodes that received nothing contribute nothing to their parents.
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    Node* n = *it;
    if (n->is_leaf() || n->grad.empty()) continue;
    if (n->backward_fn) n->backward_fn(*n);
    n->grad = ComplexTensor();
  }
  for (const Node* n : nodes) {
    if (n->is_leaf()) result.emplace(n->id, n->grad);
  }
  return result;
}

void zero_grad(std::span<const Var> vars) {
  for (const auto& v : vars) {
    if (v && v->requires_grad) v->grad.fill({0.0, 0.0});
  }
}

double grad_check(const std::function<Var()>& f, std::span<const Var> leaves, double eps) {
  zero_grad(leaves);
  backward(f());
  std::vector<ComplexTensor> analytic;
  analytic.reserve(leaves.size());
  for (const auto& l : leaves) analytic.push_back(l->grad);

  auto evaluate = [&f] {
    NoGradGuard guard;
    return f()->value.re()[0];
  };

  double worst = 0.0;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    auto& value = leaves[li]->value;
    for (int plane = 0; plane < 2; ++plane) {
      auto data = plane == 0 ? value.re() : value.im();
      auto grad = plane == 0 ? analytic[li].re() : analytic[li].im();
      for (std::size_t i = 0; i < data.size(); ++i) {
        const double orig = data[i];
        data[i] = orig + eps;
        const double fp = evaluate();
        data[i] = orig - eps;
        const double fm = evaluate();
        data[i] = orig;
        const double numeric = (fp - fm) / (2.0 * eps);
        const double err = std::abs(grad[i] - numeric) / std::max(std::abs(numeric), 1e-8);
        if (std::isnan(err)) return std::numeric_limits<double>::quiet_NaN();
        worst = std::max(worst, err);
      }
    }
  }
  return worst;
}

double grad_check(const std::function<Var(const Var&)>& f, const ComplexTensor& x, double eps) {
  Var leaf = parameter(x);
  const std::vector<Var> leaves{leaf};
  return grad_check([&] { return f(leaf); }, leaves, eps);
}

Var add(const Var& a, const Var& b) {
  return make_result(kstrip::add(a->value, b->value), {a, b}, [](Node& self) {
    accumulate_grad(self.parents[0], self.grad);
    accumulate_grad(self.parents[1], std::move(self.grad));
  });
}

Var sub(const Var& a, const Var& b) {
  return make_result(kstrip::sub(a->value, b->value), {a, b}, [](Node& self) {
    accumulate_grad(self.parents[0], self.grad);
    accumulate_grad(self.parents[1], kstrip::scale(self.grad, -1.0));
  });
}

// For z = a*b the split-real gradient w.r.t. a is g * conj(b).
Var mul(const Var& a, const Var& b) {
  return make_result(kstrip::mul(a->value, b->value), {a, b}, [](Node& self) {
    const auto& pa = self.parents[0];
    const auto& pb = self.parents[1];
    if (pa->requires_grad) accumulate_grad(pa, kstrip::mul(self.grad, kstrip::conj(pb->value)));
    if (pb->requires_grad) accumulate_grad(pb, kstrip::mul(self.grad, kstrip::conj(pa->value)));
  });
}

Var scale(const Var& a, double s) {
  return make_result(kstrip::scale(a->value, s), {a}, [s](Node& self) {
    accumulate_grad(self.parents[0], kstrip::scale(self.grad, s));
  });
}

Var conj(const Var& a) {
  return make_result(kstrip::conj(a->value), {a}, [](Node& self) {
    accumulate_grad(self.parents[0], kstrip::conj(self.grad));
  });
}

Var sum(const Var& a) {
  const auto s = kstrip::sum(a->value);
  return make_result(ComplexTensor({1}, {s.real()}, {s.imag()}), {a}, [](Node& self) {
    const auto& p = self.parents[0];
    accumulate_grad(p, ComplexTensor::full(p->value.shape(), self.grad.at(0)));
  });
}

Var real_part(const Var& a) {
  ComplexTensor v = a->value;
  for (auto& x : v.im()) x = 0.0;
  return make_result(std::move(v), {a}, [](Node& self) {
    ComplexTensor g = self.grad;
    for (auto& x : g.im()) x = 0.0;
    accumulate_grad(self.parents[0], std::move(g));
  });
}

Var abs2(const Var& a) {
  ComplexTensor v(a->value.shape());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double r = a->value.re()[i];
    const double m = a->value.im()[i];
    v.re()[i] = r * r + m * m;
  }
  return make_result(std::move(v), {a}, [](Node& self) {
    const auto& p = self.parents[0];
    ComplexTensor g(p->value.shape());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double up = self.grad.re()[i];
      g.re()[i] = 2.0 * p->value.re()[i] * up;
      g.im()[i] = 2.0 * p->value.im()[i] * up;
    }
    accumulate_grad(p, std::move(g));
  });
}

Var concat_channels(const Var& a, const Var& b) {
  const auto& sa = a->value.shape();
  const auto& sb = b->value.shape();
  if (sa.size() != 4 || sb.size() != 4 || sa[0] != sb[0] || sa[2] != sb[2] || sa[3] != sb[3]) {
    throw DimensionError("concat_channels: incompatible shapes " + shape_str(sa) + " and " +
                         shape_str(sb));
  }
  const std::size_t batch = sa[0];
  const std::size_t plane = sa[2] * sa[3];
  const std::size_t na = sa[1] * plane;
  const std::size_t nb = sb[1] * plane;
  ComplexTensor out({batch, sa[1] + sb[1], sa[2], sa[3]});
  for (std::size_t n = 0; n < batch; ++n) {
    const std::size_t dst = n * (na + nb);
    std::copy_n(a->value.re().begin() + n * na, na, out.re().begin() + dst);
    std::copy_n(a->value.im().begin() + n * na, na, out.im().begin() + dst);
    std::copy_n(b->value.re().begin() + n * nb, nb, out.re().begin() + dst + na);
    std::copy_n(b->value.im().begin() + n * nb, nb, out.im().begin() + dst + na);
  }
  return make_result(std::move(out), {a, b}, [batch, na, nb](Node& self) {
    const auto& pa = self.parents[0];
    const auto& pb = self.parents[1];
    ComplexTensor ga(pa->value.shape());
    ComplexTensor gb(pb->value.shape());
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t src = n * (na + nb);
      std::copy_n(self.grad.re().begin() + src, na, ga.re().begin() + n * na);
      std::copy_n(self.grad.im().begin() + src, na, ga.im().begin() + n * na);
      std::copy_n(self.grad.re().begin() + src + na, nb, gb.re().begin() + n * nb);
      std::copy_n(self.grad.im().begin() + src + na, nb, gb.im().begin() + n * nb);
    }
    accumulate_grad(pa, std::move(ga));
    accumulate_grad(pb, std::move(gb));
  });
}

}  // namespace kstrip
