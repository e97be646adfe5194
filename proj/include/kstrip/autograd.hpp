#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "kstrip/ctensor.hpp"

namespace kstrip {

class Node;
using Var = std::shared_ptr<Node>;
using BackwardFn = std::function<void(Node&)>;

// One value in the computation graph. Gradients are partial derivatives of
// a real loss with respect to the real and imaginary planes of `value`,
// stored as the re/im planes of `grad`.
class Node {
 public:
  ComplexTensor value;
  // Leaves that require a gradient hold one from construction. Interior
  // nodes receive theirs during a sweep and release it once propagated.
  ComplexTensor grad;
  std::vector<Var> parents;
  BackwardFn backward_fn;
  bool requires_grad = false;
  std::uint64_t id = 0;

  bool is_leaf() const { return parents.empty(); }
};

// Leaf nodes. Parameters are leaves with requires_grad set.
Var constant(ComplexTensor value);
Var parameter(ComplexTensor value);

// Builds an interior node. When no parent requires a gradient, or gradient
// recording is disabled, the result is a detached constant.
Var make_result(ComplexTensor value, std::vector<Var> parents, BackwardFn fn);

// Adds `g` into the gradient of `v` when `v` tracks gradients.
void accumulate_grad(const Var& v, ComplexTensor&& g);
void accumulate_grad(const Var& v, const ComplexTensor& g);

bool grad_enabled();

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Node ids reachable from `root` through gradient-tracking edges, in
// construction (topological) order.
std::vector<std::uint64_t> tape(const Var& root);

using GradientMap = std::map<std::uint64_t, ComplexTensor>;

// Reverse-mode sweep from a real scalar. Leaf gradients accumulate across
// calls; interior gradients only live during the sweep. Returns
// the accumulated gradient of every reachable gradient-tracking leaf.
GradientMap backward(const Var& loss);

void zero_grad(std::span<const Var> vars);

// Central finite-difference check of f's gradient with respect to every
// element (re and im planes separately) of `leaves`. f must return a real
// scalar. Returns max |analytic - numeric| / max(|numeric|, 1e-8).
double grad_check(const std::function<Var()>& f, std::span<const Var> leaves, double eps);
double grad_check(const std::function<Var(const Var&)>& f, const ComplexTensor& x, double eps);

// Differentiable elementwise and reduction ops.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var conj(const Var& a);
Var sum(const Var& a);        // complex scalar, shape [1]
Var real_part(const Var& a);  // imaginary plane zeroed
Var abs2(const Var& a);       // |a|^2 in the real plane
// Concatenates two [B, C, H, W] tensors along the channel axis.
Var concat_channels(const Var& a, const Var& b);

}  // namespace kstrip
