// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

//! @file
//! Minimal reverse-mode differentiation over Tensor.
//!
//! Every op returns a new node holding its value and, when any input needs a
//! gradient, a closure that pushes the output gradient back to its inputs.
//! backward() runs the closures in reverse topological order. Leaves created
//! with parameter() keep their gradient between calls until zero_grad().

#ifndef ANALOGIC_AUTOGRAD_HPP
#define ANALOGIC_AUTOGRAD_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "analogic/tensor.hpp"

namespace analogic::ad {

template <typename Scalar>
struct Node {
  using Matrix = typename Tensor<Scalar>::Matrix;

  Tensor<Scalar> value;
  Tensor<Scalar> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  bool has_grad() const { return grad.size() == value.size() && !grad.empty(); }

  void zero_grad() { grad = Tensor<Scalar>(value.shape()); }

  template <typename Derived>
  void accumulate(const Eigen::MatrixBase<Derived>& g) {
    if (has_grad()) {
      grad.data() += g;
    } else {
      grad = Tensor<Scalar>(value.shape(), Matrix(g));
    }
  }
};

template <typename Scalar>
using Var = std::shared_ptr<Node<Scalar>>;

template <typename Scalar>
Var<Scalar> constant(Tensor<Scalar> t) {
  auto n = std::make_shared<Node<Scalar>>();
  n->value = std::move(t);
  return n;
}

template <typename Scalar>
Var<Scalar> parameter(Tensor<Scalar> t) {
  auto n = constant(std::move(t));
  n->requires_grad = true;
  return n;
}

//! Same value, cut from the graph.
template <typename Scalar>
Var<Scalar> detach(const Var<Scalar>& v) {
  return constant(v->value);
}

template <typename Scalar>
Scalar item(const Var<Scalar>& v) {
  return v->value.data()(0, 0);
}

namespace detail {

template <typename Scalar, typename Fn>
Var<Scalar> make_node(Tensor<Scalar> value, std::vector<Var<Scalar>> inputs, Fn&& fn) {
  auto n = std::make_shared<Node<Scalar>>();
  n->value = std::move(value);
  for (const auto& in : inputs) n->requires_grad = n->requires_grad || in->requires_grad;
  if (n->requires_grad) {
    n->inputs = std::move(inputs);
    n->backward_fn = std::forward<Fn>(fn);
  }
  return n;
}

template <typename Scalar>
Tensor<Scalar> scalar_tensor(Scalar v) {
  return Tensor<Scalar>::constant(Shape{1, 1, 1, 1}, v);
}

}  // namespace detail

//! Seeds d(root)/d(root) = 1 and propagates. root must be a scalar node.
template <typename Scalar>
void backward(const Var<Scalar>& root) {
  if (!root->requires_grad) return;
  std::vector<Node<Scalar>*> order;
  std::unordered_set<Node<Scalar>*> seen;
  std::vector<std::pair<Node<Scalar>*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<Scalar>* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.push_back({child, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->accumulate(Tensor<Scalar>::Matrix::Ones(root->value.data().rows(),
                                                root->value.data().cols()));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<Scalar>* node = *it;
    if (node->backward_fn && node->has_grad()) node->backward_fn(*node);
  }
}

// ---------------------------------------------------------------------------
// Elementwise and structural ops

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_shape(a->value.shape(), b->value.shape(), "add");
  Tensor<Scalar> out(a->value.shape(), a->value.data() + b->value.data());
  return detail::make_node<Scalar>(std::move(out), {a, b}, [](Node<Scalar>& self) {
    for (auto& in : self.inputs)
      if (in->requires_grad) in->accumulate(self.grad.data());
  });
}

template <typename Scalar>
Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_shape(a->value.shape(), b->value.shape(), "sub");
  Tensor<Scalar> out(a->value.shape(), a->value.data() - b->value.data());
  return detail::make_node<Scalar>(std::move(out), {a, b}, [](Node<Scalar>& self) {
    if (self.inputs[0]->requires_grad) self.inputs[0]->accumulate(self.grad.data());
    if (self.inputs[1]->requires_grad) self.inputs[1]->accumulate(-self.grad.data());
  });
}

template <typename Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_shape(a->value.shape(), b->value.shape(), "mul");
  Tensor<Scalar> out(a->value.shape(), (a->value.array() * b->value.array()).matrix());
  return detail::make_node<Scalar>(std::move(out), {a, b}, [](Node<Scalar>& self) {
    auto& x = self.inputs[0];
    auto& y = self.inputs[1];
    if (x->requires_grad) x->accumulate((self.grad.array() * y->value.array()).matrix());
    if (y->requires_grad) y->accumulate((self.grad.array() * x->value.array()).matrix());
  });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar c) {
  Tensor<Scalar> out(a->value.shape(), a->value.data() * c);
  return detail::make_node<Scalar>(std::move(out), {a}, [c](Node<Scalar>& self) {
    self.inputs[0]->accumulate(self.grad.data() * c);
  });
}

//! x (*) m + n, fused so the gist application costs one node.
template <typename Scalar>
Var<Scalar> affine(const Var<Scalar>& x, const Var<Scalar>& m, const Var<Scalar>& n) {
  require_same_shape(x->value.shape(), m->value.shape(), "affine");
  require_same_shape(x->value.shape(), n->value.shape(), "affine");
  Tensor<Scalar> out(x->value.shape(),
                     (x->value.array() * m->value.array() + n->value.array()).matrix());
  return detail::make_node<Scalar>(std::move(out), {x, m, n}, [](Node<Scalar>& self) {
    auto& xi = self.inputs[0];
    auto& mi = self.inputs[1];
    auto& ni = self.inputs[2];
    if (xi->requires_grad) xi->accumulate((self.grad.array() * mi->value.array()).matrix());
    if (mi->requires_grad) mi->accumulate((self.grad.array() * xi->value.array()).matrix());
    if (ni->requires_grad) ni->accumulate(self.grad.data());
  });
}

template <typename Scalar>
Var<Scalar> concat_channels(const Var<Scalar>& a, const Var<Scalar>& b) {
  const Shape& sa = a->value.shape();
  const Shape& sb = b->value.shape();
  if (sa.batch != sb.batch || sa.height != sb.height || sa.width != sb.width)
    throw ShapeError("concat_channels: " + sa.str() + " vs " + sb.str());
  Shape s = sa;
  s.channels = sa.channels + sb.channels;
  Tensor<Scalar> out(s);
  out.data().leftCols(sa.channels) = a->value.data();
  out.data().rightCols(sb.channels) = b->value.data();
  const Index ca = sa.channels;
  return detail::make_node<Scalar>(std::move(out), {a, b}, [ca](Node<Scalar>& self) {
    auto& x = self.inputs[0];
    auto& y = self.inputs[1];
    if (x->requires_grad) x->accumulate(self.grad.data().leftCols(ca));
    if (y->requires_grad) y->accumulate(self.grad.data().rightCols(self.grad.channels() - ca));
  });
}

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& a) {
  Tensor<Scalar> out(a->value.shape(), a->value.array().max(Scalar(0)).matrix());
  return detail::make_node<Scalar>(std::move(out), {a}, [](Node<Scalar>& self) {
    self.inputs[0]->accumulate(
        (self.value.array() > Scalar(0)).select(self.grad.array(), Scalar(0)).matrix());
  });
}

template <typename Scalar>
Var<Scalar> leaky_relu(const Var<Scalar>& a, Scalar slope) {
  const auto& x = a->value.array();
  Tensor<Scalar> out(a->value.shape(), (x > Scalar(0)).select(x, x * slope).matrix());
  return detail::make_node<Scalar>(std::move(out), {a}, [slope](Node<Scalar>& self) {
    auto& in = self.inputs[0];
    in->accumulate((in->value.array() > Scalar(0))
                       .select(self.grad.array(), self.grad.array() * slope)
                       .matrix());
  });
}

template <typename Scalar>
Var<Scalar> tanh(const Var<Scalar>& a) {
  Tensor<Scalar> out(a->value.shape(), a->value.array().tanh().matrix());
  return detail::make_node<Scalar>(std::move(out), {a}, [](Node<Scalar>& self) {
    self.inputs[0]->accumulate(
        (self.grad.array() * (Scalar(1) - self.value.array().square())).matrix());
  });
}

//! softplus(a + ln(e - 1)): strictly positive and equal to 1 at a = 0.
template <typename Scalar>
Var<Scalar> positive_unit(const Var<Scalar>& a) {
  const Scalar shift = std::log(std::exp(Scalar(1)) - Scalar(1));
  auto t = (a->value.array() + shift).eval();
  auto sp = (t.max(Scalar(0)) + (-t.abs()).exp().log1p()).eval();
  Tensor<Scalar> out(a->value.shape(), sp.matrix());
  return detail::make_node<Scalar>(std::move(out), {a}, [shift](Node<Scalar>& self) {
    auto& in = self.inputs[0];
    auto sig = (Scalar(1) / (Scalar(1) + (-(in->value.array() + shift)).exp())).eval();
    in->accumulate((self.grad.array() * sig).matrix());
  });
}

//! Nearest-neighbour 2x upsampling.
template <typename Scalar>
Var<Scalar> upsample2x(const Var<Scalar>& a) {
  const Shape in = a->value.shape();
  Shape s = in;
  s.height *= 2;
  s.width *= 2;
  Tensor<Scalar> out(s);
  for (Index c = 0; c < s.channels; ++c) {
    const Scalar* src = a->value.data().col(c).data();
    Scalar* dst = out.data().col(c).data();
    for (Index r = 0; r < in.batch * in.height; ++r) {
      const Scalar* line = src + r * in.width;
      Scalar* o0 = dst + 2 * r * s.width;
      Scalar* o1 = o0 + s.width;
      for (Index x = 0; x < in.width; ++x) o0[2 * x] = o0[2 * x + 1] = line[x];
      std::copy(o0, o0 + s.width, o1);
    }
  }
  return detail::make_node<Scalar>(std::move(out), {a}, [in](Node<Scalar>& self) {
    const Index ow = in.width * 2;
    typename Node<Scalar>::Matrix g(in.rows(), in.channels);
    for (Index c = 0; c < in.channels; ++c) {
      const Scalar* src = self.grad.data().col(c).data();
      Scalar* dst = g.col(c).data();
      for (Index r = 0; r < in.batch * in.height; ++r) {
        const Scalar* i0 = src + 2 * r * ow;
        const Scalar* i1 = i0 + ow;
        for (Index x = 0; x < in.width; ++x)
          dst[r * in.width + x] = i0[2 * x] + i0[2 * x + 1] + i1[2 * x] + i1[2 * x + 1];
      }
    }
    self.inputs[0]->accumulate(g);
  });
}

//! Per-sample, per-channel normalisation to zero mean and unit variance
//! (no learned affine).
template <typename Scalar>
Var<Scalar> instance_norm(const Var<Scalar>& a, Scalar eps = Scalar(1e-5)) {
  const Shape s = a->value.shape();
  const Index plane = s.plane();
  Tensor<Scalar> out(s);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> inv_std(s.batch, s.channels);
  for (Index c = 0; c < s.channels; ++c) {
    for (Index n = 0; n < s.batch; ++n) {
      auto seg = a->value.data().col(c).segment(n * plane, plane).array();
      const Scalar mean = seg.mean();
      const Scalar var = (seg - mean).square().mean();
      const Scalar is = Scalar(1) / std::sqrt(var + eps);
      inv_std(n, c) = is;
      out.data().col(c).segment(n * plane, plane) = ((seg - mean) * is).matrix();
    }
  }
  return detail::make_node<Scalar>(std::move(out), {a}, [inv_std, plane](Node<Scalar>& self) {
    const Shape& s = self.value.shape();
    typename Node<Scalar>::Matrix g(s.rows(), s.channels);
    for (Index c = 0; c < s.channels; ++c) {
      for (Index n = 0; n < s.batch; ++n) {
        auto dy = self.grad.data().col(c).segment(n * plane, plane).array();
        auto y = self.value.data().col(c).segment(n * plane, plane).array();
        const Scalar mdy = dy.mean();
        const Scalar mdyy = (dy * y).mean();
        g.col(c).segment(n * plane, plane) = ((dy - mdy - y * mdyy) * inv_std(n, c)).matrix();
      }
    }
    self.inputs[0]->accumulate(g);
  });
}

// ---------------------------------------------------------------------------
// Convolution

struct ConvGeometry {
  Index kernel = 3;
  Index stride = 1;
  Index pad = 1;

  Index out_extent(Index in) const { return (in + 2 * pad - kernel) / stride + 1; }
};

namespace detail {

// Output columns [lo, hi) whose input column ox * stride - pad + k is in
// range.
inline std::pair<Index, Index> valid_span(Index out, Index in, Index stride, Index pad, Index k) {
  Index lo = pad - k > 0 ? (pad - k + stride - 1) / stride : 0;
  Index hi = (in + pad - k + stride - 1) / stride;
  lo = std::min(lo, out);
  hi = std::clamp(hi, lo, out);
  return {lo, hi};
}

// Patch matrix with one row per output pixel (whole batch) and one column
// per (input channel, ky, kx).
template <typename Scalar>
typename Tensor<Scalar>::Matrix im2col(const Tensor<Scalar>& x, const ConvGeometry& g, Index oh,
                                       Index ow) {
  const Shape& s = x.shape();
  const Index k = g.kernel, st = g.stride;
  typename Tensor<Scalar>::Matrix col(s.batch * oh * ow, s.channels * k * k);
  for (Index ci = 0; ci < s.channels; ++ci) {
    const Scalar* src = x.data().col(ci).data();
    for (Index ky = 0; ky < k; ++ky) {
      for (Index kx = 0; kx < k; ++kx) {
        Scalar* dst = col.col((ci * k + ky) * k + kx).data();
        const auto [lo, hi] = valid_span(ow, s.width, st, g.pad, kx);
        for (Index n = 0; n < s.batch; ++n) {
          const Scalar* plane = src + n * s.plane();
          for (Index oy = 0; oy < oh; ++oy) {
            const Index iy = oy * st - g.pad + ky;
            Scalar* row = dst + (n * oh + oy) * ow;
            if (iy < 0 || iy >= s.height) {
              std::fill(row, row + ow, Scalar(0));
              continue;
            }
            const Scalar* line = plane + iy * s.width - g.pad + kx;
            std::fill(row, row + lo, Scalar(0));
            if (st == 1) {
              std::copy(line + lo, line + hi, row + lo);
            } else {
              for (Index ox = lo; ox < hi; ++ox) row[ox] = line[ox * st];
            }
            std::fill(row + hi, row + ow, Scalar(0));
          }
        }
      }
    }
  }
  return col;
}

template <typename Scalar>
void col2im(const typename Tensor<Scalar>::Matrix& col, const ConvGeometry& g, Index oh, Index ow,
            Tensor<Scalar>& dx) {
  const Shape& s = dx.shape();
  const Index k = g.kernel, st = g.stride;
  for (Index ci = 0; ci < s.channels; ++ci) {
    Scalar* dst = dx.data().col(ci).data();
    for (Index ky = 0; ky < k; ++ky) {
      for (Index kx = 0; kx < k; ++kx) {
        const Scalar* src = col.col((ci * k + ky) * k + kx).data();
        const auto [lo, hi] = valid_span(ow, s.width, st, g.pad, kx);
        for (Index n = 0; n < s.batch; ++n) {
          Scalar* plane = dst + n * s.plane();
          for (Index oy = 0; oy < oh; ++oy) {
            const Index iy = oy * st - g.pad + ky;
            if (iy < 0 || iy >= s.height) continue;
            const Scalar* row = src + (n * oh + oy) * ow;
            Scalar* line = plane + iy * s.width - g.pad + kx;
            for (Index ox = lo; ox < hi; ++ox) line[ox * st] += row[ox];
          }
        }
      }
    }
  }
}

}  // namespace detail

//! Patch extraction as a graph node. The value is a matrix tensor with one
//! row per output pixel and one column per (channel, ky, kx); several
//! convolutions over the same input can share it.
template <typename Scalar>
struct Patches {
  Var<Scalar> var;
  Shape out;  // spatial geometry of the convolution output (channels unset)
};

template <typename Scalar>
Patches<Scalar> patches(const Var<Scalar>& x, const ConvGeometry& g) {
  const Shape in = x->value.shape();
  const Index oh = g.out_extent(in.height);
  const Index ow = g.out_extent(in.width);
  if (oh <= 0 || ow <= 0) throw ShapeError("convolution input too small: " + in.str());
  auto col = detail::im2col(x->value, g, oh, ow);
  const Index rows = col.rows(), cols = col.cols();
  Tensor<Scalar> value(Shape{1, cols, rows, 1}, std::move(col));
  auto node = detail::make_node<Scalar>(std::move(value), {x}, [g, oh, ow](Node<Scalar>& self) {
    auto& xi = self.inputs[0];
    if (!xi->has_grad()) xi->zero_grad();
    detail::col2im<Scalar>(self.grad.data(), g, oh, ow, xi->grad);
  });
  return {node, Shape{in.batch, 0, oh, ow}};
}

//! patches * weight (+ bias), reshaped to the convolution output. weight is a
//! (Cin*k*k) x Cout matrix tensor, bias (may be null) 1 x Cout.
template <typename Scalar>
Var<Scalar> project(const Patches<Scalar>& p, const Var<Scalar>& weight, const Var<Scalar>& bias) {
  const auto& col = p.var->value.data();
  if (weight->value.data().rows() != col.cols())
    throw ShapeError("convolution weight expects " + std::to_string(weight->value.data().rows()) +
                     " patch entries, input provides " + std::to_string(col.cols()));
  Shape s = p.out;
  s.channels = weight->value.data().cols();
  Tensor<Scalar> out(s);
  out.data().noalias() = col * weight->value.data();
  if (bias) out.data().rowwise() += bias->value.data().row(0);
  std::vector<Var<Scalar>> inputs{p.var, weight};
  if (bias) inputs.push_back(bias);
  return detail::make_node<Scalar>(std::move(out), std::move(inputs), [](Node<Scalar>& self) {
    auto& pi = self.inputs[0];
    auto& wi = self.inputs[1];
    const auto& dout = self.grad.data();
    if (wi->requires_grad) {
      if (!wi->has_grad()) wi->zero_grad();
      wi->grad.data().noalias() += pi->value.data().transpose() * dout;
    }
    if (self.inputs.size() > 2 && self.inputs[2]->requires_grad)
      self.inputs[2]->accumulate(dout.colwise().sum());
    if (pi->requires_grad) {
      if (pi->has_grad()) {
        pi->grad.data().noalias() += dout * wi->value.data().transpose();
      } else {
        typename Node<Scalar>::Matrix g(dout.rows(), wi->value.data().rows());
        g.noalias() = dout * wi->value.data().transpose();
        pi->grad = Tensor<Scalar>(pi->value.shape(), std::move(g));
      }
    }
  });
}

//! 2-D convolution with zero padding.
template <typename Scalar>
Var<Scalar> conv2d(const Var<Scalar>& x, const Var<Scalar>& weight, const Var<Scalar>& bias,
                   const ConvGeometry& g) {
  const Index fan_in = x->value.channels() * g.kernel * g.kernel;
  if (weight->value.data().rows() != fan_in)
    throw ShapeError("conv2d: input has " + std::to_string(x->value.channels()) +
                     " channels, weight expects " +
                     std::to_string(weight->value.data().rows() / (g.kernel * g.kernel)));
  return project(patches(x, g), weight, bias);
}

// ---------------------------------------------------------------------------
// Scalar reductions and losses

template <typename Scalar>
Var<Scalar> mean_abs(const Var<Scalar>& a) {
  const Scalar n = static_cast<Scalar>(a->value.size());
  auto out = detail::scalar_tensor<Scalar>(a->value.array().abs().sum() / n);
  return detail::make_node<Scalar>(std::move(out), {a}, [n](Node<Scalar>& self) {
    auto& in = self.inputs[0];
    const Scalar g = self.grad.data()(0, 0) / n;
    in->accumulate((in->value.array().sign() * g).matrix());
  });
}

//! mean |a - b|.
template <typename Scalar>
Var<Scalar> l1(const Var<Scalar>& a, const Var<Scalar>& b) {
  return mean_abs(sub(a, b));
}

enum class GanForm { log, least_squares };

//! Discriminator/generator criterion on a score map. Log form is
//! -mean log(p) for target "real" and -mean log(1 - p) for "fake", with
//! p = sigmoid(score) and the log argument clamped to [eps, 1 - eps].
//! Least-squares form is mean (score - t)^2 with t in {1, 0}.
template <typename Scalar>
Var<Scalar> gan_criterion(const Var<Scalar>& score, bool target_real, GanForm form,
                          Scalar eps = Scalar(1e-7)) {
  const Scalar n = static_cast<Scalar>(score->value.size());
  const auto& s = score->value.array();
  if (form == GanForm::least_squares) {
    const Scalar t = target_real ? Scalar(1) : Scalar(0);
    auto out = detail::scalar_tensor<Scalar>((s - t).square().sum() / n);
    return detail::make_node<Scalar>(std::move(out), {score}, [n, t](Node<Scalar>& self) {
      auto& in = self.inputs[0];
      const Scalar g = self.grad.data()(0, 0);
      in->accumulate(((in->value.array() - t) * (Scalar(2) * g / n)).matrix());
    });
  }
  auto p = (Scalar(1) / (Scalar(1) + (-s).exp())).eval();
  auto q = (target_real ? p : (Scalar(1) - p)).eval();
  auto clamped = q.max(eps).min(Scalar(1) - eps);
  auto out = detail::scalar_tensor<Scalar>(-clamped.log().sum() / n);
  return detail::make_node<Scalar>(
      std::move(out), {score}, [n, target_real, eps, p, q](Node<Scalar>& self) {
        const Scalar g = self.grad.data()(0, 0) / n;
        auto inside = (q >= eps && q <= Scalar(1) - eps);
        // d(-log p)/ds = -(1 - p); d(-log(1 - p))/ds = p
        auto d = target_real ? (p - Scalar(1)).eval() : p;
        self.inputs[0]->accumulate((inside.select(d, Scalar(0)) * g).matrix());
      });
}

template <typename Scalar>
Var<Scalar> scalar_constant(Scalar v) {
  return constant(detail::scalar_tensor<Scalar>(v));
}

}  // namespace analogic::ad

#endif  // ANALOGIC_AUTOGRAD_HPP
