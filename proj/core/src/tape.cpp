// SPDX-License-Identifier: Apache-2.0
#include "umri/tape.hpp"

namespace umri {

template <class T>
typename Tape<T>::Var Tape<T>::push(Node node) {
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

template <class T>
typename Tape<T>::Var Tape<T>::constant(Tensor<T> value) {
  Node n;
  n.op = Op::constant;
  n.value = std::move(value);
  return push(std::move(n));
}

template <class T>
typename Tape<T>::Var Tape<T>::parameter(Tensor<T>& param) {
  Node n;
  n.op = Op::parameter;
  n.param = &param;
  return push(std::move(n));
}

template <class T>
const Tensor<T>& Tape<T>::value(Var v) const {
  const Node& n = nodes_.at(v);
  return n.op == Op::parameter ? *n.param : n.value;
}

template <class T>
typename Tape<T>::Var Tape<T>::conv2d(Var input, Var weight, Var bias) {
  Node n;
  n.op = Op::conv2d;
  n.value = umri::conv2d(value(input), value(weight), value(bias));
  n.inputs = {input, weight, bias};
  return push(std::move(n));
}

template <class T>
typename Tape<T>::Var Tape<T>::upsample(Var input, std::size_t out_h, std::size_t out_w, UpsampleMode mode) {
  Node n;
  n.op = Op::upsample;
  n.value = umri::upsample(value(input), out_h, out_w, mode);
  n.inputs = {input};
  n.mode = mode;
  return push(std::move(n));
}

template <class T>
typename Tape<T>::Var Tape<T>::relu(Var input) {
  Node n;
  n.op = Op::relu;
  n.value = umri::relu(value(input));
  n.inputs = {input};
  return push(std::move(n));
}

template <class T>
typename Tape<T>::Var Tape<T>::batchnorm(Var input, Var scale, Var shift, T eps) {
  Node n;
  n.op = Op::batchnorm;
  n.value = batchnorm_channels(value(input), value(scale), value(shift), eps);
  n.inputs = {input, scale, shift};
  n.eps = eps;
  return push(std::move(n));
}

template <class T>
void Tape<T>::accumulate(std::vector<Tensor<T>>& grads, Var v, const Tensor<T>& g) const {
  if (nodes_[v].op == Op::constant) return;
  if (grads[v].empty()) {
    grads[v] = g;
    return;
  }
  auto dst = grads[v].data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <class T>
void Tape<T>::backward(Var out, const Tensor<T>& seed) {
  if (seed.shape() != value(out).shape()) {
    throw DimensionError("Tape::backward: seed shape " + shape_string(seed.shape()) + " does not match output " +
                         shape_string(value(out).shape()));
  }
  std::vector<Tensor<T>> grads(nodes_.size());
  grads[out] = seed;
  for (Var v = out + 1; v-- > 0;) {
    if (grads[v].empty()) continue;
    const Node& n = nodes_[v];
    const Tensor<T>& g = grads[v];
    switch (n.op) {
      case Op::constant:
        break;
      case Op::parameter: {
        Tensor<T>& p = *n.param;
        if (!p.has_grad()) p.set_requires_grad(true);
        auto dst = p.grad();
        auto src = g.data();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
        break;
      }
      case Op::conv2d: {
        auto cg = conv2d_backward(value(n.inputs[0]), value(n.inputs[1]), g);
        accumulate(grads, n.inputs[0], cg.input);
        accumulate(grads, n.inputs[1], cg.weight);
        accumulate(grads, n.inputs[2], cg.bias);
        break;
      }
      case Op::upsample: {
        const Tensor<T>& in = value(n.inputs[0]);
        accumulate(grads, n.inputs[0], upsample_backward(g, in.dim(1), in.dim(2), n.mode));
        break;
      }
      case Op::relu:
        accumulate(grads, n.inputs[0], relu_backward(value(n.inputs[0]), g));
        break;
      case Op::batchnorm: {
        auto bg = batchnorm_channels_backward(value(n.inputs[0]), value(n.inputs[1]), g, n.eps);
        accumulate(grads, n.inputs[0], bg.input);
        accumulate(grads, n.inputs[1], bg.scale);
        accumulate(grads, n.inputs[2], bg.shift);
        break;
      }
    }
    grads[v] = Tensor<T>();
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace umri
