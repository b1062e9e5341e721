// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "umri/ops.hpp"
#include "umri/tensor.hpp"

namespace umri {

/// Records a forward computation over the decoder op set and replays it in
/// reverse. Parameter leaves refer to caller-owned tensors (which must outlive
/// the tape) and receive accumulated gradients in their grad buffers.
template <class T>
class Tape {
 public:
  using Var = std::size_t;

  Var constant(Tensor<T> value);
  Var parameter(Tensor<T>& param);

  Var conv2d(Var input, Var weight, Var bias);
  Var upsample(Var input, std::size_t out_h, std::size_t out_w, UpsampleMode mode);
  Var relu(Var input);
  Var batchnorm(Var input, Var scale, Var shift, T eps = static_cast<T>(kBatchNormEps));

  const Tensor<T>& value(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Propagates seed = dL/d(value(out)) to every parameter leaf.
  void backward(Var out, const Tensor<T>& seed);

 private:
  enum class Op { constant, parameter, conv2d, upsample, relu, batchnorm };

  struct Node {
    Op op = Op::constant;
    Tensor<T> value;
    Tensor<T>* param = nullptr;
    std::vector<Var> inputs;
    UpsampleMode mode = UpsampleMode::nearest;
    T eps{};
  };

  Var push(Node node);
  void accumulate(std::vector<Tensor<T>>& grads, Var v, const Tensor<T>& g) const;

  std::vector<Node> nodes_;
};

}  // namespace umri
