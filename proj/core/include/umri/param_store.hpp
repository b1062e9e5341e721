// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "umri/tensor.hpp"

namespace umri {

template <class T>
struct NamedParam {
  std::string name;
  int layer = 0;
  Tensor<T> tensor;
};

/// Ordered, uniquely named collection of trainable tensors. Iteration order is
/// insertion order; every tensor carries a gradient buffer.
template <class T>
class ParamStore {
 public:
  Tensor<T>& add(std::string name, int layer, Tensor<T> tensor) {
    if (find(name) != nullptr) throw std::invalid_argument("duplicate parameter name: " + name);
    tensor.set_requires_grad(true);
    entries_.push_back({std::move(name), layer, std::move(tensor)});
    return entries_.back().tensor;
  }

  Tensor<T>* find(std::string_view name) {
    for (auto& e : entries_) {
      if (e.name == name) return &e.tensor;
    }
    return nullptr;
  }
  const Tensor<T>* find(std::string_view name) const {
    for (const auto& e : entries_) {
      if (e.name == name) return &e.tensor;
    }
    return nullptr;
  }
  Tensor<T>& get(std::string_view name) {
    if (auto* t = find(name)) return *t;
    throw std::out_of_range("no parameter named " + std::string(name));
  }
  const Tensor<T>& get(std::string_view name) const {
    if (const auto* t = find(name)) return *t;
    throw std::out_of_range("no parameter named " + std::string(name));
  }

  std::vector<NamedParam<T>>& entries() noexcept { return entries_; }
  const std::vector<NamedParam<T>>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  auto begin() noexcept { return entries_.begin(); }
  auto end() noexcept { return entries_.end(); }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  std::size_t scalar_count() const noexcept {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.tensor.size();
    return n;
  }

  int max_layer() const noexcept {
    int m = 0;
    for (const auto& e : entries_) m = std::max(m, e.layer);
    return m;
  }

  void zero_grad() {
    for (auto& e : entries_) e.tensor.zero_grad();
  }

  template <class U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& e : entries_) out.add(e.name, e.layer, e.tensor.template cast<U>());
    return out;
  }

  friend bool operator==(const ParamStore& a, const ParamStore& b) {
    if (a.entries_.size() != b.entries_.size()) return false;
    for (std::size_t i = 0; i < a.entries_.size(); ++i) {
      const auto& x = a.entries_[i];
      const auto& y = b.entries_[i];
      if (x.name != y.name || x.layer != y.layer || !(x.tensor == y.tensor)) return false;
    }
    return true;
  }

 private:
  std::vector<NamedParam<T>> entries_;
};

}  // namespace umri
