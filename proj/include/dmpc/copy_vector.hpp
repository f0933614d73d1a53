/*
 * Copyright 2026 The dmpc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DMPC_COPY_VECTOR_HPP
#define DMPC_COPY_VECTOR_HPP

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "dmpc/dynamics.hpp"

namespace dmpc {

/// Shape of a stacked multi-agent horizon vector. Agent j's block holds its
/// N+1 states followed by its N inputs.
struct StackLayout {
  int agents = 0;
  int horizon = 0;
  int n = 0;

  int state_dim() const { return 2 * n; }
  int states_size() const { return 2 * n * (horizon + 1); }
  int block_size() const { return states_size() + n * horizon; }
  int size() const { return agents * block_size(); }
  int block_offset(int j) const { return j * block_size(); }
  int state_offset(int j, int k) const { return block_offset(j) + 2 * n * k; }
  int position_offset(int j, int k) const { return state_offset(j, k); }
  int input_offset(int j, int k) const { return block_offset(j) + states_size() + n * k; }

  friend bool operator==(const StackLayout&, const StackLayout&) = default;
};

/// One agent's local copies of every agent's horizon trajectory. The network
/// average and the consensus multipliers share this shape.
class CopyVector {
 public:
  CopyVector() = default;
  explicit CopyVector(const StackLayout& layout)
      : layout_(layout), data_(Eigen::VectorXd::Zero(layout.size())) {
    if (layout.agents < 1 || layout.horizon < 1 || (layout.n != 2 && layout.n != 3)) {
      throw std::invalid_argument("CopyVector: invalid layout (M=" +
                                  std::to_string(layout.agents) + ", N=" +
                                  std::to_string(layout.horizon) + ", n=" +
                                  std::to_string(layout.n) + ")");
    }
  }
  CopyVector(const StackLayout& layout, Eigen::VectorXd data) : CopyVector(layout) {
    if (data.size() != layout.size()) {
      throw std::invalid_argument("CopyVector: data length does not match layout");
    }
    data_ = std::move(data);
  }

  const StackLayout& layout() const { return layout_; }
  int agents() const { return layout_.agents; }
  int horizon() const { return layout_.horizon; }
  int dim() const { return layout_.n; }

  Eigen::VectorXd& data() { return data_; }
  const Eigen::VectorXd& data() const { return data_; }

  auto block(int j) { return data_.segment(layout_.block_offset(j), layout_.block_size()); }
  auto block(int j) const { return data_.segment(layout_.block_offset(j), layout_.block_size()); }
  auto state(int j, int k) { return data_.segment(layout_.state_offset(j, k), 2 * layout_.n); }
  auto state(int j, int k) const {
    return data_.segment(layout_.state_offset(j, k), 2 * layout_.n);
  }
  auto position(int j, int k) { return data_.segment(layout_.position_offset(j, k), layout_.n); }
  auto position(int j, int k) const {
    return data_.segment(layout_.position_offset(j, k), layout_.n);
  }
  auto input(int j, int k) { return data_.segment(layout_.input_offset(j, k), layout_.n); }
  auto input(int j, int k) const {
    return data_.segment(layout_.input_offset(j, k), layout_.n);
  }

  Trajectory trajectory(int j) const {
    Trajectory t;
    for (int k = 0; k <= horizon(); ++k) t.states.emplace_back(state(j, k));
    for (int k = 0; k < horizon(); ++k) t.inputs.emplace_back(input(j, k));
    return t;
  }

  void set_trajectory(int j, const Trajectory& t) {
    if (static_cast<int>(t.states.size()) != horizon() + 1 ||
        static_cast<int>(t.inputs.size()) != horizon()) {
      throw std::invalid_argument("CopyVector::set_trajectory: horizon mismatch");
    }
    for (int k = 0; k <= horizon(); ++k) state(j, k) = t.states[k];
    for (int k = 0; k < horizon(); ++k) input(j, k) = t.inputs[k];
  }

  bool same_shape(const CopyVector& other) const { return layout_ == other.layout_; }

 private:
  StackLayout layout_;
  Eigen::VectorXd data_;
};

using NetworkAverage = CopyVector;
using Multiplier = CopyVector;

inline void require_same_shape(const CopyVector& a, const CopyVector& b, const char* who) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(who) + ": shape mismatch");
}

/// Receding-horizon shift: drop step 0 of every block and repeat the last entry.
inline CopyVector shifted(const CopyVector& v) {
  CopyVector out = v;
  const int N = v.horizon();
  for (int j = 0; j < v.agents(); ++j) {
    for (int k = 0; k < N; ++k) out.state(j, k) = v.state(j, k + 1);
    for (int k = 0; k + 1 < N; ++k) out.input(j, k) = v.input(j, k + 1);
  }
  return out;
}

}  // namespace dmpc

#endif  // DMPC_COPY_VECTOR_HPP
