#pragma once

#include <map>
#include <vector>

#include "idsc/graph.hpp"

namespace idsc {

// Recomputes a recorded graph in 64-bit floats with plain reference loops,
// independent of the optimized kernels. Used as the function under
// numeric_grad so finite differences are not drowned by 32-bit rounding.
class RefEval {
 public:
  explicit RefEval(const Graph& g) : g_(g) {}

  // Replace a leaf's value for subsequent evaluations.
  void set_leaf(int node_id, const Tensor& value);

  // Evaluate every node up to and including `node_id`; return its first
  // element (callers pass scalar nodes).
  double scalar(int node_id);

  const std::vector<double>& values(int node_id);

 private:
  const Graph& g_;
  std::map<int, std::vector<double>> overrides_;
  std::vector<std::vector<double>> vals_;

  void eval_node(int id);
};

}  // namespace idsc
