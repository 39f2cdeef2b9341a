#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cgnn/common.hpp"

namespace cgnn::nn {

/// Trainable tensor: value, gradient accumulator of the same shape, and a
/// stable name used by checkpoints.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  /// Included in the L2 penalty (weight matrices yes, biases no).
  bool regularized{true};

  Parameter() = default;
  Parameter(std::string name_, Matrix value_, bool regularized_ = true)
      : name(std::move(name_)),
        value(std::move(value_)),
        grad(Matrix::Zero(value.rows(), value.cols())),
        regularized(regularized_) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape{nullptr};
  std::size_t id{0};

  const Matrix& value() const;
  double scalar() const { return value()(0, 0); }
};

/// Records a forward computation and replays it backwards.
///
/// Nodes are appended in evaluation order, so reverse insertion order is a
/// valid topological order for the backward sweep.
class Tape {
public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Var constant(Matrix value);
  Var parameter(Parameter& p);
  Var record(Matrix value, Backward backward);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::size_t id) const { return nodes_[id].grad; }
  bool has_grad(std::size_t id) const { return nodes_[id].grad.size() > 0; }

  /// grad[id] += g (allocating on first use).
  void accumulate(std::size_t id, const Matrix& g);

  /// Reverse sweep from a 1x1 loss. Parameter gradients are accumulated
  /// (not overwritten); throws NumericalError on a non-finite gradient.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }

private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

// Differentiable operations. All operands must live on the same tape.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var add_row(Var a, Var row);  // broadcast a 1 x d row over every row of a
Var scale(Var a, double c);
Var elu(Var a);
Var sigmoid(Var a);
Var concat_cols(Var a, Var b);
Var sum_squares(Var a);
/// Mean of (pred_i - target_i)^2 over the listed rows of a column vector.
Var masked_mse(Var pred, const Vector& target, const std::vector<NodeId>& rows);

}  // namespace cgnn::nn
