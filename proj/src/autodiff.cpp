#include "cgnn/autodiff.hpp"

#include <cmath>

namespace cgnn::nn {

const Matrix& Var::value() const { return tape->value(id); }

Var Tape::constant(Matrix value) { return record(std::move(value), nullptr); }

Var Tape::parameter(Parameter& p) {
  Parameter* target = &p;
  return record(p.value, [target](Tape& t, std::size_t self) { target->grad += t.grad(self); });
}

Var Tape::record(Matrix value, Backward backward) {
  nodes_.push_back({std::move(value), Matrix(), std::move(backward)});
  return {this, nodes_.size() - 1};
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  auto& node = nodes_[id];
  if (node.grad.size() == 0) {
    node.grad = g;
  } else {
    node.grad += g;
  }
}

void Tape::backward(Var loss) {
  if (loss.tape != this || nodes_[loss.id].value.size() != 1) {
    throw DimensionError("backward: loss must be a 1x1 node on this tape");
  }
  for (auto& n : nodes_) {
    n.grad.resize(0, 0);
  }
  nodes_[loss.id].grad = Matrix::Ones(1, 1);
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    auto& node = nodes_[id];
    if (node.grad.size() == 0 || !node.backward) {
      continue;
    }
    if (!node.grad.allFinite()) {
      throw NumericalError("backward: non-finite gradient on tape node " + std::to_string(id));
    }
    node.backward(*this, id);
  }
}

namespace {

void same_tape(Var a, Var b) {
  if (a.tape != b.tape) {
    throw Error("operands recorded on different tapes");
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  same_tape(a, b);
  if (a.value().cols() != b.value().rows()) {
    throw DimensionError("matmul: inner dimensions differ");
  }
  return a.tape->record(a.value() * b.value(), [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    t.accumulate(a.id, g * t.value(b.id).transpose());
    t.accumulate(b.id, t.value(a.id).transpose() * g);
  });
}

Var add(Var a, Var b) {
  same_tape(a, b);
  if (a.value().rows() != b.value().rows() || a.value().cols() != b.value().cols()) {
    throw DimensionError("add: shape mismatch");
  }
  return a.tape->record(a.value() + b.value(), [a, b](Tape& t, std::size_t self) {
    t.accumulate(a.id, t.grad(self));
    t.accumulate(b.id, t.grad(self));
  });
}

Var add_row(Var a, Var row) {
  same_tape(a, row);
  if (row.value().rows() != 1 || row.value().cols() != a.value().cols()) {
    throw DimensionError("add_row: row shape mismatch");
  }
  Matrix out = a.value().rowwise() + row.value().row(0);
  return a.tape->record(std::move(out), [a, row](Tape& t, std::size_t self) {
    t.accumulate(a.id, t.grad(self));
    t.accumulate(row.id, t.grad(self).colwise().sum());
  });
}

Var scale(Var a, double c) {
  return a.tape->record(a.value() * c,
                        [a, c](Tape& t, std::size_t self) { t.accumulate(a.id, t.grad(self) * c); });
}

Var elu(Var a) {
  Matrix out = a.value().unaryExpr([](double v) { return v > 0.0 ? v : std::expm1(v); });
  return a.tape->record(std::move(out), [a](Tape& t, std::size_t self) {
    const Matrix& x = t.value(a.id);
    Matrix d = x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : std::exp(v); });
    t.accumulate(a.id, t.grad(self).cwiseProduct(d));
  });
}

Var sigmoid(Var a) {
  Matrix out = a.value().unaryExpr([](double v) { return cgnn::sigmoid(v); });
  return a.tape->record(std::move(out), [a](Tape& t, std::size_t self) {
    const Matrix& s = t.value(self);
    Matrix d = s.cwiseProduct((1.0 - s.array()).matrix());
    t.accumulate(a.id, t.grad(self).cwiseProduct(d));
  });
}

Var concat_cols(Var a, Var b) {
  same_tape(a, b);
  if (a.value().rows() != b.value().rows()) {
    throw DimensionError("concat_cols: row counts differ");
  }
  const auto ca = a.value().cols();
  const auto cb = b.value().cols();
  Matrix out(a.value().rows(), ca + cb);
  out << a.value(), b.value();
  return a.tape->record(std::move(out), [a, b, ca, cb](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    t.accumulate(a.id, g.leftCols(ca));
    t.accumulate(b.id, g.rightCols(cb));
  });
}

Var sum_squares(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().squaredNorm();
  return a.tape->record(std::move(out), [a](Tape& t, std::size_t self) {
    t.accumulate(a.id, 2.0 * t.grad(self)(0, 0) * t.value(a.id));
  });
}

Var masked_mse(Var pred, const Vector& target, const std::vector<NodeId>& rows) {
  const Matrix& p = pred.value();
  if (p.cols() != 1 || p.rows() != target.size()) {
    throw DimensionError("masked_mse: prediction must be an n x 1 column matching target");
  }
  if (rows.empty()) {
    throw InvalidValueError("masked_mse: empty row set");
  }
  double acc = 0.0;
  for (NodeId i : rows) {
    const double r = p(i, 0) - target[i];
    acc += r * r;
  }
  const double inv_m = 1.0 / static_cast<double>(rows.size());
  Matrix out(1, 1);
  out(0, 0) = acc * inv_m;
  return pred.tape->record(std::move(out), [pred, target, rows, inv_m](Tape& t, std::size_t self) {
    const Matrix& p = t.value(pred.id);
    Matrix g = Matrix::Zero(p.rows(), 1);
    const double up = t.grad(self)(0, 0);
    for (NodeId i : rows) {
      g(i, 0) = 2.0 * inv_m * up * (p(i, 0) - target[i]);
    }
    t.accumulate(pred.id, g);
  });
}

}  // namespace cgnn::nn
