#pragma once

#include <span>
#include <string>
#include <vector>

#include "cgnn/common.hpp"

namespace cgnn {

enum class EffectKind { Main, Peer, Total, Outcome };

std::string to_string(EffectKind kind);

struct MetricResult {
  std::string name;
  double value{0.0};
  std::size_t n{0};
  EffectKind kind{EffectKind::Outcome};
};

/// sqrt(mean_i (predicted_i - true_i)^2) over per-node effect deltas.
MetricResult pehe(std::span<const double> predicted, std::span<const double> truth,
                  EffectKind kind = EffectKind::Main);

/// mean_i (predicted_i - true_i)^2.
MetricResult mse(std::span<const double> predicted, std::span<const double> truth);

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

struct MeanStd {
  double mean{0.0};
  double std{0.0};  // sample standard deviation (n - 1); 0 for a single value
  std::size_t n{0};
};

MeanStd mean_std(std::span<const double> values);

}  // namespace cgnn
