#include "cgnn/metrics.hpp"

#include <cmath>

namespace cgnn {

std::string to_string(EffectKind kind) {
  switch (kind) {
    case EffectKind::Main:
      return "main";
    case EffectKind::Peer:
      return "peer";
    case EffectKind::Total:
      return "total";
    case EffectKind::Outcome:
      return "outcome";
  }
  return "unknown";
}

namespace {

double mean_squared_difference(std::span<const double> a, std::span<const double> b,
                               const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": length mismatch");
  }
  if (a.empty()) {
    throw InvalidValueError(std::string(what) + ": empty input");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

}  // namespace

MetricResult pehe(std::span<const double> predicted, std::span<const double> truth,
                  EffectKind kind) {
  const double v = std::sqrt(mean_squared_difference(predicted, truth, "pehe"));
  return {"pehe_" + to_string(kind), v, predicted.size(), kind};
}

MetricResult mse(std::span<const double> predicted, std::span<const double> truth) {
  return {"mse", mean_squared_difference(predicted, truth, "mse"), predicted.size(),
          EffectKind::Outcome};
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  out.n = values.size();
  if (values.empty()) {
    return out;
  }
  double sum = 0.0;
  for (double v : values) {
    sum += v;
  }
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) {
      ss += (v - out.mean) * (v - out.mean);
    }
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

}  // namespace cgnn
