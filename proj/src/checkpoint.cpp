#include "cgnn/checkpoint.hpp"

#include <map>
#include <string>

namespace cgnn::nn {

using nlohmann::json;

json params_to_json(const std::vector<const Parameter*>& params) {
  json out = json::array();
  for (const auto* p : params) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(p->value.size()));
    for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
      for (Eigen::Index k = 0; k < p->value.cols(); ++k) {
        data.push_back(p->value(i, k));
      }
    }
    out.push_back({{"name", p->name},
                   {"shape", {p->value.rows(), p->value.cols()}},
                   {"data", std::move(data)}});
  }
  return out;
}

void params_from_json(const json& array, const std::vector<Parameter*>& params) {
  std::map<std::string, const json*> by_name;
  for (const auto& entry : array) {
    by_name[entry.at("name").get<std::string>()] = &entry;
  }
  for (auto* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) {
      throw Error("checkpoint is missing parameter " + p->name);
    }
    const json& entry = *it->second;
    const auto shape = entry.at("shape").get<std::vector<Eigen::Index>>();
    const auto data = entry.at("data").get<std::vector<double>>();
    if (shape.size() != 2 || shape[0] != p->value.rows() || shape[1] != p->value.cols() ||
        static_cast<Eigen::Index>(data.size()) != shape[0] * shape[1]) {
      throw DimensionError("checkpoint shape mismatch for " + p->name);
    }
    std::size_t idx = 0;
    for (Eigen::Index i = 0; i < shape[0]; ++i) {
      for (Eigen::Index k = 0; k < shape[1]; ++k) {
        p->value(i, k) = data[idx++];
      }
    }
    p->zero_grad();
  }
}

}  // namespace cgnn::nn
