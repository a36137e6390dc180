#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "pinncert/dnn/network.hpp"

namespace pinncert::dnn {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  Network net;
  std::uint64_t seed = 0;
  WeightBound bound;
};

inline nlohmann::json to_json(const Checkpoint& ckpt) {
  nlohmann::json j;
  j["format"] = "pinncert-network";
  j["version"] = kCheckpointVersion;
  j["widths"] = ckpt.net.widths();
  j["activation"] = to_string(ckpt.net.activation());
  j["seed"] = ckpt.seed;
  // JSON has no infinity; an unbounded box is stored as null.
  if (std::isfinite(ckpt.bound.half_width))
    j["bound"] = ckpt.bound.half_width;
  else
    j["bound"] = nullptr;
  const ParamVector theta = ckpt.net.params();
  j["params"] = std::vector<double>(theta.data(), theta.data() + theta.size());
  return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  require(j.value("format", "") == "pinncert-network", "not a network checkpoint");
  require(j.value("version", 0) == kCheckpointVersion, "unsupported checkpoint version");
  Checkpoint ckpt;
  ckpt.net = Network(j.at("widths").get<std::vector<int>>(),
                     parse_activation(j.at("activation").get<std::string>()));
  ckpt.seed = j.value("seed", std::uint64_t{0});
  ckpt.bound = j.at("bound").is_null() ? WeightBound::unbounded()
                                       : WeightBound{j.at("bound").get<double>()};
  const auto params = j.at("params").get<std::vector<double>>();
  ckpt.net.set_params(Eigen::Map<const Eigen::VectorXd>(params.data(),
                                                        static_cast<Eigen::Index>(params.size())));
  return ckpt;
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot write checkpoint " + path);
  out << to_json(ckpt).dump(1) << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot read checkpoint " + path);
  return checkpoint_from_json(nlohmann::json::parse(in));
}

}  // namespace pinncert::dnn
