#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace cmlab {

/// Derives an independent stream seed from (root, tag, index). Every consumer
/// of randomness draws from its own derived stream, so results do not depend on
/// the order in which unrelated operations run.
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag, std::uint64_t index = 0);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double gaussian() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  void fill_gaussian(std::span<double> out) {
    for (double& v : out) v = normal_(engine_);
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace cmlab
