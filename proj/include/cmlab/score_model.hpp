#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "cmlab/distributions.hpp"
#include "cmlab/types.hpp"

namespace cmlab {

struct ScoreProvenance {
  std::string kind = "exact";  ///< "exact", "perturbed" or "recovered"
  double eps_target = 0.0;
  std::uint64_t seed = 0;
};

/// A score field s(x, t) approximating grad log p_t.
class ScoreModel {
 public:
  using Fn = std::function<Vec(const Vec& x, double t)>;

  ScoreModel(std::size_t dim, Fn fn, ScoreProvenance provenance)
      : dim_(dim), fn_(std::move(fn)), provenance_(std::move(provenance)) {}

  /// The exact score of the OU marginals of `dist`.
  static ScoreModel exact(const MixtureParams& dist) {
    return ScoreModel(dist.dim(), [dist](const Vec& x, double t) { return score(dist, t, x); }, ScoreProvenance{});
  }

  Vec operator()(const Vec& x, double t) const { return fn_(x, t); }
  std::size_t dim() const { return dim_; }
  const ScoreProvenance& provenance() const { return provenance_; }

  std::optional<double> measured_eps_sc;

 private:
  std::size_t dim_;
  Fn fn_;
  ScoreProvenance provenance_;
};

}  // namespace cmlab
