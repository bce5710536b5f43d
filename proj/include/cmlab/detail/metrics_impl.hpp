#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cmlab/errors.hpp"

namespace cmlab {

template <class Quantile>
MetricReport w2_1d_to_quantiles(const SampleBatch& a, Quantile&& quantile) {
  if (a.dim() != 1) throw DimensionError("w2_1d_to_quantiles needs d = 1");
  std::vector<double> xs(a.points.data(), a.points.data() + a.size());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double q = quantile((static_cast<double>(i) + 0.5) / n);
    acc += (xs[i] - q) * (xs[i] - q);
  }
  return {"w2_1d_quantile", std::sqrt(acc / n), MetricMethod::exact_1d, xs.size(), std::nullopt};
}

}  // namespace cmlab
