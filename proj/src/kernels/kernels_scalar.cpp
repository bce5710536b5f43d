#include <cmath>

#include "kernels_impl.hpp"

namespace cmlab::kernels::scalar {

namespace {

void axpby(double a, const double* x, double b, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::fma(a, x[i], b * y[i]);
}

double dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_sq_diff(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc;
}

void project_rows(const double* rows, std::size_t n, std::size_t dim, const double* w, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = rows + i * dim;
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) acc += r[j] * w[j];
    out[i] = acc;
  }
}

}  // namespace

const KernelTable table{&axpby, &dot, &sum_sq_diff, &project_rows};

}  // namespace cmlab::kernels::scalar
