#pragma once

#include <cstddef>

namespace cmlab::kernels {

struct KernelTable {
  void (*axpby)(double a, const double* x, double b, const double* y, double* out, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*sum_sq_diff)(const double* x, const double* y, std::size_t n);
  void (*project_rows)(const double* rows, std::size_t n, std::size_t dim, const double* w, double* out);
};

namespace scalar {
extern const KernelTable table;
}

#ifdef CMLAB_WITH_AVX2
namespace avx2 {
extern const KernelTable table;
}
#endif

}  // namespace cmlab::kernels
