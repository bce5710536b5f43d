#pragma once

// Data-parallel inner loops shared by the samplers, metrics and objectives.
//
// Each kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The variant is chosen once at startup from the host CPU; setting
// CMLAB_ISA=scalar in the environment pins the scalar path. Results of the two
// paths agree to rounding (reductions sum in a different order).

#include <cstddef>
#include <span>

namespace cmlab::kernels {

enum class Isa { scalar, avx2 };

Isa active_isa();
bool isa_available(Isa isa);
/// Switches the dispatch table. Throws std::invalid_argument if the host lacks `isa`.
void set_isa(Isa isa);
const char* isa_name(Isa isa);

/// out[i] = a * x[i] + b * y[i]. `out` may alias `x` or `y`.
void axpby(double a, std::span<const double> x, double b, std::span<const double> y,
           std::span<double> out);

double dot(std::span<const double> x, std::span<const double> y);

/// Sum of (x[i] - y[i])^2.
double sum_sq_diff(std::span<const double> x, std::span<const double> y);

/// Row-major `rows` holds n rows of length `dim`; out[i] = <row_i, w>.
void project_rows(std::span<const double> rows, std::size_t dim, std::span<const double> w,
                  std::span<double> out);

}  // namespace cmlab::kernels
