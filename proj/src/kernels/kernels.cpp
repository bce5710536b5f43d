#include "cmlab/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string_view>

#include "kernels_impl.hpp"

namespace cmlab::kernels {

namespace {

bool host_has_avx2() {
#if defined(CMLAB_WITH_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& table_for(Isa isa) {
#ifdef CMLAB_WITH_AVX2
  if (isa == Isa::avx2) return avx2::table;
#endif
  (void)isa;
  return scalar::table;
}

Isa initial_isa() {
  if (const char* env = std::getenv("CMLAB_ISA"); env != nullptr && std::string_view(env) == "scalar") {
    return Isa::scalar;
  }
  return host_has_avx2() ? Isa::avx2 : Isa::scalar;
}

struct Dispatch {
  std::atomic<Isa> isa{initial_isa()};
  std::atomic<const KernelTable*> table{&table_for(isa.load())};
};

Dispatch& dispatch() {
  static Dispatch d;
  return d;
}

const KernelTable& active() { return *dispatch().table.load(std::memory_order_relaxed); }

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string("kernel size mismatch in ") + what);
}

}  // namespace

Isa active_isa() { return dispatch().isa.load(); }

bool isa_available(Isa isa) { return isa == Isa::scalar || host_has_avx2(); }

void set_isa(Isa isa) {
  if (!isa_available(isa)) throw std::invalid_argument(std::string("ISA not available: ") + isa_name(isa));
  dispatch().isa.store(isa);
  dispatch().table.store(&table_for(isa));
}

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void axpby(double a, std::span<const double> x, double b, std::span<const double> y, std::span<double> out) {
  require_same_size(x.size(), y.size(), "axpby");
  require_same_size(x.size(), out.size(), "axpby");
  active().axpby(a, x.data(), b, y.data(), out.data(), x.size());
}

double dot(std::span<const double> x, std::span<const double> y) {
  require_same_size(x.size(), y.size(), "dot");
  return active().dot(x.data(), y.data(), x.size());
}

double sum_sq_diff(std::span<const double> x, std::span<const double> y) {
  require_same_size(x.size(), y.size(), "sum_sq_diff");
  return active().sum_sq_diff(x.data(), y.data(), x.size());
}

void project_rows(std::span<const double> rows, std::size_t dim, std::span<const double> w,
                  std::span<double> out) {
  if (dim == 0 || w.size() != dim || rows.size() != out.size() * dim) {
    throw std::invalid_argument("kernel size mismatch in project_rows");
  }
  active().project_rows(rows.data(), out.size(), dim, w.data(), out.data());
}

}  // namespace cmlab::kernels
