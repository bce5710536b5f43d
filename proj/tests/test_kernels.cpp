#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cmlab/kernels.hpp"

namespace k = cmlab::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, unsigned seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(g);
  return v;
}

// Restores the dispatch chosen at startup after each test.
class KernelEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    saved_ = k::active_isa();
    if (!k::isa_available(k::Isa::avx2)) GTEST_SKIP() << "host has no AVX2";
  }
  void TearDown() override { k::set_isa(saved_); }
  k::Isa saved_ = k::Isa::scalar;
};

}  // namespace

TEST(Kernels, ScalarAlwaysAvailable) {
  EXPECT_TRUE(k::isa_available(k::Isa::scalar));
  EXPECT_STREQ(k::isa_name(k::Isa::scalar), "scalar");
  EXPECT_STREQ(k::isa_name(k::Isa::avx2), "avx2");
}

TEST(Kernels, ScalarReferenceValues) {
  const k::Isa saved = k::active_isa();
  k::set_isa(k::Isa::scalar);
  const std::vector<double> x{1, 2, 3}, y{4, 5, 6};
  std::vector<double> out(3);
  k::axpby(2.0, x, -1.0, y, out);
  EXPECT_EQ(out, (std::vector<double>{-2, -1, 0}));
  EXPECT_EQ(k::dot(x, y), 32.0);
  EXPECT_EQ(k::sum_sq_diff(x, y), 27.0);
  const std::vector<double> rows{1, 2, 3, 4, 5, 6};  // 3 rows of length 2
  std::vector<double> proj(3);
  k::project_rows(rows, 2, std::vector<double>{1, -1}, proj);
  EXPECT_EQ(proj, (std::vector<double>{-1, -1, -1}));
  k::set_isa(saved);
}

TEST(Kernels, SizeMismatchThrows) {
  std::vector<double> a(3), b(4), out(3);
  EXPECT_THROW(k::axpby(1.0, a, 1.0, b, out), std::invalid_argument);
  EXPECT_THROW(k::dot(a, b), std::invalid_argument);
  EXPECT_THROW(k::sum_sq_diff(a, b), std::invalid_argument);
  std::vector<double> rows(6), w(2), proj(2);
  EXPECT_THROW(k::project_rows(rows, 2, w, proj), std::invalid_argument);
}

TEST_F(KernelEquivalence, AxpbyMatchesScalarAcrossTails) {
  for (std::size_t n = 0; n < 70; ++n) {
    const auto x = random_vec(n, 1 + n), y = random_vec(n, 100 + n);
    std::vector<double> ref(n), simd(n);
    k::set_isa(k::Isa::scalar);
    k::axpby(0.7, x, -1.3, y, ref);
    k::set_isa(k::Isa::avx2);
    k::axpby(0.7, x, -1.3, y, simd);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(simd[i], ref[i], 1e-15 * (1 + std::abs(ref[i])));
  }
}

TEST_F(KernelEquivalence, AxpbyInPlace) {
  auto x = random_vec(37, 5);
  const auto y = random_vec(37, 6);
  auto expect = x;
  k::set_isa(k::Isa::scalar);
  k::axpby(2.0, expect, 3.0, y, expect);
  k::set_isa(k::Isa::avx2);
  k::axpby(2.0, x, 3.0, y, x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i], expect[i], 1e-14);
}

TEST_F(KernelEquivalence, ReductionsMatchScalar) {
  for (std::size_t n : {0, 1, 3, 4, 7, 8, 15, 16, 17, 1000, 100003}) {
    const auto x = random_vec(n, 7 + n), y = random_vec(n, 9 + n);
    k::set_isa(k::Isa::scalar);
    const double d0 = k::dot(x, y), s0 = k::sum_sq_diff(x, y);
    k::set_isa(k::Isa::avx2);
    const double d1 = k::dot(x, y), s1 = k::sum_sq_diff(x, y);
    const double scale = 1e-13 * (1.0 + static_cast<double>(n));
    EXPECT_NEAR(d1, d0, scale);
    EXPECT_NEAR(s1, s0, scale);
  }
}

TEST_F(KernelEquivalence, ProjectRowsMatchesScalar) {
  for (std::size_t dim : {1, 2, 3, 4, 5, 32}) {
    for (std::size_t n : {1, 2, 3, 4, 5, 9, 257}) {
      const auto rows = random_vec(n * dim, 11 + n + 31 * dim);
      const auto w = random_vec(dim, 13 + dim);
      std::vector<double> ref(n), simd(n);
      k::set_isa(k::Isa::scalar);
      k::project_rows(rows, dim, w, ref);
      k::set_isa(k::Isa::avx2);
      k::project_rows(rows, dim, w, simd);
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(simd[i], ref[i], 1e-13) << "dim " << dim << " n " << n;
    }
  }
}
