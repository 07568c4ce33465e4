#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sdsr/parallel.hpp"
#include "support/test_util.hpp"

using namespace sdsr;

namespace {

void set_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n);
#else
  (void)n;
#endif
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 50.0);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

}  // namespace

TEST_CASE("OpenMP framelet kernels agree with the serial reference") {
  for (int levels : {1, 2, 4}) {
    for (auto [h, w] : {std::pair{64, 64}, std::pair{37, 50}, std::pair{9, 130}}) {
      const Image u = test::random_image(h, w, static_cast<std::uint64_t>(levels * 1000 + h));
      const FrameletSystem sys(levels);
      const CoefficientPyramid fast = sys.analyze(u);
      const CoefficientPyramid slow = reference::analyze(levels, u);
      REQUIRE(fast.size() == slow.size());
      double diff = 0.0;
      for (std::size_t i = 0; i < fast.size(); ++i)
        diff = std::max(diff, std::abs(fast.values()[i] - slow.values()[i]));
      CHECK(diff <= 1e-11);

      const CoefficientPyramid c = test::random_pyramid(levels, h, w, static_cast<std::uint64_t>(h * w));
      CHECK(test::max_abs_diff(sys.synthesize(c), reference::synthesize(c)) <= 1e-11);
    }
  }
}

TEST_CASE("reductions are bit-identical for every thread count") {
  const std::size_t sizes[] = {0, 1, 4095, 4096, 4097, 65536 + 17, 256 * 256 * 9};
  for (std::size_t n : sizes) {
    const auto x = random_vector(n, n + 1);
    const auto y = random_vector(n, n + 2);
    set_threads(1);
    const double d1 = par::dot(x, y), s1 = par::sum_squares(x), q1 = par::sum_squared_diff(x, y),
                 m1 = par::max_abs(x);
    for (int t : {2, 3, 8}) {
      set_threads(t);
      CHECK(par::dot(x, y) == d1);
      CHECK(par::sum_squares(x) == s1);
      CHECK(par::sum_squared_diff(x, y) == q1);
      CHECK(par::max_abs(x) == m1);
    }
  }
  set_threads(1);
}

TEST_CASE("reductions match straightforward loops") {
  const auto x = random_vector(20000, 4);
  const auto y = random_vector(20000, 5);
  long double dot = 0, ssd = 0;
  double m = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += static_cast<long double>(x[i]) * y[i];
    ssd += static_cast<long double>(x[i] - y[i]) * (x[i] - y[i]);
    m = std::max(m, std::abs(x[i]));
  }
  CHECK(par::dot(x, y) == doctest::Approx(static_cast<double>(dot)).epsilon(1e-12));
  CHECK(par::sum_squared_diff(x, y) == doctest::Approx(static_cast<double>(ssd)).epsilon(1e-12));
  CHECK(par::max_abs(x) == m);
  CHECK_THROWS(par::dot(x, random_vector(3, 1)));

  auto z = y;
  par::axpy_inplace(-2.5, x, z);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == y[i] + -2.5 * x[i]);
}

TEST_CASE("framelet output does not depend on the thread count") {
  const Image u = load_image(test::data_path("cameraman.pgm"));
  const FrameletSystem sys(4);
  set_threads(1);
  const CoefficientPyramid one = sys.analyze(u);
  const Image back_one = sys.synthesize(one);
  set_threads(4);
  const CoefficientPyramid four = sys.analyze(u);
  CHECK(std::equal(one.values().begin(), one.values().end(), four.values().begin()));
  CHECK(sys.synthesize(four) == back_one);
  set_threads(1);
}

TEST_CASE("SDSR_THREADS parsing") {
  ::setenv("SDSR_THREADS", "3", 1);
#ifdef _OPENMP
  CHECK(par::configure_threads_from_env() == 3);
#else
  CHECK(par::configure_threads_from_env() == 1);
#endif
  for (const char* bad : {"0", "-2", "two", "4x", "99999"}) {
    ::setenv("SDSR_THREADS", bad, 1);
    CHECK_THROWS_AS(par::configure_threads_from_env(), std::invalid_argument);
  }
  ::setenv("SDSR_THREADS", "", 1);
  CHECK_NOTHROW(par::configure_threads_from_env());
  ::unsetenv("SDSR_THREADS");
  set_threads(1);
}
