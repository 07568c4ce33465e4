#include "sdsr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sdsr::par {

namespace {

constexpr std::size_t kChunk = 4096;

template <typename ChunkFn>
double chunked_sum(std::size_t n, ChunkFn&& fn) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks, 0.0);
  const auto nchunks = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < nchunks; ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    const std::size_t end = std::min(n, begin + kChunk);
    partial[static_cast<std::size_t>(c)] = fn(begin, end);
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

void require_same_length(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("vector length mismatch");
}

}  // namespace

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int configure_threads_from_env() {
  if (const char* env = std::getenv("SDSR_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1 || n > 4096)
      throw std::invalid_argument(std::string("SDSR_THREADS must be a positive integer, got '") + env + "'");
#ifdef _OPENMP
    omp_set_num_threads(static_cast<int>(n));
#endif
  }
  return max_threads();
}

double dot(std::span<const double> x, std::span<const double> y) {
  require_same_length(x.size(), y.size());
  return chunked_sum(x.size(), [&](std::size_t b, std::size_t e) {
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) s += x[i] * y[i];
    return s;
  });
}

double sum_squares(std::span<const double> x) { return dot(x, x); }

double sum_squared_diff(std::span<const double> x, std::span<const double> y) {
  require_same_length(x.size(), y.size());
  return chunked_sum(x.size(), [&](std::size_t b, std::size_t e) {
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      const double d = x[i] - y[i];
      s += d * d;
    }
    return s;
  });
}

double max_abs(std::span<const double> x) {
  const std::size_t chunks = (x.size() + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks, 0.0);
  const auto nchunks = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < nchunks; ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    const std::size_t end = std::min(x.size(), begin + kChunk);
    double m = 0.0;
    for (std::size_t i = begin; i < end; ++i) m = std::max(m, std::abs(x[i]));
    partial[static_cast<std::size_t>(c)] = m;
  }
  double m = 0.0;
  for (double p : partial) m = std::max(m, p);
  return m;
}

void axpy_inplace(double alpha, std::span<const double> x, std::span<double> y) {
  require_same_length(x.size(), y.size());
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace sdsr::par
