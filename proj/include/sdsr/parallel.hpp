#pragma once

#include <cstddef>
#include <span>

// Data-parallel building blocks shared by the solver and transforms.
//
// Reductions are computed over fixed-size chunks whose partial sums are
// combined in chunk order, so results are bit-identical for any thread count.

namespace sdsr::par {

/// Number of worker threads used by OpenMP regions (1 when built without OpenMP).
int max_threads() noexcept;

/// Applies the SDSR_THREADS environment override, if set. Returns the thread count in effect.
int configure_threads_from_env();

double dot(std::span<const double> x, std::span<const double> y);
double sum_squares(std::span<const double> x);
double sum_squared_diff(std::span<const double> x, std::span<const double> y);
double max_abs(std::span<const double> x);

/// y += alpha * x
void axpy_inplace(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace sdsr::par
