#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef NARA_HAVE_OPENMP
#include <omp.h>
#endif

namespace nara {

/// Selects the OpenMP loop or the serial reference loop. Both run the same
/// body per index; callers reduce per-index results in index order, so the
/// two paths produce bit-identical output.
enum class Execution { serial, parallel };

inline int available_threads() noexcept {
#ifdef NARA_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int threads) noexcept {
#ifdef NARA_HAVE_OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

/// Runs body(i) for i in [0, n). The first exception thrown by any index is
/// rethrown after the loop completes.
template <class Body>
void for_each_index(std::size_t n, Execution exec, Body&& body) {
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto guarded = [&](std::size_t i) {
    try {
      body(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
#ifdef NARA_HAVE_OPENMP
  if (exec == Execution::parallel && n > 1) {
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < count; ++i) guarded(static_cast<std::size_t>(i));
    if (failure) std::rethrow_exception(failure);
    return;
  }
#else
  (void)exec;
#endif
  for (std::size_t i = 0; i < n; ++i) guarded(i);
  if (failure) std::rethrow_exception(failure);
}

}  // namespace nara
