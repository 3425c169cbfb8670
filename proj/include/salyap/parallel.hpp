#pragma once

#include <exception>
#include <vector>

namespace salyap {

/// Runs body(i) for i in [0, n) across OpenMP threads. The first exception by
/// index is rethrown on the calling thread after the loop finishes.
template <typename Body>
void parallel_for(long n, Body&& body) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n > 0 ? n : 0));
#pragma omp parallel for schedule(dynamic, 4)
  for (long i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace salyap
