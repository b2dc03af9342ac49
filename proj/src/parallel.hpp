#pragma once

// Exception-safe OpenMP loop. Body exceptions are captured per index and the
// one with the smallest index is rethrown after the loop, so failures are
// reported the same way regardless of thread count.

#include <cstddef>
#include <exception>
#include <optional>
#include <utility>

#include <omp.h>

namespace cpbh::detail {

template <class Body>
void parallel_for(std::size_t n, Body&& body, bool dynamic = false) {
  std::optional<std::size_t> first_bad;
  std::exception_ptr first_error;
  const auto count = static_cast<long long>(n);
  auto run = [&](long long i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(cpbh_parallel_for_error)
      {
        if (!first_bad || static_cast<std::size_t>(i) < *first_bad) {
          first_bad = static_cast<std::size_t>(i);
          first_error = std::current_exception();
        }
      }
    }
  };
  if (dynamic) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < count; ++i) run(i);
  } else {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < count; ++i) run(i);
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace cpbh::detail
