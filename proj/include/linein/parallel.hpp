#pragma once

// Index-parallel loops. Each index is one independent task; exceptions are
// captured per index and the one with the lowest index is rethrown, so the
// outcome does not depend on thread scheduling.

#include <cstddef>
#include <exception>
#include <vector>

namespace linein {

enum class Execution { Serial, Parallel };

template <class F>
void for_each_index(std::size_t count, Execution exec, F&& body) {
  std::vector<std::exception_ptr> errors(count);
  if (exec == Execution::Parallel) {
    const long n = static_cast<long>(count);
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace linein
