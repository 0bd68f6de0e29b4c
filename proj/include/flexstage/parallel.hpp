#pragma once

#include <exception>
#include <vector>

#include <omp.h>

namespace flexstage {

/// Runs body(i) for i in [0, n). Iterations must be independent. The first
/// exception in index order is rethrown after the loop completes, so error
/// reporting does not depend on thread scheduling.
template <class Body>
void parallel_for(int n, Body&& body) {
  std::vector<std::exception_ptr> errors(n > 0 ? n : 0);
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

template <class Body>
void serial_for(int n, Body&& body) {
  for (int i = 0; i < n; ++i) body(i);
}

/// Worker budget for all parallel kernels (0 keeps the OpenMP default).
inline void set_worker_count(int jobs) {
  if (jobs > 0) omp_set_num_threads(jobs);
}

}  // namespace flexstage
