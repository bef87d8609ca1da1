#pragma once

#include <algorithm>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

#include <Eigen/Core>

namespace ulmc {

/// Statically partitions [0, n) into at most `n_threads` contiguous ranges and
/// runs body(begin, end) on each, joining before return. Work item i must
/// write only slot i of any shared output; ranges never overlap, so no
/// synchronization is needed and results are independent of the thread count.
/// The first captured exception (lowest range) is rethrown after the join.
inline void parallel_for(
    Eigen::Index n, int n_threads,
    const std::function<void(Eigen::Index, Eigen::Index)>& body) {
  if (n <= 0) return;
  const int workers =
      std::max(1, std::min<int>(n_threads, int(std::min<Eigen::Index>(n, 64))));
  if (workers == 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors;
  errors.resize(std::size_t(workers));
  const Eigen::Index chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const Eigen::Index begin = Eigen::Index(w) * chunk;
    const Eigen::Index end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, &errors, begin, end, w] {
      try {
        body(begin, end);
      } catch (...) {
        errors[std::size_t(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& ep : errors) {
    if (ep) std::rethrow_exception(ep);
  }
}

}  // namespace ulmc
