#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace nowcaster {

// Runs fn(i) for i in [0, n). Each index owns its output slot, so results
// are identical for any job count.
template <typename Fn>
void parallel_for(size_t n, int jobs, Fn&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const size_t workers = std::min<size_t>(static_cast<size_t>(jobs), n);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (size_t t = 0; t < workers; ++t) {
    threads.emplace_back([&, t] {
      for (size_t i = t; i < n; i += workers) fn(i);
    });
  }
  for (std::thread& th : threads) th.join();
}

}  // namespace nowcaster
