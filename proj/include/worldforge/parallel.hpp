#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace worldforge {

inline int resolve_threads(int requested)
{
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Calls fn(i) for i in [0, n). Work is split into interleaved stripes; results must not depend on
// which worker runs which index.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn)
{
  const int workers = std::min(resolve_threads(threads), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace worldforge
