#include "lsepose/common.hpp"

#include <algorithm>
#include <thread>
#include <unordered_set>

namespace lsepose {

std::vector<int> Rng::sample_distinct(int count, int n) {
  n = std::min(n, count);
  std::vector<int> out;
  out.reserve(n);
  if (n <= 0) return out;
  if (n * 3 >= count) {
    // partial Fisher-Yates over an explicit index array
    std::vector<int> idx(count);
    for (int i = 0; i < count; ++i) idx[i] = i;
    for (int i = 0; i < n; ++i) {
      const int j = static_cast<int>(uniform_int(i, count - 1));
      std::swap(idx[i], idx[j]);
      out.push_back(idx[i]);
    }
  } else {
    std::unordered_set<int> seen;
    while (static_cast<int>(out.size()) < n) {
      const int j = static_cast<int>(uniform_int(0, count - 1));
      if (seen.insert(j).second) out.push_back(j);
    }
  }
  return out;
}

int effective_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_for(int begin, int end, int threads, const std::function<void(int, int)>& fn) {
  const int n = end - begin;
  if (n <= 0) return;
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    fn(begin, end);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int lo = begin + t * chunk;
    const int hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(fn, lo, hi);
  }
  for (auto& th : pool) th.join();
}

}  // namespace lsepose
