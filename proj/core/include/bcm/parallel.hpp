#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bcm {

// Scenarios are processed in fixed-size blocks; block b always uses RNG
// substream b, so results do not depend on the number of workers.
inline constexpr std::size_t kScenarioBlock = 4096;

inline std::size_t block_count(std::size_t n, std::size_t block) { return (n + block - 1) / block; }

// Calls fn(b, begin, end) for every block b of [0, n) on up to `workers`
// threads. The first exception thrown by any block is rethrown here.
template <class Fn>
void for_each_block(std::size_t n, std::size_t block, std::size_t workers, Fn&& fn) {
  const std::size_t nb = block_count(n, block);
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(nb, 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto run = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= nb) return;
      try {
        fn(b, b * block, std::min(n, (b + 1) * block));
      } catch (...) {
        std::lock_guard lk(err_mu);
        if (!err) err = std::current_exception();
        next = nb;
      }
    }
  };
  if (workers == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace bcm
