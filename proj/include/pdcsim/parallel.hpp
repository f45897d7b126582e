#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "pdcsim/random.hpp"

namespace pdcsim {

/// Runs `count` independent trials, `fn(index, rng) -> T`, across `workers`
/// threads. Trial i always receives Rng::for_trial(master_seed, i) and its
/// result lands in slot i, so output does not depend on the worker count.
template <typename T, typename Fn>
std::vector<T> run_trials(std::size_t count, std::uint64_t master_seed,
                          unsigned workers, Fn&& fn) {
  std::vector<T> out(count);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng = Rng::for_trial(master_seed, i);
      out[i] = fn(i, rng);
    }
  };

  workers = std::max(1u, workers);
  if (workers == 1 || count < 2 * workers) {
    work(0, count);
    return out;
  }

  std::exception_ptr failure;
  std::mutex failure_mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (count + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(count, w * chunk);
      const std::size_t end = std::min(count, begin + chunk);
      pool.emplace_back([&, begin, end] {
        try {
          work(begin, end);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace pdcsim
