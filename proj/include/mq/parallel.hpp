#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <type_traits>
#include <vector>

#include "mq/sampling.hpp"

namespace mq {

/// Runs fn(trial, rng) for each trial on a child stream split from `rng` by
/// trial index. Results are returned in trial order, so the outcome does not
/// depend on the number of worker threads.
template <class Fn>
auto parallel_trials(std::size_t trials, const RandomSource& rng, Fn&& fn,
                     std::size_t max_threads = 0) {
  using Result = std::invoke_result_t<Fn&, std::size_t, RandomSource&>;
  std::vector<Result> results(trials);
  std::size_t workers = max_threads ? max_threads : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(trials, 1));

  std::vector<std::exception_ptr> errors(workers);
  auto body = [&](std::size_t worker) {
    try {
      for (std::size_t t = worker; t < trials; t += workers) {
        RandomSource child = rng.split(static_cast<std::uint64_t>(t));
        results[t] = fn(t, child);
      }
    } catch (...) {
      errors[worker] = std::current_exception();
    }
  };
  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(body, w);
    for (auto& th : threads) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace mq
