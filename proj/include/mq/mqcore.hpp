#pragma once

// The MultiQueue: n sequential binary heaps, each behind its own mutex.
// Insertions go to a uniformly random queue; a deletion compares the
// published minima of c random queues and pops from the best one.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mq/chain.hpp"
#include "mq/choice.hpp"
#include "mq/errors.hpp"
#include "mq/rank_index.hpp"
#include "mq/sampling.hpp"

namespace mq {

/// Ordered lexicographically by (key, uid).
struct Element {
  std::uint64_t key = 0;
  std::uint64_t uid = 0;

  friend auto operator<=>(const Element&, const Element&) = default;
};

/// Which queues a deletion compares.
class DeletionScheme {
 public:
  static DeletionScheme best_of(double c) { return DeletionScheme(CParameter(c)); }
  static DeletionScheme best_of(const CParameter& c) { return DeletionScheme(c); }
  /// Compares every queue: a strict priority queue, for debugging.
  static DeletionScheme all_queues() { return DeletionScheme(std::nullopt); }

  bool compares_all() const noexcept { return !c_; }
  const std::optional<CParameter>& c() const noexcept { return c_; }

 private:
  explicit DeletionScheme(std::optional<CParameter> c) : c_(c) {}
  std::optional<CParameter> c_;
};

struct Popped {
  Element element;
  std::size_t queue = 0;  // 0-based queue id
};

class MultiQueue {
 public:
  static constexpr std::uint64_t kEmpty = std::numeric_limits<std::uint64_t>::max();

  explicit MultiQueue(std::size_t n) : n_(n) {
    if (n == 0) throw ParameterError("MultiQueue needs at least one queue");
    shards_ = std::make_unique<Shard[]>(n);
  }

  MultiQueue(const MultiQueue&) = delete;
  MultiQueue& operator=(const MultiQueue&) = delete;

  std::size_t queue_count() const noexcept { return n_; }

  /// Inserts `key` into a uniformly random queue; returns the new uid.
  std::uint64_t insert(std::uint64_t key, RandomSource& rng) {
    return insert_into(rng.uniform_index(n_), key);
  }

  std::uint64_t insert_into(std::size_t queue, std::uint64_t key) {
    if (key == kEmpty) throw ParameterError("key 2^64-1 is reserved");
    Shard& shard = shards_[queue];
    std::lock_guard lock(shard.mutex);
    const std::uint64_t uid = next_uid_.fetch_add(1, std::memory_order_relaxed);
    shard.heap.push_back({key, uid});
    std::push_heap(shard.heap.begin(), shard.heap.end(), std::greater<>{});
    shard.top.store(shard.heap.front().key, std::memory_order_release);
    size_.fetch_add(1, std::memory_order_relaxed);
    return uid;
  }

  /// Best-of-c deletion. Minima are compared through the lock-free published
  /// snapshots, which may be stale under concurrency; only the chosen queue is
  /// locked. Up to 8 rounds of sampling, then a linear scan of all queues.
  std::optional<Popped> delete_min(const DeletionScheme& scheme, RandomSource& rng) {
    for (int attempt = 0; attempt < 8; ++attempt) {
      const std::optional<std::size_t> best =
          scheme.compares_all() ? scan_best() : sample_best(*scheme.c(), rng);
      if (!best) {
        if (scheme.compares_all()) break;
        continue;
      }
      if (auto popped = try_pop(*best)) return popped;
    }
    for (std::size_t q = 0; q < n_; ++q) {
      if (auto popped = try_pop(q)) return popped;
    }
    return std::nullopt;
  }

  std::uint64_t size() const noexcept { return size_.load(std::memory_order_relaxed); }

  std::size_t queue_size(std::size_t queue) const {
    std::lock_guard lock(shards_[queue].mutex);
    return shards_[queue].heap.size();
  }

  /// Published minimum of a queue, or nullopt if it is empty.
  std::optional<std::uint64_t> top_key(std::size_t queue) const noexcept {
    const std::uint64_t key = shards_[queue].top.load(std::memory_order_acquire);
    if (key == kEmpty) return std::nullopt;
    return key;
  }

  std::uint64_t issued_uids() const noexcept {
    return next_uid_.load(std::memory_order_relaxed);
  }

  /// Records, per queue, the keys popped from it in pop order.
  void enable_pop_log() { pop_log_enabled_ = true; }

  std::vector<std::uint64_t> pop_log(std::size_t queue) const {
    std::lock_guard lock(shards_[queue].mutex);
    return shards_[queue].pops;
  }

 private:
  struct alignas(64) Shard {
    mutable std::mutex mutex;
    std::vector<Element> heap;  // min-heap under std::greater
    std::atomic<std::uint64_t> top{kEmpty};
    std::vector<std::uint64_t> pops;
  };

  std::optional<std::size_t> sample_best(const CParameter& c, RandomSource& rng) const {
    const unsigned draws = c.draw_count(rng);
    std::optional<std::size_t> best;
    std::uint64_t best_key = kEmpty;
    for (unsigned k = 0; k < draws; ++k) {
      const std::size_t q = rng.uniform_index(n_);
      const std::uint64_t key = shards_[q].top.load(std::memory_order_acquire);
      if (key < best_key) {
        best = q;
        best_key = key;
      }
    }
    return best;
  }

  std::optional<std::size_t> scan_best() const {
    std::optional<std::size_t> best;
    std::uint64_t best_key = kEmpty;
    for (std::size_t q = 0; q < n_; ++q) {
      const std::uint64_t key = shards_[q].top.load(std::memory_order_acquire);
      if (key < best_key) {
        best = q;
        best_key = key;
      }
    }
    return best;
  }

  std::optional<Popped> try_pop(std::size_t queue) {
    Shard& shard = shards_[queue];
    std::lock_guard lock(shard.mutex);
    if (shard.heap.empty()) return std::nullopt;
    std::pop_heap(shard.heap.begin(), shard.heap.end(), std::greater<>{});
    const Element e = shard.heap.back();
    shard.heap.pop_back();
    shard.top.store(shard.heap.empty() ? kEmpty : shard.heap.front().key,
                    std::memory_order_release);
    if (pop_log_enabled_) shard.pops.push_back(e.key);
    size_.fetch_sub(1, std::memory_order_relaxed);
    return Popped{e, queue};
  }

  std::size_t n_;
  std::unique_ptr<Shard[]> shards_;
  std::atomic<std::uint64_t> next_uid_{0};
  std::atomic<std::uint64_t> size_{0};
  bool pop_log_enabled_ = false;
};

// ---------------------------------------------------------------------------
// Sequential replay with exact rank measurement.

struct ReplayOptions {
  std::size_t n = 16;
  double c = 2.0;
  bool compare_all = false;  // strict deletion instead of best-of-c
  std::uint64_t initial = 0;     // M: keys 1..M are partitioned at random
  std::uint64_t deletions = 0;   // D
  std::uint64_t burnin = 0;      // deletions excluded from the summary
  std::vector<std::uint64_t> checkpoints;  // deletion counts
};

struct ReplayReport {
  std::vector<std::uint32_t> rank_errors;  // every deletion, burn-in included
  Histogram histogram;                     // post-burn-in
  double mean = 0.0;                       // post-burn-in
  std::uint64_t max = 0;                   // post-burn-in
  std::vector<RankCheckpoint> checkpoints;  // sorted top-element ranks
  std::vector<std::vector<std::uint64_t>> pops;  // per queue, when logged
};

/// Partitions keys 1..M uniformly at random over n queues, then performs D
/// single-threaded deletions, measuring each one's exact rank error against
/// an order-statistics index of the live keys. Throws ExperimentError if any
/// queue runs dry, since the modelled queues are unbounded.
inline ReplayReport sequential_replay(const ReplayOptions& options, RandomSource& rng,
                                      bool log_pops = false) {
  if (options.n == 0) throw ParameterError("replay needs n >= 1");
  if (options.initial < 4 * options.deletions || options.initial == 0) {
    throw ParameterError("replay needs initial >= 4 * deletions");
  }
  const DeletionScheme scheme = options.compare_all ? DeletionScheme::all_queues()
                                                    : DeletionScheme::best_of(options.c);
  MultiQueue mq(options.n);
  if (log_pops) mq.enable_pop_log();
  for (std::uint64_t key = 1; key <= options.initial; ++key) mq.insert(key, rng);
  for (std::size_t q = 0; q < options.n; ++q) {
    if (!mq.top_key(q)) throw ExperimentError("a queue received no elements; increase --initial");
  }
  RankIndex live = RankIndex::full(options.initial);

  std::vector<std::uint64_t> checkpoints = options.checkpoints;
  std::sort(checkpoints.begin(), checkpoints.end());
  auto next_checkpoint = checkpoints.begin();
  ReplayReport report;
  report.rank_errors.reserve(options.deletions);

  auto checkpoint = [&](std::uint64_t s) {
    while (next_checkpoint != checkpoints.end() && *next_checkpoint == s) {
      std::vector<std::uint64_t> ranks;
      for (std::size_t q = 0; q < options.n; ++q) ranks.push_back(live.rank(*mq.top_key(q)));
      std::sort(ranks.begin(), ranks.end());
      report.checkpoints.push_back({s, std::move(ranks)});
      ++next_checkpoint;
    }
  };

  long double sum = 0.0L;
  std::uint64_t measured = 0;
  checkpoint(0);
  for (std::uint64_t s = 1; s <= options.deletions; ++s) {
    const auto popped = mq.delete_min(scheme, rng);
    if (!popped) throw ExperimentError("multiqueue exhausted during replay");
    const std::uint64_t key = popped->element.key;
    const std::uint64_t error = live.count_less(key);
    live.erase(key);
    if (!mq.top_key(popped->queue)) {
      throw ExperimentError("queue " + std::to_string(popped->queue) +
                            " ran dry after " + std::to_string(s) +
                            " deletions; increase --initial");
    }
    report.rank_errors.push_back(static_cast<std::uint32_t>(error));
    if (s > options.burnin) {
      ++measured;
      sum += error;
      report.max = std::max(report.max, error);
      histogram_add(report.histogram, error);
    }
    checkpoint(s);
  }
  report.mean = measured ? static_cast<double>(sum / measured) : 0.0;
  if (log_pops) {
    for (std::size_t q = 0; q < options.n; ++q) report.pops.push_back(mq.pop_log(q));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Concurrent stress test.

struct StressOptions {
  std::size_t queues = 8;
  std::size_t threads = 1;
  std::uint64_t ops = 0;            // total across all threads
  double insert_fraction = 0.5;     // probability an operation is an insertion
  std::uint64_t prepopulate = 0;    // elements inserted before the threads start
  double c = 2.0;
  bool log_pops = false;
};

struct ConservationReport {
  std::uint64_t inserts = 0;        // during the concurrent phase
  std::uint64_t deletes = 0;        // successful deletions
  std::uint64_t empty_deletes = 0;  // deletions that found nothing
  std::uint64_t prepopulated = 0;
  std::uint64_t live = 0;           // size after the concurrent phase
  std::uint64_t lost = 0;           // inserted but neither deleted nor left behind
  std::uint64_t duplicated = 0;     // deleted more than once
  std::uint64_t phantom = 0;        // deleted but never inserted
  bool per_queue_ascending = true;  // only meaningful without concurrent inserts
  bool ok = false;
  double seconds = 0.0;
  double throughput = 0.0;          // operations per second
  std::vector<std::string> violations;
};

/// Runs a concurrent insert/delete mix, then drains the queue and checks
/// that every inserted uid came out exactly once.
inline ConservationReport stress_test(const StressOptions& options, RandomSource& rng) {
  if (options.threads == 0) throw ParameterError("stress test needs threads >= 1");
  MultiQueue mq(options.queues);
  if (options.log_pops) mq.enable_pop_log();
  RandomSource setup = rng.split("prepopulate");
  for (std::uint64_t i = 0; i < options.prepopulate; ++i) {
    mq.insert(setup.next() >> 1, setup);
  }
  const DeletionScheme scheme = DeletionScheme::best_of(options.c);

  struct Log {
    std::vector<std::uint64_t> inserted;
    std::vector<std::uint64_t> deleted;
    std::uint64_t empty = 0;
  };
  std::vector<Log> logs(options.threads);
  std::vector<std::thread> threads;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t t = 0; t < options.threads; ++t) {
    threads.emplace_back([&, t] {
      RandomSource r = rng.split(static_cast<std::uint64_t>(t));
      Log& log = logs[t];
      const std::uint64_t share =
          options.ops / options.threads + (t < options.ops % options.threads ? 1 : 0);
      for (std::uint64_t k = 0; k < share; ++k) {
        if (r.bernoulli(options.insert_fraction)) {
          log.inserted.push_back(mq.insert(r.next() >> 1, r));
        } else if (auto popped = mq.delete_min(scheme, r)) {
          log.deleted.push_back(popped->element.uid);
        } else {
          ++log.empty;
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  const auto stop = std::chrono::steady_clock::now();

  ConservationReport report;
  report.prepopulated = options.prepopulate;
  report.seconds = std::chrono::duration<double>(stop - start).count();
  report.throughput =
      report.seconds > 0.0 ? static_cast<double>(options.ops) / report.seconds : 0.0;
  report.live = mq.size();

  const std::uint64_t issued = mq.issued_uids();
  std::vector<std::uint8_t> inserted(issued, 0), removed(issued, 0);
  for (std::uint64_t uid = 0; uid < options.prepopulate; ++uid) inserted[uid] = 1;
  auto remove_uid = [&](std::uint64_t uid) {
    if (uid >= issued || !inserted[uid]) {
      ++report.phantom;
      report.violations.push_back("uid " + std::to_string(uid) + " deleted but never inserted");
    } else if (removed[uid]++) {
      ++report.duplicated;
      report.violations.push_back("uid " + std::to_string(uid) + " deleted twice");
    }
  };
  for (const auto& log : logs) {
    report.inserts += log.inserted.size();
    report.empty_deletes += log.empty;
    for (auto uid : log.inserted) inserted[uid] = 1;
  }
  for (const auto& log : logs) {
    report.deletes += log.deleted.size();
    for (auto uid : log.deleted) remove_uid(uid);
  }
  if (report.live != options.prepopulate + report.inserts - report.deletes) {
    report.violations.push_back("live count " + std::to_string(report.live) +
                                " != prepopulated + inserts - deletes");
  }
  if (options.log_pops) {
    for (std::size_t q = 0; q < options.queues; ++q) {
      const auto pops = mq.pop_log(q);
      if (!std::is_sorted(pops.begin(), pops.end())) report.per_queue_ascending = false;
    }
  }
  // Drain: everything still inside must be exactly the undeleted uids.
  const auto drain = DeletionScheme::all_queues();
  while (auto popped = mq.delete_min(drain, rng)) remove_uid(popped->element.uid);
  for (std::uint64_t uid = 0; uid < issued; ++uid) {
    if (inserted[uid] && !removed[uid]) {
      ++report.lost;
      report.violations.push_back("uid " + std::to_string(uid) + " lost");
    }
  }
  report.ok = report.violations.empty();
  return report;
}

}  // namespace mq
