#pragma once

#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace rwre {

// Splits [0, n) into `workers` contiguous shards, runs fn(begin, end) -> Acc on
// each shard in its own thread and returns the per-shard results in shard
// order. Callers merge in that order so results depend only on (inputs,
// workers), never on scheduling.
template <class Acc, class Fn>
std::vector<Acc> run_sharded(std::int64_t n, unsigned workers, Fn&& fn) {
  if (workers == 0) workers = 1;
  if (static_cast<std::int64_t>(workers) > n) workers = n > 0 ? static_cast<unsigned>(n) : 1;
  std::vector<Acc> out(workers);
  std::vector<std::exception_ptr> errors(workers);
  auto shard = [&](unsigned w) {
    const std::int64_t begin = n * w / workers;
    const std::int64_t end = n * (w + 1) / workers;
    try {
      out[w] = fn(begin, end);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    shard(0);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) threads.emplace_back(shard, w);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace rwre
