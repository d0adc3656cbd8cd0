#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace oqmem {

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Evaluates fn(chunk_index) for every chunk and returns the results in chunk
/// order. The chunk decomposition is fixed by the caller, so reductions over
/// the returned vector are independent of the worker count.
template <typename Result, typename Fn>
std::vector<Result> map_chunks(std::size_t n_chunks, unsigned threads, Fn&& fn) {
  std::vector<Result> out(n_chunks);
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), n_chunks));
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) out[c] = fn(c);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t c = next++; c < n_chunks; c = next++) out[c] = fn(c);
        } catch (...) {
          errors[w] = std::current_exception();
          next = n_chunks;
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace oqmem
