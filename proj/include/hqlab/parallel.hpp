#pragma once

// Sitewise loops over fixed-size blocks. The block partition depends only on
// the site count, never on the thread count, so block-ordered reductions are
// bitwise reproducible.

#include <cstddef>
#include <vector>

namespace hqlab {

inline constexpr std::size_t kBlockSize = 4096;

inline std::size_t block_count(std::size_t count) { return (count + kBlockSize - 1) / kBlockSize; }

/// body(begin, end) for every block; blocks may run concurrently.
template <class Body>
void parallel_blocks(std::size_t count, Body&& body) {
  const auto blocks = static_cast<long long>(block_count(count));
#pragma omp parallel for schedule(static)
  for (long long b = 0; b < blocks; ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kBlockSize;
    const std::size_t end = begin + kBlockSize < count ? begin + kBlockSize : count;
    body(begin, end);
  }
}

/// Per-block partial results combined sequentially in block order.
template <class T, class BlockFn, class Combine>
T block_reduce(std::size_t count, T init, BlockFn&& block_fn, Combine&& combine) {
  const std::size_t blocks = block_count(count);
  std::vector<T> partial(blocks, init);
  parallel_blocks(count, [&](std::size_t begin, std::size_t end) {
    partial[begin / kBlockSize] = block_fn(begin, end);
  });
  T acc = init;
  for (const T& p : partial) acc = combine(acc, p);
  return acc;
}

/// Sum of term(i) over [0, count) with a fixed association order.
template <class Term>
double deterministic_sum(std::size_t count, Term&& term) {
  return block_reduce(
      count, 0.0,
      [&](std::size_t begin, std::size_t end) {
        double s = 0.0;
        for (std::size_t i = begin; i < end; ++i) s += term(i);
        return s;
      },
      [](double a, double b) { return a + b; });
}

}  // namespace hqlab
