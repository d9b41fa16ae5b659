#pragma once

#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace inchworm {

// Replications are grouped into fixed-size blocks; each block is reduced in
// index order and the block partials are then combined in block order. The
// result is therefore independent of how many workers ran the blocks.
inline constexpr std::size_t kReductionBlock = 256;

inline int worker_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_worker_count(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

// Runs body(begin, end, partial) for every block of [0, count) and returns the
// block partials in block order. Accumulator must be default-constructible.
template <class Accumulator, class Body>
std::vector<Accumulator> blocked_reduce(std::size_t count, const Accumulator& init, Body body) {
  const std::size_t blocks = (count + kReductionBlock - 1) / kReductionBlock;
  std::vector<Accumulator> partials(blocks, init);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t end = begin + kReductionBlock < count ? begin + kReductionBlock : count;
    body(begin, end, partials[static_cast<std::size_t>(b)]);
  }
  return partials;
}

}  // namespace inchworm
