#pragma once

#include <atomic>
#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rgif {

namespace detail {
inline std::atomic<int>& thread_count_slot() {
  static std::atomic<int> n{0};  // 0 = library default
  return n;
}
}  // namespace detail

inline void set_num_threads(int n) { detail::thread_count_slot() = n; }

inline int num_threads() {
  int n = detail::thread_count_slot().load();
  if (n > 0) return n;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Parallel loop over [begin, end). The body must write to disjoint
/// locations per index; results are then identical for any thread count.
template <typename F>
inline void parallel_for(int begin, int end, F&& body) {
#ifdef _OPENMP
  const int nt = num_threads();
#pragma omp parallel for num_threads(nt) schedule(static)
  for (int i = begin; i < end; ++i) body(i);
#else
  for (int i = begin; i < end; ++i) body(i);
#endif
}

/// Dot product with a fixed blocked summation order, bit-identical
/// across thread counts.
inline double deterministic_dot(const std::vector<double>& a,
                                const std::vector<double>& b) {
  constexpr std::size_t kBlock = 1024;
  const std::size_t n = a.size();
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(blocks, 0.0);
  parallel_for(0, static_cast<int>(blocks), [&](int bi) {
    const std::size_t lo = static_cast<std::size_t>(bi) * kBlock;
    const std::size_t hi = std::min(lo + kBlock, n);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += a[i] * b[i];
    partial[bi] = s;
  });
  double sum = 0.0;
  for (double s : partial) sum += s;
  return sum;
}

}  // namespace rgif
