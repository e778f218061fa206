#include "transtte/kernels.hpp"

#include <algorithm>
#include <cassert>

namespace transtte::kernels {

namespace {

// Below this many multiply-adds the thread fork costs more than it saves.
constexpr std::size_t kParallelFlops = std::size_t{1} << 16;
constexpr std::size_t kParallelBfsNodes = 128;

inline void gemm_nn_row(ConstMatView a, ConstMatView b, MatView c, std::size_t i, bool accumulate) {
  double* crow = c.row(i);
  if (!accumulate) std::fill(crow, crow + c.cols, 0.0);
  const double* arow = a.row(i);
  for (std::size_t p = 0; p < a.cols; ++p) {
    const double av = arow[p];
    const double* brow = b.row(p);
    for (std::size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
  }
}

inline void gemm_tn_row(ConstMatView a, ConstMatView b, MatView c, std::size_t i, bool accumulate) {
  double* crow = c.row(i);
  if (!accumulate) std::fill(crow, crow + c.cols, 0.0);
  for (std::size_t p = 0; p < a.rows; ++p) {
    const double av = a(p, i);
    const double* brow = b.row(p);
    for (std::size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
  }
}

inline void gemm_nt_row(ConstMatView a, ConstMatView b, MatView c, std::size_t i, bool accumulate) {
  double* crow = c.row(i);
  const double* arow = a.row(i);
  for (std::size_t j = 0; j < b.rows; ++j) {
    const double* brow = b.row(j);
    double sum = 0.0;
    for (std::size_t p = 0; p < a.cols; ++p) sum += arow[p] * brow[p];
    crow[j] = accumulate ? crow[j] + sum : sum;
  }
}

inline void bfs_from(const std::vector<std::vector<std::uint32_t>>& adj, std::uint16_t d_max,
                     std::size_t src, std::span<std::uint16_t> out,
                     std::vector<std::uint32_t>& dist, std::vector<std::uint32_t>& queue) {
  const std::size_t n = adj.size();
  constexpr auto kUnseen = static_cast<std::uint32_t>(-1);
  std::fill(dist.begin(), dist.end(), kUnseen);
  queue.clear();
  dist[src] = 0;
  queue.push_back(static_cast<std::uint32_t>(src));
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::uint32_t u = queue[head];
    for (std::uint32_t v : adj[u]) {
      if (dist[v] == kUnseen) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  std::uint16_t* row = out.data() + src * n;
  for (std::size_t j = 0; j < n; ++j) {
    row[j] = dist[j] == kUnseen ? kUnreachableHop
                                : static_cast<std::uint16_t>(std::min<std::uint32_t>(dist[j], d_max));
  }
}

}  // namespace

void gemm_nn(ConstMatView a, ConstMatView b, MatView c, bool accumulate) {
  assert(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols);
  const auto m = static_cast<std::ptrdiff_t>(a.rows);
  const bool par = a.rows * a.cols * b.cols >= kParallelFlops;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < m; ++i) gemm_nn_row(a, b, c, static_cast<std::size_t>(i), accumulate);
}

void gemm_tn(ConstMatView a, ConstMatView b, MatView c, bool accumulate) {
  assert(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols);
  const auto m = static_cast<std::ptrdiff_t>(a.cols);
  const bool par = a.rows * a.cols * b.cols >= kParallelFlops;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < m; ++i) gemm_tn_row(a, b, c, static_cast<std::size_t>(i), accumulate);
}

void gemm_nt(ConstMatView a, ConstMatView b, MatView c, bool accumulate) {
  assert(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows);
  const auto m = static_cast<std::ptrdiff_t>(a.rows);
  const bool par = a.rows * a.cols * b.rows >= kParallelFlops;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < m; ++i) gemm_nt_row(a, b, c, static_cast<std::size_t>(i), accumulate);
}

void all_pairs_hops(const std::vector<std::vector<std::uint32_t>>& adjacency, std::uint16_t d_max,
                    std::span<std::uint16_t> out) {
  const std::size_t n = adjacency.size();
  assert(out.size() == n * n);
  const bool par = n >= kParallelBfsNodes;
#pragma omp parallel if (par)
  {
    std::vector<std::uint32_t> dist(n), queue;
    queue.reserve(n);
#pragma omp for schedule(dynamic, 8)
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(n); ++s) {
      bfs_from(adjacency, d_max, static_cast<std::size_t>(s), out, dist, queue);
    }
  }
}

namespace serial {

void gemm_nn(ConstMatView a, ConstMatView b, MatView c, bool accumulate) {
  for (std::size_t i = 0; i < a.rows; ++i) gemm_nn_row(a, b, c, i, accumulate);
}

void gemm_tn(ConstMatView a, ConstMatView b, MatView c, bool accumulate) {
  for (std::size_t i = 0; i < a.cols; ++i) gemm_tn_row(a, b, c, i, accumulate);
}

void gemm_nt(ConstMatView a, ConstMatView b, MatView c, bool accumulate) {
  for (std::size_t i = 0; i < a.rows; ++i) gemm_nt_row(a, b, c, i, accumulate);
}

void all_pairs_hops(const std::vector<std::vector<std::uint32_t>>& adjacency, std::uint16_t d_max,
                    std::span<std::uint16_t> out) {
  const std::size_t n = adjacency.size();
  std::vector<std::uint32_t> dist(n), queue;
  queue.reserve(n);
  for (std::size_t s = 0; s < n; ++s) bfs_from(adjacency, d_max, s, out, dist, queue);
}

}  // namespace serial
}  // namespace transtte::kernels
