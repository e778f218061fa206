#pragma once

// Dense and graph kernels. Each kernel has an OpenMP-parallel version in
// `kernels` and a plain serial version in `kernels::serial` that tests and the
// benchmark compare against. Parallel versions split work by output row (or
// BFS source) and accumulate in the same order as the serial loop, so both
// produce bit-identical results.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace transtte {

/// Row-major view over borrowed storage.
template <typename T>
struct BasicMatView {
  T* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  T* row(std::size_t r) const { return data + r * cols; }
  std::size_t size() const { return rows * cols; }
};

using MatView = BasicMatView<double>;
using ConstMatView = BasicMatView<const double>;

/// Owning row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }

  MatView view() { return {data.data(), rows, cols}; }
  ConstMatView view() const { return {data.data(), rows, cols}; }
  ConstMatView cview() const { return {data.data(), rows, cols}; }
};

inline constexpr std::uint16_t kUnreachableHop = 0xFFFF;

namespace kernels {

// C (+)= A * B ; A m×k, B k×n
void gemm_nn(ConstMatView a, ConstMatView b, MatView c, bool accumulate = false);
// C (+)= Aᵀ * B ; A k×m, B k×n
void gemm_tn(ConstMatView a, ConstMatView b, MatView c, bool accumulate = false);
// C (+)= A * Bᵀ ; A m×k, B n×k
void gemm_nt(ConstMatView a, ConstMatView b, MatView c, bool accumulate = false);

/// BFS from every source over an adjacency list. out[i*n+j] = hop distance
/// clipped to d_max, or kUnreachableHop.
void all_pairs_hops(const std::vector<std::vector<std::uint32_t>>& adjacency, std::uint16_t d_max,
                    std::span<std::uint16_t> out);

namespace serial {
void gemm_nn(ConstMatView a, ConstMatView b, MatView c, bool accumulate = false);
void gemm_tn(ConstMatView a, ConstMatView b, MatView c, bool accumulate = false);
void gemm_nt(ConstMatView a, ConstMatView b, MatView c, bool accumulate = false);
void all_pairs_hops(const std::vector<std::vector<std::uint32_t>>& adjacency, std::uint16_t d_max,
                    std::span<std::uint16_t> out);
}  // namespace serial

}  // namespace kernels
}  // namespace transtte
