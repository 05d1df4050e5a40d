#pragma once

// Dense kernels behind Tensor arithmetic and the model forward passes.
//
// Every output element of a product is accumulated as
//   acc = 0; for f ascending: acc = fma(a[i][f], b[f][j], acc)
// in all code paths (reference, blocked, vectorized edge tiles, and the
// single-column dot product). Results are therefore bit-identical across
// paths and thread counts; tests rely on this.

#include <cstddef>
#include <span>

#include "slc/tensor.hpp"

namespace slc::kernels {

// c (m x p) = a (m x n) * b (n x p). Packs 16-column panels of b and runs
// register tiles over them (AVX-512, AVX2 or scalar, by build target);
// OpenMP-parallel over (panel, row chunk) tasks.
void matmul_into(std::span<const double> a, std::span<const double> b, std::span<double> c,
                 std::size_t m, std::size_t n, std::size_t p);

Tensor matmul(const Tensor& a, const Tensor& b);
// a^T * b and a * b^T without the caller materializing the transpose.
Tensor matmul_at_b(const Tensor& a, const Tensor& b);
Tensor matmul_a_bt(const Tensor& a, const Tensor& b);

// sum_f x[f] * w[f][col], ascending f. Touches one column of w only.
double dot_column(std::span<const double> x, const Tensor& w, std::size_t col);

// Adds `row` (1 x cols) to every row of `t` in place.
void add_row_inplace(Tensor& t, const Tensor& row);

int max_threads();

namespace reference {

// Straight triple loop, single-threaded. Kept as the oracle for the
// blocked kernel.
void matmul_into(std::span<const double> a, std::span<const double> b, std::span<double> c,
                 std::size_t m, std::size_t n, std::size_t p);
Tensor matmul(const Tensor& a, const Tensor& b);

}  // namespace reference

}  // namespace slc::kernels
