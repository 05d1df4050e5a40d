#include "slc/kernels.hpp"

#include <algorithm>
#include <array>
#include <utility>
#include <vector>
#include <cmath>

#include "slc/errors.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

#if defined(__AVX512F__)
#include <immintrin.h>
#define SLC_HAVE_AVX512 1
#elif defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define SLC_HAVE_AVX2 1
#endif

namespace slc::kernels {
namespace {

// Strided read-only matrix view: element (i, j) lives at p[i * rs + j * cs].
struct View {
  const double* p;
  std::size_t rs, cs;
};

constexpr std::size_t kPanel = 16;       // columns of b packed per task
constexpr std::size_t kRowChunk = 64;    // rows of a per task
#if defined(SLC_HAVE_AVX512)
constexpr std::size_t kRowTile = 8;
#else
constexpr std::size_t kRowTile = 4;
#endif

void check_product_shapes(const Tensor& a, const Tensor& b, const char* what) {
  if (a.cols() != b.rows()) {
    throw DimensionError(std::string(what) + ": cannot multiply " + a.shape_string() + " by " +
                         b.shape_string());
  }
}

// Copies columns [j0, j0 + cols) of b into a contiguous n x kPanel block,
// zero-padding the unused columns.
void pack_panel(View b, std::size_t n, std::size_t j0, std::size_t cols, double* out) {
  if (cols < kPanel) std::fill(out, out + n * kPanel, 0.0);
  if (b.cs == 1) {
    for (std::size_t f = 0; f < n; ++f) std::copy_n(b.p + f * b.rs + j0, cols, out + f * kPanel);
  } else {
    for (std::size_t c = 0; c < cols; ++c) {
      const double* src = b.p + (j0 + c) * b.cs;
      for (std::size_t f = 0; f < n; ++f) out[f * kPanel + c] = src[f * b.rs];
    }
  }
}

// c[r][0..cols) for R rows of a starting at `a`, against a packed panel.
template <int R>
void tile(const double* a, View av, const double* pk, std::size_t n, double* c, std::size_t p,
          std::size_t cols) {
#if defined(SLC_HAVE_AVX512)
  __m512d acc[R][2];
  for (auto& r : acc) r[0] = r[1] = _mm512_setzero_pd();
  for (std::size_t f = 0; f < n; ++f) {
    const __m512d b0 = _mm512_loadu_pd(pk + f * kPanel);
    const __m512d b1 = _mm512_loadu_pd(pk + f * kPanel + 8);
    const double* af = a + f * av.cs;
    for (int r = 0; r < R; ++r) {
      const __m512d x = _mm512_set1_pd(af[r * av.rs]);
      acc[r][0] = _mm512_fmadd_pd(x, b0, acc[r][0]);
      acc[r][1] = _mm512_fmadd_pd(x, b1, acc[r][1]);
    }
  }
  const auto lo = static_cast<__mmask8>(cols >= 8 ? 0xFF : (1u << cols) - 1);
  const auto hi = static_cast<__mmask8>(cols >= 16 ? 0xFF : cols > 8 ? (1u << (cols - 8)) - 1 : 0);
  for (int r = 0; r < R; ++r) {
    _mm512_mask_storeu_pd(c + r * p, lo, acc[r][0]);
    _mm512_mask_storeu_pd(c + r * p + 8, hi, acc[r][1]);
  }
#elif defined(SLC_HAVE_AVX2)
  for (std::size_t half = 0; half < kPanel; half += 8) {
    if (half >= cols) break;
    __m256d acc[R][2];
    for (auto& r : acc) r[0] = r[1] = _mm256_setzero_pd();
    for (std::size_t f = 0; f < n; ++f) {
      const __m256d b0 = _mm256_loadu_pd(pk + f * kPanel + half);
      const __m256d b1 = _mm256_loadu_pd(pk + f * kPanel + half + 4);
      const double* af = a + f * av.cs;
      for (int r = 0; r < R; ++r) {
        const __m256d x = _mm256_broadcast_sd(af + r * av.rs);
        acc[r][0] = _mm256_fmadd_pd(x, b0, acc[r][0]);
        acc[r][1] = _mm256_fmadd_pd(x, b1, acc[r][1]);
      }
    }
    const std::size_t width = std::min<std::size_t>(8, cols - half);
    for (int r = 0; r < R; ++r) {
      alignas(32) double out[8];
      _mm256_store_pd(out, acc[r][0]);
      _mm256_store_pd(out + 4, acc[r][1]);
      std::copy_n(out, width, c + r * p + half);
    }
  }
#else
  double acc[R][kPanel] = {};
  for (std::size_t f = 0; f < n; ++f) {
    const double* brow = pk + f * kPanel;
    const double* af = a + f * av.cs;
    for (int r = 0; r < R; ++r) {
      const double x = af[r * av.rs];
      for (std::size_t j = 0; j < kPanel; ++j) acc[r][j] = std::fma(x, brow[j], acc[r][j]);
    }
  }
  for (int r = 0; r < R; ++r) std::copy_n(acc[r], cols, c + r * p);
#endif
}

using TileFn = void (*)(const double*, View, const double*, std::size_t, double*, std::size_t, std::size_t);

template <std::size_t... R>
constexpr auto make_tile_table(std::index_sequence<R...>) {
  return std::array<TileFn, sizeof...(R)>{&tile<static_cast<int>(R + 1)>...};
}
constexpr auto kTiles = make_tile_table(std::make_index_sequence<kRowTile>{});

// c (m x p, row-major) = a (m x n) * b (n x p) for arbitrary strided views.
void gemm(View a, View b, double* c, std::size_t m, std::size_t n, std::size_t p) {
  if (m == 0 || p == 0) return;
  if (n == 0) {
    std::fill(c, c + m * p, 0.0);
    return;
  }
  const std::size_t panels = (p + kPanel - 1) / kPanel;
  const std::size_t chunks = (m + kRowChunk - 1) / kRowChunk;
  const auto total = static_cast<long long>(panels * chunks);

#pragma omp parallel if (m * n * p > (1u << 16))
  {
    std::vector<double> packed(n * kPanel);
#pragma omp for schedule(static)
    for (long long task = 0; task < total; ++task) {
      const std::size_t j0 = static_cast<std::size_t>(task) / chunks * kPanel;
      const std::size_t chunk = static_cast<std::size_t>(task) % chunks;
      const std::size_t cols = std::min(kPanel, p - j0);
      pack_panel(b, n, j0, cols, packed.data());
      const std::size_t i_end = std::min(m, (chunk + 1) * kRowChunk);
      for (std::size_t i = chunk * kRowChunk; i < i_end; i += kRowTile) {
        const std::size_t rows = std::min(kRowTile, i_end - i);
        kTiles[rows - 1](a.p + i * a.rs, a, packed.data(), n, c + i * p + j0, p, cols);
      }
    }
  }
}

}  // namespace

void matmul_into(std::span<const double> a, std::span<const double> b, std::span<double> c,
                 std::size_t m, std::size_t n, std::size_t p) {
  if (a.size() != m * n || b.size() != n * p || c.size() != m * p)
    throw DimensionError("matmul_into: buffer sizes do not match (m, n, p)");
  gemm({a.data(), n, 1}, {b.data(), p, 1}, c.data(), m, n, p);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_product_shapes(a, b, "matmul");
  Tensor out(a.rows(), b.cols());
  matmul_into(a.data(), b.data(), out.data(), a.rows(), a.cols(), b.cols());
  return out;
}

Tensor matmul_at_b(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_at_b: cannot multiply transpose of " + a.shape_string() +
                         " by " + b.shape_string());
  }
  Tensor out(a.cols(), b.cols());
  gemm({a.data().data(), 1, a.cols()}, {b.data().data(), b.cols(), 1}, out.data().data(), a.cols(),
       a.rows(), b.cols());
  return out;
}

Tensor matmul_a_bt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_a_bt: cannot multiply " + a.shape_string() +
                         " by transpose of " + b.shape_string());
  }
  Tensor out(a.rows(), b.rows());
  gemm({a.data().data(), a.cols(), 1}, {b.data().data(), 1, b.cols()}, out.data().data(), a.rows(),
       a.cols(), b.rows());
  return out;
}

double dot_column(std::span<const double> x, const Tensor& w, std::size_t col) {
  if (x.size() != w.rows()) {
    throw DimensionError("dot_column: vector of length " + std::to_string(x.size()) +
                         " against " + w.shape_string());
  }
  if (col >= w.cols()) throw IndexError("dot_column: column out of range");
  const double* wp = w.data().data() + col;
  const std::size_t stride = w.cols();
  double acc = 0.0;
  for (std::size_t f = 0; f < x.size(); ++f) acc = std::fma(x[f], wp[f * stride], acc);
  return acc;
}

void add_row_inplace(Tensor& t, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != t.cols()) {
    throw DimensionError("add_row: cannot broadcast " + row.shape_string() + " over " +
                         t.shape_string());
  }
  const auto r = row.data();
  for (std::size_t i = 0; i < t.rows(); ++i) {
    auto dst = t.row(i);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += r[j];
  }
}

int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace reference {

void matmul_into(std::span<const double> a, std::span<const double> b, std::span<double> c,
                 std::size_t m, std::size_t n, std::size_t p) {
  if (a.size() != m * n || b.size() != n * p || c.size() != m * p)
    throw DimensionError("reference::matmul_into: buffer sizes do not match (m, n, p)");
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      double acc = 0.0;
      for (std::size_t f = 0; f < n; ++f) acc = std::fma(a[i * n + f], b[f * p + j], acc);
      c[i * p + j] = acc;
    }
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_product_shapes(a, b, "reference::matmul");
  Tensor out(a.rows(), b.cols());
  matmul_into(a.data(), b.data(), out.data(), a.rows(), a.cols(), b.cols());
  return out;
}

}  // namespace reference

}  // namespace slc::kernels
