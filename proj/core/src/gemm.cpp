#include "ctsynth/gemm.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

namespace ctsynth::kernels {

namespace {

#if defined(__AVX512F__)
constexpr std::size_t kLanes = 8;
#else
constexpr std::size_t kLanes = 4;
#endif

using Vec = double __attribute__((vector_size(kLanes * sizeof(double))));

// Register tile is kMr x kNr; the A block (kMc x kKc) stays in L2, a B sliver in L1.
constexpr std::size_t kMr = 6;
constexpr std::size_t kNr = 2 * kLanes;
constexpr std::size_t kKc = 256;
constexpr std::size_t kMc = 96;
constexpr std::size_t kNc = 2048;

inline Vec load(const double* p) {
  Vec v;
  std::memcpy(&v, p, sizeof(Vec));
  return v;
}

inline void store(double* p, Vec v) { std::memcpy(p, &v, sizeof(Vec)); }

inline double elem(const double* x, std::size_t ld, Trans t, std::size_t row, std::size_t col) {
  return t == Trans::yes ? x[col * ld + row] : x[row * ld + col];
}

// Packs rows [i0, i0+mc) x cols [p0, p0+kc) of op(A) into kMr-row slivers, zero-padded.
void pack_a(const double* a, std::size_t lda, Trans ta, std::size_t i0, std::size_t mc, std::size_t p0,
            std::size_t kc, double* out) {
  for (std::size_t is = 0; is < mc; is += kMr) {
    const std::size_t rows = std::min(kMr, mc - is);
    for (std::size_t p = 0; p < kc; ++p) {
      for (std::size_t r = 0; r < kMr; ++r) {
        out[p * kMr + r] = r < rows ? elem(a, lda, ta, i0 + is + r, p0 + p) : 0.0;
      }
    }
    out += kc * kMr;
  }
}

// Packs rows [p0, p0+kc) x cols [j0, j0+nc) of op(B) into kNr-column slivers, zero-padded.
void pack_b(const double* b, std::size_t ldb, Trans tb, std::size_t p0, std::size_t kc, std::size_t j0,
            std::size_t nc, double* out) {
  for (std::size_t js = 0; js < nc; js += kNr) {
    const std::size_t cols = std::min(kNr, nc - js);
    if (tb == Trans::no && cols == kNr) {
      for (std::size_t p = 0; p < kc; ++p) {
        std::memcpy(out + p * kNr, b + (p0 + p) * ldb + j0 + js, kNr * sizeof(double));
      }
    } else {
      for (std::size_t p = 0; p < kc; ++p) {
        for (std::size_t c = 0; c < kNr; ++c) {
          out[p * kNr + c] = c < cols ? elem(b, ldb, tb, p0 + p, j0 + js + c) : 0.0;
        }
      }
    }
    out += kc * kNr;
  }
}

void micro_kernel(std::size_t kc, const double* a, const double* b, double* c, std::size_t ldc, std::size_t rows,
                  std::size_t cols, bool overwrite) {
  Vec acc[kMr][2] = {};
  for (std::size_t p = 0; p < kc; ++p) {
    const Vec b0 = load(b + p * kNr);
    const Vec b1 = load(b + p * kNr + kLanes);
    const double* ap = a + p * kMr;
    for (std::size_t r = 0; r < kMr; ++r) {
      acc[r][0] += ap[r] * b0;
      acc[r][1] += ap[r] * b1;
    }
  }
  if (rows == kMr && cols == kNr) {
    for (std::size_t r = 0; r < kMr; ++r) {
      double* cr = c + r * ldc;
      if (overwrite) {
        store(cr, acc[r][0]);
        store(cr + kLanes, acc[r][1]);
      } else {
        store(cr, load(cr) + acc[r][0]);
        store(cr + kLanes, load(cr + kLanes) + acc[r][1]);
      }
    }
    return;
  }
  double tile[kMr][kNr];
  for (std::size_t r = 0; r < kMr; ++r) {
    store(tile[r], acc[r][0]);
    store(tile[r] + kLanes, acc[r][1]);
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < cols; ++j) {
      c[r * ldc + j] = overwrite ? tile[r][j] : c[r * ldc + j] + tile[r][j];
    }
  }
}

struct PackBuffers {
  std::vector<double> a;
  std::vector<double> b;
};

PackBuffers& buffers() {
  thread_local PackBuffers bufs{std::vector<double>(kMc * kKc), std::vector<double>(kKc * kNc)};
  return bufs;
}

}  // namespace

void gemm(Trans trans_a, Trans trans_b, std::size_t m, std::size_t n, std::size_t k, const double* a,
          std::size_t lda, const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate) {
      for (std::size_t i = 0; i < m; ++i) std::fill_n(c + i * ldc, n, 0.0);
    }
    return;
  }
  auto& bufs = buffers();
  for (std::size_t jc = 0; jc < n; jc += kNc) {
    const std::size_t nc = std::min(kNc, n - jc);
    for (std::size_t pc = 0; pc < k; pc += kKc) {
      const std::size_t kc = std::min(kKc, k - pc);
      const bool overwrite = !accumulate && pc == 0;
      pack_b(b, ldb, trans_b, pc, kc, jc, nc, bufs.b.data());
      for (std::size_t ic = 0; ic < m; ic += kMc) {
        const std::size_t mc = std::min(kMc, m - ic);
        pack_a(a, lda, trans_a, ic, mc, pc, kc, bufs.a.data());
        for (std::size_t jr = 0; jr < nc; jr += kNr) {
          const double* bp = bufs.b.data() + (jr / kNr) * kc * kNr;
          const std::size_t cols = std::min(kNr, nc - jr);
          for (std::size_t ir = 0; ir < mc; ir += kMr) {
            const double* ap = bufs.a.data() + (ir / kMr) * kc * kMr;
            const std::size_t rows = std::min(kMr, mc - ir);
            micro_kernel(kc, ap, bp, c + (ic + ir) * ldc + jc + jr, ldc, rows, cols, overwrite);
          }
        }
      }
    }
  }
}

void gemm_reference(Trans trans_a, Trans trans_b, std::size_t m, std::size_t n, std::size_t k, const double* a,
                    std::size_t lda, const double* b, std::size_t ldb, double* c, std::size_t ldc,
                    bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += elem(a, lda, trans_a, i, p) * elem(b, ldb, trans_b, p, j);
      c[i * ldc + j] = accumulate ? c[i * ldc + j] + s : s;
    }
  }
}

}  // namespace ctsynth::kernels
