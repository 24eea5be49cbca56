#pragma once

#include <cstddef>

namespace ctsynth::kernels {

enum class Trans : bool { no = false, yes = true };

/// C[m,n] = op(A)[m,k] * op(B)[k,n], or C += ... when `accumulate` is set.
///
/// All matrices are row-major with leading dimensions given in elements. op(X) is X or its
/// transpose according to the Trans flag; for a transposed operand the leading dimension
/// refers to the stored (untransposed) layout. The summation order is fixed for given
/// dimensions, so results are bit-reproducible.
void gemm(Trans trans_a, Trans trans_b, std::size_t m, std::size_t n, std::size_t k, const double* a,
          std::size_t lda, const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate);

/// Textbook triple loop with the same contract. Used as a test oracle and benchmark baseline.
void gemm_reference(Trans trans_a, Trans trans_b, std::size_t m, std::size_t n, std::size_t k, const double* a,
                    std::size_t lda, const double* b, std::size_t ldb, double* c, std::size_t ldc,
                    bool accumulate);

}  // namespace ctsynth::kernels
