#pragma once

#include <cstddef>

// Thin wrapper over a real dgemm plus a planar complex GEMM built on top of
// it. BLAS is pinned to a single thread at first use so that results are
// bitwise reproducible run to run.

namespace sdf2net::linalg {

enum class Op {
  kNone,  // use the operand as stored
  kHerm,  // conjugate transpose
};

/// C = alpha * op(A) * op(B) + beta * C, row-major, real doubles.
/// op is plain transpose here (no conjugation; that is handled one level up).
void dgemm(bool trans_a, bool trans_b, size_t m, size_t n, size_t k,
           double alpha, const double* a, size_t lda, const double* b,
           size_t ldb, double beta, double* c, size_t ldc);

/// Planar complex GEMM: C = op(A) * op(B) + beta * C where each operand is a
/// pair of real planes (re, im). op(A) is m x k, op(B) is k x n; a stored
/// operand carrying Op::kHerm therefore has the transposed layout (A is
/// k x m on disk). Uses the 3-multiplication (Gauss) scheme, so it costs
/// three dgemm calls plus O(mk + kn + mn) elementwise work.
void cgemm(Op op_a, Op op_b, size_t m, size_t n, size_t k, const double* a_re,
           const double* a_im, const double* b_re, const double* b_im,
           double beta, double* c_re, double* c_im);

}  // namespace sdf2net::linalg
