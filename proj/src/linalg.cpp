#include "sdf2net/linalg.hpp"

#include <cblas.h>

#include <mutex>
#include <vector>

extern "C" void openblas_set_num_threads(int);

namespace sdf2net::linalg {

namespace {

void pin_blas_threads() {
  // Threaded BLAS may change reduction splits with the thread count; one
  // thread keeps every product bitwise reproducible.
  static std::once_flag once;
  std::call_once(once, [] { openblas_set_num_threads(1); });
}

}  // namespace

void dgemm(bool trans_a, bool trans_b, size_t m, size_t n, size_t k,
           double alpha, const double* a, size_t lda, const double* b,
           size_t ldb, double beta, double* c, size_t ldc) {
  pin_blas_threads();
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(k), alpha, a,
              static_cast<int>(lda), b, static_cast<int>(ldb), beta, c,
              static_cast<int>(ldc));
}

void cgemm(Op op_a, Op op_b, size_t m, size_t n, size_t k, const double* a_re,
           const double* a_im, const double* b_re, const double* b_im,
           double beta, double* c_re, double* c_im) {
  // Write op(A) = U + iV and op(B) = X + iY with U,V,X,Y real. Then
  //   Re(C) += U X - V Y
  //   Im(C) += U Y + V X
  // and with t1 = U X, t2 = V Y, t3 = (U+V)(X+Y) this is
  //   Re(C) += t1 - t2,  Im(C) += t3 - t1 - t2.
  // A Herm operand is a transpose plus a sign flip on its imaginary plane;
  // the transpose goes to dgemm, the sign into the elementwise sums below.
  pin_blas_threads();

  const bool ta = op_a == Op::kHerm;
  const bool tb = op_b == Op::kHerm;
  const double sa = ta ? -1.0 : 1.0;
  const double sb = tb ? -1.0 : 1.0;
  // Stored layouts: A is (m x k) when not transposed, (k x m) when Herm.
  const size_t lda = ta ? m : k;
  const size_t ldb = tb ? k : n;
  const size_t a_n = m * k, b_n = k * n, c_n = m * n;

  // reused scratch; every element is overwritten before it is read
  thread_local std::vector<double> t1, t2, t3, a_sum, b_sum;
  if (t1.size() < c_n) t1.resize(c_n);
  if (t2.size() < c_n) t2.resize(c_n);
  if (t3.size() < c_n) t3.resize(c_n);
  if (a_sum.size() < a_n) a_sum.resize(a_n);
  if (b_sum.size() < b_n) b_sum.resize(b_n);
  for (size_t i = 0; i < a_n; ++i) a_sum[i] = a_re[i] + sa * a_im[i];
  for (size_t i = 0; i < b_n; ++i) b_sum[i] = b_re[i] + sb * b_im[i];

  dgemm(ta, tb, m, n, k, 1.0, a_re, lda, b_re, ldb, 0.0, t1.data(), n);
  dgemm(ta, tb, m, n, k, sa * sb, a_im, lda, b_im, ldb, 0.0, t2.data(), n);
  dgemm(ta, tb, m, n, k, 1.0, a_sum.data(), lda, b_sum.data(), ldb, 0.0,
        t3.data(), n);

  if (beta == 0.0) {
    for (size_t i = 0; i < c_n; ++i) {
      c_re[i] = t1[i] - t2[i];
      c_im[i] = t3[i] - t1[i] - t2[i];
    }
  } else {
    for (size_t i = 0; i < c_n; ++i) {
      c_re[i] = beta * c_re[i] + t1[i] - t2[i];
      c_im[i] = beta * c_im[i] + t3[i] - t1[i] - t2[i];
    }
  }
}

}  // namespace sdf2net::linalg
