#pragma once

// Dense double-precision inner loops used by the encoder, the losses and the
// kNN scan. Each primitive has a scalar reference implementation and an
// AVX2+FMA variant; the variant is chosen once at runtime from CPUID and can
// be overridden with RELCL_KERNELS=scalar|avx2 or set_backend().
//
// All matrices are row-major with an explicit leading dimension.

#include <cstddef>
#include <string_view>

#include "relcl/matrix.hpp"

namespace relcl::kernels {

enum class Backend { scalar, avx2 };

struct KernelTable {
  Backend backend;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // C(m x n) += alpha * A(m x k) * B(k x n)
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, double alpha, const double* a,
                  std::size_t lda, const double* b, std::size_t ldb, double* c, std::size_t ldc);
  // C(m x n) += alpha * A(m x k) * B(n x k)^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, double alpha, const double* a,
                  std::size_t lda, const double* b, std::size_t ldb, double* c, std::size_t ldc);
  // C(m x n) += alpha * A(k x m)^T * B(k x n)
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, double alpha, const double* a,
                  std::size_t lda, const double* b, std::size_t ldb, double* c, std::size_t ldc);
};

const KernelTable& scalar_table();
// Nullptr when the binary was built without AVX2 support.
const KernelTable* avx2_table();

bool cpu_supports_avx2();

// Currently selected kernels.
const KernelTable& active();
void set_backend(Backend backend);
Backend active_backend();
std::string_view backend_name(Backend backend);

// Convenience wrappers over the active table.
inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}

// C += alpha * A * B
void matmul_acc(const Matrix& a, const Matrix& b, Matrix& c, double alpha = 1.0);
// C += alpha * A * B^T
void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& c, double alpha = 1.0);
// C += alpha * A^T * B
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c, double alpha = 1.0);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);

}  // namespace relcl::kernels
