#include <atomic>
#include <cstdlib>
#include <string>

#include "relcl/error.hpp"
#include "relcl/kernels.hpp"

namespace relcl::kernels {

#if !RELCL_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif

bool cpu_supports_avx2() {
#if RELCL_HAVE_AVX2 && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const KernelTable* pick_default() {
  const KernelTable* best = (cpu_supports_avx2() && avx2_table()) ? avx2_table() : &scalar_table();
  if (const char* env = std::getenv("RELCL_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return &scalar_table();
    // avx2 requested on a machine without it falls back silently
  }
  return best;
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> table{pick_default()};
  return table;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

void set_backend(Backend backend) {
  if (backend == Backend::scalar) {
    slot().store(&scalar_table(), std::memory_order_release);
    return;
  }
  if (!cpu_supports_avx2() || avx2_table() == nullptr) {
    throw ArgumentError("avx2 kernels are not available on this machine");
  }
  slot().store(avx2_table(), std::memory_order_release);
}

Backend active_backend() { return active().backend; }

std::string_view backend_name(Backend backend) {
  return backend == Backend::avx2 ? "avx2" : "scalar";
}

void matmul_acc(const Matrix& a, const Matrix& b, Matrix& c, double alpha) {
  if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols()) {
    throw ArgumentError("matmul_acc: shape mismatch");
  }
  active().gemm_nn(a.rows(), b.cols(), a.cols(), alpha, a.data(), a.cols(), b.data(), b.cols(),
                   c.data(), c.cols());
}

void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& c, double alpha) {
  if (a.cols() != b.cols() || c.rows() != a.rows() || c.cols() != b.rows()) {
    throw ArgumentError("matmul_nt_acc: shape mismatch");
  }
  active().gemm_nt(a.rows(), b.rows(), a.cols(), alpha, a.data(), a.cols(), b.data(), b.cols(),
                   c.data(), c.cols());
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c, double alpha) {
  if (a.rows() != b.rows() || c.rows() != a.cols() || c.cols() != b.cols()) {
    throw ArgumentError("matmul_tn_acc: shape mismatch");
  }
  active().gemm_tn(a.cols(), b.cols(), a.rows(), alpha, a.data(), a.cols(), b.data(), b.cols(),
                   c.data(), c.cols());
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  matmul_acc(a, b, c);
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.rows());
  matmul_nt_acc(a, b, c);
  return c;
}

}  // namespace relcl::kernels
