// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Double-precision inner-loop kernels with a scalar reference implementation
// and SIMD variants selected at runtime.
//
// All matrices are dense row-major. The gemm kernels accumulate into C; callers
// zero C first when they want a plain product.

#include <cstddef>
#include <optional>
#include <string_view>

namespace neurodict::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
std::optional<Isa> parse_isa(std::string_view name);

struct KernelTable {
  Isa isa;

  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);

  // C[m x n] += A[m x k] * B[k x n]
  void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n);
  // C[m x n] += A[m x k] * B[n x k]^T
  void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n);
  // C[k x n] += A[m x k]^T * B[m x n]
  void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n);
};

const KernelTable& scalar_table();

/// nullptr when the variant was not compiled into this binary.
const KernelTable* avx2_table();

/// True when the variant is compiled in and the running CPU supports it.
bool isa_supported(Isa isa);

/// Best supported ISA, unless NEURODICT_ISA=scalar|avx2 says otherwise.
Isa default_isa();

/// Currently selected kernel table. First use resolves default_isa().
const KernelTable& active();
Isa active_isa();

/// Throws neurodict::UsageError when the ISA is unavailable.
void select_isa(Isa isa);

/// Restores the previous selection on scope exit.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa);
  ~ScopedIsa();
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa previous_;
};

inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline double squared_distance(const double* a, const double* b, std::size_t n) {
  return active().squared_distance(a, b, n);
}
inline void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t k, std::size_t n) {
  active().gemm_nn(a, b, c, m, k, n);
}
inline void gemm_nt(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t k, std::size_t n) {
  active().gemm_nt(a, b, c, m, k, n);
}
inline void gemm_tn(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t k, std::size_t n) {
  active().gemm_tn(a, b, c, m, k, n);
}

}  // namespace neurodict::kernels
