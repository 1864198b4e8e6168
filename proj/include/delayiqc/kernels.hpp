#pragma once

// Data-parallel inner loops with a portable scalar reference and an AVX2/FMA
// variant. The variant is picked once at runtime from CPUID; both are always
// compiled so tests can run them side by side.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace delayiqc::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view to_string(Isa isa);

/// True when the running CPU supports AVX2 and FMA.
bool cpu_has_avx2();

/// ISA used by the dispatched entry points below.
Isa active_isa();

/// Forces a specific ISA (nullopt restores CPUID detection). Requesting AVX2
/// on a CPU without it falls back to scalar.
void override_isa(std::optional<Isa> isa);

/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

double dot(std::span<const double> x, std::span<const double> y);

/// QC margin of a 2x2 Hermitian multiplier evaluated at (1, s) for a batch of
/// points:  p11 + 2 Re(conj(p21) s) + p22 |s|^2.  Returns the minimum.
struct QcBatch {
  std::span<const double> p11;
  std::span<const double> p21_re;
  std::span<const double> p21_im;
  std::span<const double> p22;
  std::span<const double> s_re;
  std::span<const double> s_im;
};
double qc_margin_min(const QcBatch& batch);

/// out[t] = z(t)^T M z(t) for signals stored row-major as nz rows of length n.
/// M is nz x nz row-major and symmetric.
void quad_form_series(std::span<const double> m, std::size_t nz, std::span<const double> z,
                      std::size_t n, std::span<double> out);

namespace scalar {
void axpy(double a, const double* x, double* y, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
double qc_margin_min(const QcBatch& batch);
void quad_form_series(const double* m, std::size_t nz, const double* z, std::size_t n,
                      double* out);
}  // namespace scalar

namespace avx2 {
void axpy(double a, const double* x, double* y, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
double qc_margin_min(const QcBatch& batch);
void quad_form_series(const double* m, std::size_t nz, const double* z, std::size_t n,
                      double* out);
}  // namespace avx2

}  // namespace delayiqc::kernels
