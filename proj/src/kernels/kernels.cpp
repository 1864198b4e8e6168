#include "delayiqc/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <limits>

#include "delayiqc/error.hpp"

namespace delayiqc::kernels {

std::string_view to_string(Isa isa) {
  return isa == Isa::kAvx2 ? "avx2" : "scalar";
}

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  static const bool has = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return has;
#else
  return false;
#endif
}

namespace {

std::atomic<int> g_override{-1};

Isa detect() { return cpu_has_avx2() ? Isa::kAvx2 : Isa::kScalar; }

void check_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw Error(ErrorCode::kDimensionMismatch, "kernel operand lengths differ");
}

}  // namespace

Isa active_isa() {
  const int o = g_override.load(std::memory_order_relaxed);
  if (o < 0) return detect();
  const auto isa = static_cast<Isa>(o);
  if (isa == Isa::kAvx2 && !cpu_has_avx2()) return Isa::kScalar;
  return isa;
}

void override_isa(std::optional<Isa> isa) {
  g_override.store(isa ? static_cast<int>(*isa) : -1, std::memory_order_relaxed);
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  check_same_size(x.size(), y.size());
  if (active_isa() == Isa::kAvx2) {
    avx2::axpy(a, x.data(), y.data(), x.size());
  } else {
    scalar::axpy(a, x.data(), y.data(), x.size());
  }
}

double dot(std::span<const double> x, std::span<const double> y) {
  check_same_size(x.size(), y.size());
  return active_isa() == Isa::kAvx2 ? avx2::dot(x.data(), y.data(), x.size())
                                    : scalar::dot(x.data(), y.data(), x.size());
}

double qc_margin_min(const QcBatch& b) {
  const std::size_t n = b.p11.size();
  for (auto s : {b.p21_re.size(), b.p21_im.size(), b.p22.size(), b.s_re.size(), b.s_im.size()}) {
    check_same_size(n, s);
  }
  return active_isa() == Isa::kAvx2 ? avx2::qc_margin_min(b) : scalar::qc_margin_min(b);
}

void quad_form_series(std::span<const double> m, std::size_t nz, std::span<const double> z,
                      std::size_t n, std::span<double> out) {
  check_same_size(m.size(), nz * nz);
  check_same_size(z.size(), nz * n);
  check_same_size(out.size(), n);
  if (active_isa() == Isa::kAvx2) {
    avx2::quad_form_series(m.data(), nz, z.data(), n, out.data());
  } else {
    scalar::quad_form_series(m.data(), nz, z.data(), n, out.data());
  }
}

namespace scalar {

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double qc_margin_min(const QcBatch& b) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < b.p11.size(); ++i) {
    const double sr = b.s_re[i];
    const double si = b.s_im[i];
    const double v = b.p11[i] + 2.0 * (b.p21_re[i] * sr + b.p21_im[i] * si) +
                     b.p22[i] * (sr * sr + si * si);
    best = std::min(best, v);
  }
  return best;
}

void quad_form_series(const double* m, std::size_t nz, const double* z, std::size_t n,
                      double* out) {
  for (std::size_t t = 0; t < n; ++t) out[t] = 0.0;
  for (std::size_t i = 0; i < nz; ++i) {
    const double* zi = z + i * n;
    for (std::size_t j = i; j < nz; ++j) {
      const double w = (i == j) ? m[i * nz + j] : 2.0 * m[i * nz + j];
      if (w == 0.0) continue;
      const double* zj = z + j * n;
      for (std::size_t t = 0; t < n; ++t) out[t] += w * zi[t] * zj[t];
    }
  }
}

}  // namespace scalar

}  // namespace delayiqc::kernels
