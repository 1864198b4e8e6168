#pragma once

#include <optional>
#include <string>
#include <vector>

#include "delayiqc/lpv.hpp"
#include "delayiqc/polynomial.hpp"

namespace delayiqc {

/// Plant with the IQC filters appended: x' = F(x, w, d), z = Z(x, w, d),
/// e = E(x, w, d), state x = [x_G; ψ_1; ...], indeterminates (x, w, d).
struct ExtendedPoly {
  int nx = 0;
  int nw = 0;
  int nd = 0;
  std::vector<Polynomial> f;
  std::vector<Polynomial> z;
  std::vector<int> z_sizes;
  std::vector<Polynomial> e;
  double plant_scale = 1.0;

  int nvars() const { return nx + nw + nd; }
};

ExtendedPoly build_extended_poly(const PolynomialSystem& sys, const std::vector<IqcTerm>& terms);

/// p = basis^T Q basis.
struct GramCertificate {
  std::vector<Monomial> basis;
  Matrix q;
};

/// Polynomial of a certificate, basis^T Q basis.
Polynomial gram_polynomial(const GramCertificate& c, int nvars);

/// Independent re-check: returns the largest coefficient mismatch between p
/// and the Gram form, and stores the smallest Gram eigenvalue.
double certificate_mismatch(const Polynomial& p, const GramCertificate& c, double* min_eig = nullptr);

struct SosOptions {
  int v_degree = 4;
  sdp::Options sdp;
  double feasibility_tol = 1e-8;
  double strict_eps = 1e-8;
  bool prune = true;
  const sdp::Backend* backend = nullptr;
};

struct SosResult {
  AnalysisStatus status = AnalysisStatus::kNumericalFailure;
  double gamma = std::numeric_limits<double>::infinity();
  double feasibility_margin = 0.0;
  std::vector<double> lambda;
  std::vector<Matrix> scalings;
  Polynomial v;                     // storage function over (x, w, d)
  GramCertificate v_gram;           // V = b^T P b
  GramCertificate dissipation_gram; // certificate of the dissipation inequality
  Polynomial dissipation;           // polynomial certified SOS
  double certificate_error = 0.0;   // coefficient mismatch of the dissipation certificate
  double min_gram_eig = 0.0;
  sdp::Solution solver;
  std::string message;
};

/// Gram-matrix SOS test. Returns the certificate or nothing.
std::optional<GramCertificate> is_sos(const Polynomial& p, const sdp::Options& options = {});

/// Stability certificate: d = 0, minimize s with s·(|x|² + |w|²) - D SOS.
SosResult sos_feasibility(const ExtendedPoly& ext, const std::vector<IqcTerm>& terms,
                          const SosOptions& options = {});

/// Minimizes γ² subject to V SOS and -(Σ λ z^T M z + ∇V·F + e^T e - γ² d^T d) SOS.
SosResult sos_gain(const ExtendedPoly& ext, const std::vector<IqcTerm>& terms,
                   const SosOptions& options = {});

/// λ z^T M z + ∇V·F + e^T e - γ² d^T d at one point (x, w, d); <= 0 when the
/// certificate is valid.
double dissipation_value(const ExtendedPoly& ext, const std::vector<IqcTerm>& terms,
                         const SosResult& r, const Vector& point);

/// Largest delay with a certified finite gain from d to e.
MarginResult sos_delay_margin(const PolynomialSystem& sys, const RecipeFn& recipe,
                              const BisectOptions& bisect = {}, const SosOptions& options = {});

/// Classical loop with the polynomial nonlinearity, after the loop shift.
PolynomialSystem nl_classical_loop();

}  // namespace delayiqc
