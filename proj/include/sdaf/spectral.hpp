#pragma once

#include <cstdint>
#include <vector>

#include "sdaf/functional.hpp"

namespace sdaf {

// Fingerprint of a map (values + winding + target + domain), used to tie
// spectral data to the map it was computed for.
std::uint64_t fingerprint(const MapField& phi);

struct SpectralOptions {
  double zero_threshold = 0.0;   // 0 = default 1e-6 * (2 pi / side)
  double residual_tol = 1e-8;    // acceptance for ||D e - lambda e||
  int max_krylov = 320;          // Lanczos budget for the iterative path
  std::uint64_t seed = 0x5dafULL;
  bool force_iterative = false;  // skip the flat-target symbol path
};

struct SpectralData {
  std::vector<double> eigenvalues;  // ascending, the m nearest zero
  std::vector<PlainSpinor> eigenspinors;
  std::vector<double> residuals;
  double zero_threshold = 0.0;
  int n_negative = 0, n_zero = 0, n_positive = 0;
  double lambda_plus = 0.0;  // 0 until computed
  PlainSpinor e_plus;        // H^{1/2}-unit minimizer over the positive span
  bool lambda_plus_stabilized = false;
  std::uint64_t phi_fingerprint = 0;
  bool from_symbol_path = false;
  int iterations = 0;  // Lanczos steps used (0 for the symbol path)

  int index_of_class_start(int which) const;  // -1, 0, +1 ordering helper
};

// m eigenpairs of D_phi of smallest |lambda|, classified into -/0/+ by the
// zero threshold. Flat-chart targets with the canonical winding-independent
// operator are diagonalized exactly by the stencil symbol; curved targets go
// through shift-inverted Lanczos on the squared operator with Rayleigh-Ritz
// extraction. Throws ConvergenceError with diagnostics when the residual
// tolerance cannot be met within the Krylov budget.
SpectralData dirac_spectrum(const MapField& phi, int m, const SpectralOptions& opts = {});

enum class SpectralSign { negative, zero, positive };

struct ProjectionResult {
  PlainSpinor field;
  bool partial = false;       // psi not fully inside the resolved span
  double resolved_fraction = 1.0;
};

// L2-orthogonal projection onto the resolved eigenspace of the given sign.
ProjectionResult spectral_projection(const SpectralData& data, const MapField& phi,
                                     const PlainSpinor& psi, SpectralSign sign);

// min Re<psi, D_phi psi> over the resolved positive span subject to
// ||psi||_{1/2,2} = 1, as a small generalized Hermitian eigenproblem.
// Fills data.lambda_plus / data.e_plus / data.lambda_plus_stabilized.
double lambda_plus(const MapField& phi, SpectralData& data);

}  // namespace sdaf
