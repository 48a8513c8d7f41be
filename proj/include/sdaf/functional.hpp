#pragma once

#include <functional>
#include <memory>

#include "sdaf/target.hpp"

namespace sdaf {

// Pointwise perturbation density F(p, psi) with derivatives. d_psi is the
// real-pairing gradient: d/dt F(p, psi + t Y) = Re<F_psi, Y>; d_phi the
// ambient gradient in p (projected tangentially by the callers).
class Perturbation {
 public:
  virtual ~Perturbation() = default;
  virtual double value(const double* p, const cdouble* psi, int L) const = 0;
  virtual void d_psi(const double* p, const cdouble* psi, int L, cdouble* out) const = 0;
  virtual void d_phi(const double* p, const cdouble* psi, int L, double* out) const = 0;
  virtual std::string name() const = 0;
};

// Canonical F = |psi|^mu with F_psi = mu |psi|^(mu-2) psi and F_phi = 0.
class CanonicalPerturbation final : public Perturbation {
 public:
  explicit CanonicalPerturbation(double mu);
  double mu() const { return mu_; }
  double value(const double* p, const cdouble* psi, int L) const override;
  void d_psi(const double* p, const cdouble* psi, int L, cdouble* out) const override;
  void d_phi(const double* p, const cdouble* psi, int L, double* out) const override;
  std::string name() const override { return "canonical"; }

 private:
  double mu_;
};

struct ActionConfig {
  double alpha = 1.5;
  double perturbation_scale = 0.0;  // eps_k = 1/k
  double mu = 0.0;                  // 0 = use the canonical default 4a/(3a-2)
  std::shared_ptr<const Perturbation> hook;  // overrides the canonical F
  // Growth parameters recorded for validation reports.
  double growth_p = 0.0;
  double growth_q = 0.0;

  static double default_mu(double alpha) { return 4.0 * alpha / (3.0 * alpha - 2.0); }
  // Resolved exponent (explicit mu if set, else the default).
  double resolved_mu() const { return mu > 0.0 ? mu : default_mu(alpha); }
  // Throws ConfigError on invalid alpha / mu / scale.
  void validate() const;
  const Perturbation& perturbation() const;

 private:
  mutable std::shared_ptr<const Perturbation> canonical_;
};

struct ActionValue {
  double total = 0.0;
  double alpha_energy = 0.0;
  double dirac_action = 0.0;
  double perturbation = 0.0;
};

// 0.5 * integral (1 + |d phi|^2)^alpha with the seam-aware forward differential.
double alpha_energy(const MapField& phi, double alpha);
// Dirichlet energy 0.5 * integral |d phi|^2 (used by concentration scans).
double dirichlet_energy(const MapField& phi);
// Pointwise density |d phi|^2.
Field dirichlet_density(const MapField& phi);

// Twisted Dirac operator D_phi psi = sum_a e_a . Pi_phi(d_a psi); reduces to
// the untwisted operator componentwise on flat charts.
PlainSpinor twisted_dirac(const MapField& phi, const PlainSpinor& psi);
// 0.5 * Re (psi, D_phi psi)_2.
double dirac_action(const MapField& phi, const PlainSpinor& psi);

// integral of F(phi, psi).
double perturbation_total(const MapField& phi, const PlainSpinor& psi, const ActionConfig& cfg);
// Pointwise F_psi as a spinor field.
PlainSpinor perturbation_d_psi(const MapField& phi, const PlainSpinor& psi,
                               const ActionConfig& cfg);
// Tangentially projected F_phi as a map-tangent field.
Field perturbation_d_phi(const MapField& phi, const PlainSpinor& psi, const ActionConfig& cfg);

// L^alpha_k = E^alpha + dirac action - eps_k * integral F.
ActionValue action(const MapField& phi, const PlainSpinor& psi, const ActionConfig& cfg);

// L2-gradient of the action in the map direction, tangent along phi: the
// directional derivative along a retracted path with the spinor transported
// equals inner_l2(horizontal_gradient, X) for every tangent X.
Field horizontal_gradient(const MapField& phi, const PlainSpinor& psi, const ActionConfig& cfg);

// Unpreconditioned vertical residual D_phi psi - eps_k F_psi.
PlainSpinor dirac_residual(const MapField& phi, const PlainSpinor& psi, const ActionConfig& cfg);
// H^{1/2}-Riesz representative (1 + |D|)^{-1}(D_phi psi - eps_k F_psi).
PlainSpinor vertical_gradient(const MapField& phi, const PlainSpinor& psi,
                              const ActionConfig& cfg);

// Second variation of E^alpha along vertexwise-geodesic variations: the
// exact mixed second derivative of the discrete energy through
// f_st = exp_phi(s V + t W). V, W must be tangent along phi.
double second_variation(const MapField& phi, const Field& V, const Field& W, double alpha);

// Checks that a map-tangent field is tangent along phi (max violation).
double map_tangency_violation(const MapField& phi, const Field& X);
// Fiberwise tangent projection of an ambient field.
Field project_map_tangent(const MapField& phi, const Field& X);

}  // namespace sdaf
