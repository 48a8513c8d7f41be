#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sdaf/spectral.hpp"

namespace sdaf {

struct SolverConfig {
  int max_iters = 5000;
  double grad_tol = 1e-8;  // combined residual norm
  // Backtracking line search.
  int ls_max_backtracks = 40;
  double ls_shrink = 0.5;
  // Damped Newton.
  int newton_max_iters = 80;
  int krylov_max = 160;
  double jacobian_fd_step = 1e-6;
  // Per-vertex retraction cap as a fraction of the injectivity radius.
  double step_cap_fraction = 0.25;
  // Pseudo-gradient flow.
  double flow_dt = 0.05;
  double pseudo_gradient_a = 1.5;  // strictly inside (1, 2)

  void validate() const;
};

struct CriticalPoint {
  MapField phi;
  PlainSpinor psi;
  ActionValue value;
  double horizontal_residual = 0.0;  // L2 norm
  double vertical_residual = 0.0;    // H^{1/2} norm of the vertical gradient
  bool converged = false;
  int iterations = 0;
  enum class Kind { minimizer, saddle_candidate } classification = Kind::minimizer;
  HomotopyClass homotopy;
  bool homotopy_ok = true;
  bool nontrivial_spinor = false;

  double combined_residual() const {
    return std::sqrt(horizontal_residual * horizontal_residual +
                     vertical_residual * vertical_residual);
  }
};

// Projected Barzilai-Borwein descent on E^alpha within the homotopy class of
// the start map; psi stays zero. Throws ConvergenceError on line-search
// failure or on a detected class change.
CriticalPoint minimize_alpha_energy(const MapField& phi0, double alpha, const SolverConfig& cfg);

struct MountainPassInit {
  double r_star = 0.0;
  double action_at_top = 0.0;
  double base_action = 0.0;  // action at (phi*, 0) = m_theta candidate
  double r2 = 0.0;           // expanded ray radius with turn-down
  PlainSpinor psi0;
};

// Maximizes r -> action(phi*, r e_plus) over the ray, auto-expanding the
// radius until the profile turns down. Requires lambda_plus data on `spec`.
MountainPassInit mountain_pass_init(const MapField& phi_star, const SpectralData& spec,
                                    const ActionConfig& acfg, const SolverConfig& cfg);

// Damped Newton on the coupled residual (horizontal_gradient, D psi - eps F_psi)
// with matrix-free Krylov linear solves; tangency and the manifold constraint
// are restored by projection + transport after every update.
CriticalPoint newton_solve(const MapField& phi0, const PlainSpinor& psi0,
                           const ActionConfig& acfg, const SolverConfig& cfg);

struct FlowStep {
  double t = 0.0;
  double action = 0.0;
  double dl_norm = 0.0;        // ||dL|| in the product dual norm
  double omega_norm = 0.0;     // ||omega||
  double dl_of_omega = 0.0;    // dL(omega)
  double margin_norm = 0.0;    // 2||dL|| - ||omega||  (>= 0 required)
  double margin_descent = 0.0; // dL(omega) - ||dL||^2 (>= 0 required)
  double eta = 0.0;
  double dt = 0.0;
};

struct FlowTrace {
  std::vector<FlowStep> steps;
  MapField phi;
  PlainSpinor psi;
  int violations = 0;       // pseudo-gradient inequality failures
  int rejected_steps = 0;
  bool aborted = false;     // step rejection cascade
  double action_integral = 0.0;  // quadrature of eta * dL(omega) dt
};

// Explicit integration of d/dt (phi, psi) = -eta * omega with
// omega = (3/2)||d^H|| X~  (+)  a * grad^V, eta = min(1, 1/||omega||).
FlowTrace pseudo_gradient_flow(const MapField& phi0, const PlainSpinor& psi0,
                               const ActionConfig& acfg, const SolverConfig& cfg, double horizon);

struct ContinuationSchedule {
  std::vector<double> alphas;  // decreasing
  std::vector<int> ks;         // increasing positive integers
  double energy_bound = 1e6;   // Lambda for the E(phi, psi; M) monitor
  bool nontrivial_branch = true;
  SolverConfig solver;
  double mu = 0.0;  // 0 = canonical default per alpha

  void validate() const;
  int stages() const {
    return static_cast<int>(std::max(alphas.size(), ks.size()));
  }
  double alpha_at(int i) const {
    return alphas.empty() ? 1.5 : alphas[std::min<std::size_t>(i, alphas.size() - 1)];
  }
  int k_at(int i) const { return ks.empty() ? 0 : ks[std::min<std::size_t>(i, ks.size() - 1)]; }
};

struct ContinuationStage {
  double alpha = 0.0;
  int k = 0;
  double action = 0.0;
  double m_theta = 0.0;
  double psi_l4 = 0.0;        // integral |psi|^4
  double energy = 0.0;        // E(phi, psi; M) = integral (|dphi|^{2a} + |psi|^4)
  bool bound_exceeded = false;
  bool converged = false;
  double horizontal_residual = 0.0;
  double vertical_residual = 0.0;
  bool nontrivial = false;
  std::string note;
};

struct ContinuationReport {
  std::vector<ContinuationStage> stages;
  MapField phi;
  PlainSpinor psi;
  bool all_converged = true;
  bool any_bound_exceeded = false;
};

// Runs minimize -> (mountain-pass init | warm start) -> Newton per stage and
// monitors the energy E(phi, psi; M) against the configured bound.
ContinuationReport continuation_run(const SurfaceDomain& dom, const TargetManifold& target,
                                    const HomotopyClass& cls, const ContinuationSchedule& schedule,
                                    std::uint64_t seed);

// integral (|dphi|^{2 alpha} + |psi|^4).
double coupled_energy(const MapField& phi, const PlainSpinor& psi, double alpha);
// integral |psi|^4.
double spinor_l4(const PlainSpinor& psi);

// Affine representative of a homotopy class (exact critical point on flat
// charts; constant map for degree 0 on the sphere).
MapField class_representative(const SurfaceDomain& dom, const TargetManifold& target,
                              const HomotopyClass& cls);

// Retraction: lift addition on flat charts, pointwise projection otherwise.
MapField retract_map(const MapField& phi, const Field& X, double t);

}  // namespace sdaf
