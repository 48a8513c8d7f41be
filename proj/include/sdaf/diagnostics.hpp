#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sdaf/sampling.hpp"
#include "sdaf/solver.hpp"

namespace sdaf {

// Local Dirichlet energies over periodic balls centered at every vertex.
struct ConcentrationScan {
  double radius = 0.0;
  double threshold = 0.0;  // epsilon_0
  std::vector<double> local_energy;  // per vertex
  std::vector<int> flagged;          // vertex indices with energy >= threshold
  double total_energy = 0.0;         // integral |dphi|^2
};

ConcentrationScan concentration_scan(const MapField& phi, double radius, double eps0);

struct MinimaxEstimates {
  double a_estimate = 0.0;  // max action over sampled boundary faces of Q
  double b_estimate = 0.0;  // min action over sampled S_rho
  double m_theta = 0.0;
  double r1 = 0.0, r2 = 0.0, rho = 0.0;
  int samples = 0;
  bool a_applicable = false;  // needs perturbation_scale > 0
  bool sandwich_holds = false;  // a <= m_theta < b
};

// Monte-Carlo linking estimates at a minimizer: the boundary faces of
// Q combine resolved negative/null spinors with the ray through e_plus;
// S_rho samples the positive span at fixed H^{1/2} radius. R1, R2, rho are
// auto-chosen by the profile turn-down and a shrinking rho scan when passed
// as zero.
MinimaxEstimates minimax_estimates(const MapField& phi_star, SpectralData& spec,
                                   const ActionConfig& acfg, int samples, std::uint64_t seed,
                                   double r1 = 0.0, double r2 = 0.0, double rho = 0.0);

struct UniquenessReport {
  bool applicable = false;  // flat target only
  bool pass = false;
  int trials = 0;
  double max_pairwise_deviation = 0.0;  // after mean-centering
  double max_energy_drift = 0.0;        // |E(f_t) - E(f_0)| along the homotopy
  std::string note;
};

// Minimizes from independent random starts, compares mean-centered limits,
// and checks that the geodesic homotopy between two limits has constant
// energy. Refuses to run on positively curved targets.
UniquenessReport uniqueness_experiment(const SurfaceDomain& dom, const TargetManifold& target,
                                       const HomotopyClass& cls, double alpha, int trials,
                                       const SolverConfig& cfg, std::uint64_t seed);

struct ConvexityReport {
  bool pass = false;
  int steps = 0;
  double min_second_difference = 0.0;
  double scale = 0.0;
};

// Discrete second differences of t -> E^alpha(f_t) along the vertexwise
// geodesic homotopy between homotopic flat-target maps.
ConvexityReport convexity_experiment(const MapField& phi0, const MapField& phi1, double alpha,
                                     int steps);

struct GrowthConditionReport {
  bool f1 = false, f2 = false, f3 = false, f4 = false, f5 = false, f6 = false, f7 = false;
  double fitted_mu = 0.0;       // log-log slope of F
  double fitted_p_minus_1 = 0.0;  // slope of |F_psi|
  double fitted_q = 0.0;          // slope of |F_phi|
  double f5_ratio = 0.0;          // max F / |psi|^2 near zero
  bool all_pass(bool include_f6f7) const {
    const bool base = f1 && f2 && f3 && f4 && f5;
    return include_f6f7 ? base && f6 && f7 : base;
  }
  std::vector<std::string> failures() const;
};

// Samples the growth/decay conditions on a perturbation hook over decades of
// |psi| and fits exponents by log-log regression.
GrowthConditionReport growth_condition_check(const Perturbation& hook, double mu_claimed,
                                             double alpha, int samples, std::uint64_t seed);

// Aggregate report for an experiment run; serialized by the io module.
struct DiagnosticsReport {
  double alpha = 0.0;
  double perturbation_scale = 0.0;
  double mu = 0.0;
  ActionValue action;
  double coupled_energy = 0.0;  // E(phi, psi; M)
  double psi_l4 = 0.0;
  double horizontal_residual = 0.0;
  double vertical_residual = 0.0;
  double lambda_plus = 0.0;
  std::optional<ConcentrationScan> concentration;
  std::optional<MinimaxEstimates> minimax;
  std::uint64_t config_fingerprint = 0;
  std::uint64_t seed = 0;
};

DiagnosticsReport diagnose(const MapField& phi, const PlainSpinor& psi, const ActionConfig& acfg,
                           double scan_radius, double eps0, int minimax_samples,
                           std::uint64_t seed);

}  // namespace sdaf
