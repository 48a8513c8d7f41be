#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "test_util.hpp"

using namespace sdaf;
using namespace sdaf::testutil;

namespace {
SolverConfig quick_cfg() {
  SolverConfig cfg;
  cfg.grad_tol = 1e-8;
  return cfg;
}
}  // namespace

TEST_CASE("solver config validation") {
  SolverConfig cfg;
  cfg.pseudo_gradient_a = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.pseudo_gradient_a = 2.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.pseudo_gradient_a = 1.5;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("minimizer reaches the affine closed form from noisy starts") {
  SurfaceDomain dom(16, 1.0, {{+1, +1}});
  FlatTorus2 torus(1.0);
  const HomotopyClass id = HomotopyClass::torus_class(1, 0, 0, 1);
  Rng rng(3);
  for (double alpha : {1.25, 1.5, 2.0}) {
    MapField start = random_smooth_map(dom, torus, id, 0.05, rng);
    CriticalPoint cp = minimize_alpha_energy(start, alpha, quick_cfg());
    CHECK(cp.converged);
    CHECK(cp.homotopy_ok);
    CHECK(std::abs(cp.value.alpha_energy - 0.5 * std::pow(3.0, alpha)) <= 1e-8);
  }
}

TEST_CASE("two independent starts agree up to translation") {
  SurfaceDomain dom(16, 1.0, {{+1, +1}});
  FlatTorus2 torus(1.0);
  const HomotopyClass id = HomotopyClass::torus_class(1, 0, 0, 1);
  Rng rng(7);
  MapField a = minimize_alpha_energy(random_smooth_map(dom, torus, id, 0.05, rng), 1.5,
                                     quick_cfg())
                   .phi;
  MapField b = minimize_alpha_energy(random_smooth_map(dom, torus, id, 0.05, rng), 1.5,
                                     quick_cfg())
                   .phi;
  for (int c = 0; c < 2; ++c) {
    double ma = 0.0, mb = 0.0;
    for (int idx = 0; idx < dom.vertices(); ++idx) {
      ma += a(idx, c);
      mb += b(idx, c);
    }
    ma /= dom.vertices();
    mb /= dom.vertices();
    for (int idx = 0; idx < dom.vertices(); ++idx) {
      CHECK(std::abs((a(idx, c) - ma) - (b(idx, c) - mb)) <= 1e-6);
    }
  }
}

TEST_CASE("constant-class start converges to a constant map") {
  SurfaceDomain dom(12, 1.0, {{+1, +1}});
  FlatTorus2 torus(1.0);
  Rng rng(11);
  MapField start = random_smooth_map(dom, torus, HomotopyClass::torus_class(0, 0, 0, 0), 0.1, rng);
  CriticalPoint cp = minimize_alpha_energy(start, 1.5, quick_cfg());
  CHECK(cp.converged);
  CHECK(cp.value.alpha_energy == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("minimizer is second-order stable") {
  SurfaceDomain dom(12, 1.0, {{+1, +1}});
  FlatTorus2 torus(1.0);
  Rng rng(13);
  MapField start =
      random_smooth_map(dom, torus, HomotopyClass::torus_class(1, 0, 0, 1), 0.05, rng);
  CriticalPoint cp = minimize_alpha_energy(start, 1.5, quick_cfg());
  for (int rep = 0; rep < 20; ++rep) {
    Field V = random_tangent_field(cp.phi, 0.5, rng);
    CHECK(second_variation(cp.phi, V, V, 1.5) >= -1e-8);
  }
}

TEST_CASE("mountain pass init matches the quartic closed form (flat, mu = 4)") {
  SurfaceDomain dom(16, 1.0, {{-1, -1}});
  FlatTorus2 torus(1.0);
  const HomotopyClass id = HomotopyClass::torus_class(1, 0, 0, 1);
  Rng rng(17);
  MapField phi = minimize_alpha_energy(random_smooth_map(dom, torus, id, 0.02, rng), 1.5,
                                       quick_cfg())
                     .phi;
  SpectralData spec = dirac_spectrum(phi, 16);
  lambda_plus(phi, spec);

  ActionConfig acfg;
  acfg.alpha = 1.5;
  acfg.mu = 4.0;
  const int k = 8;
  acfg.perturbation_scale = 1.0 / k;

  MountainPassInit init = mountain_pass_init(phi, spec, acfg, quick_cfg());
  CHECK(init.r_star > 0.0);
  CHECK(init.action_at_top > init.base_action);

  // Closed form: r*^2 = lambda k ||e||_2^2 / (4 integral |e|^4); e_plus has
  // constant modulus, so integral |e|^4 = ||e||_2^4 / area.
  const int pos0 = spec.index_of_class_start(+1);
  double lam = spec.eigenvalues[pos0];
  for (int i = pos0; i < static_cast<int>(spec.eigenvalues.size()); ++i) {
    lam = std::min(lam, spec.eigenvalues[i]);
  }
  const double e_l2sq = inner_l2(spec.e_plus, spec.e_plus).real();
  const double e_l4 = spinor_l4(spec.e_plus);
  const double r_expect = std::sqrt(lam * k * e_l2sq / (4.0 * e_l4));
  CHECK(std::abs(init.r_star - r_expect) <= 1e-6 * r_expect);

  // Doubling the spectral resolution leaves r* unchanged.
  SpectralData spec2 = dirac_spectrum(phi, 32);
  lambda_plus(phi, spec2);
  MountainPassInit init2 = mountain_pass_init(phi, spec2, acfg, quick_cfg());
  CHECK(std::abs(init2.r_star - init.r_star) <= 1e-6 * init.r_star);

  // eps = 0 reports the no-turn-down error.
  ActionConfig flat0 = acfg;
  flat0.perturbation_scale = 0.0;
  CHECK_THROWS_AS(mountain_pass_init(phi, spec, flat0, quick_cfg()), ConvergenceError);
}

TEST_CASE("newton converges to the decoupled closed-form saddle (flat, mu = 4)") {
  SurfaceDomain dom(16, 1.0, {{-1, -1}});
  FlatTorus2 torus(1.0);
  const HomotopyClass id = HomotopyClass::torus_class(1, 0, 0, 1);
  Rng rng(19);
  MapField phi = minimize_alpha_energy(random_smooth_map(dom, torus, id, 0.02, rng), 1.5,
                                       quick_cfg())
                     .phi;
  SpectralData spec = dirac_spectrum(phi, 16);
  lambda_plus(phi, spec);
  const double m_theta = alpha_energy(phi, 1.5);

  for (int k : {4, 8}) {
    ActionConfig acfg;
    acfg.alpha = 1.5;
    acfg.mu = 4.0;
    acfg.perturbation_scale = 1.0 / k;
    MountainPassInit init = mountain_pass_init(phi, spec, acfg, quick_cfg());
    CriticalPoint cp = newton_solve(phi, init.psi0, acfg, quick_cfg());
    CHECK(cp.converged);
    CHECK(cp.combined_residual() <= 1e-8);
    CHECK(cp.nontrivial_spinor);
    // |c|^2 = lambda k / (4 rho) with rho the constant mode density.
    const int pos0 = spec.index_of_class_start(+1);
    const double lam = spec.eigenvalues[pos0];
    const double rho = spec.e_plus.abs2(0);
    const double c2 = inner_l2(cp.psi, cp.psi).real() /
                      inner_l2(spec.e_plus, spec.e_plus).real();
    CHECK(std::abs(c2 - lam * k / (4.0 * rho)) <= 1e-6 * c2);
    // Mountain-pass height above the minimum.
    CHECK(cp.value.total > m_theta + 1e-6 * std::abs(m_theta));
  }
}

TEST_CASE("newton with zero spinor start returns the trivial branch") {
  SurfaceDomain dom(12, 1.0, {{-1, +1}});
  FlatTorus2 torus(1.0);
  Rng rng(23);
  MapField phi = minimize_alpha_energy(
                     random_smooth_map(dom, torus, HomotopyClass::torus_class(1, 0, 0, 1), 0.02,
                                       rng),
                     1.5, quick_cfg())
                     .phi;
  ActionConfig acfg;
  acfg.alpha = 1.5;
  acfg.mu = 4.0;
  acfg.perturbation_scale = 0.125;
  PlainSpinor zero(dom, 2);
  CriticalPoint cp = newton_solve(phi, zero, acfg, quick_cfg());
  CHECK(cp.converged);
  CHECK_FALSE(cp.nontrivial_spinor);
}

TEST_CASE("newton solves the coupled system on the sphere") {
  SurfaceDomain dom(8, 1.0, {{-1, -1}});
  RoundSphere sphere;
  Rng rng(29);
  MapField phi = minimize_alpha_energy(
                     random_smooth_map(dom, sphere, HomotopyClass::sphere_class(0), 0.1, rng),
                     1.5, quick_cfg())
                     .phi;
  SpectralData spec = dirac_spectrum(phi, 12);
  lambda_plus(phi, spec);
  ActionConfig acfg;
  acfg.alpha = 1.5;
  acfg.mu = 4.0;
  acfg.perturbation_scale = 0.5;
  MountainPassInit init = mountain_pass_init(phi, spec, acfg, quick_cfg());
  CriticalPoint cp = newton_solve(phi, init.psi0, acfg, quick_cfg());
  CHECK(cp.converged);
  // Both equations hold independently at the solution.
  CHECK(norm_l2(horizontal_gradient(cp.phi, cp.psi, acfg)) <= 1e-6);
  CHECK(norm_l2(dirac_residual(cp.phi, cp.psi, acfg)) <= 1e-6);
  CHECK(tangency_violation(cp.phi, cp.psi) <= 1e-9);
}

TEST_CASE("newton basin stability") {
  SurfaceDomain dom(12, 1.0, {{-1, -1}});
  FlatTorus2 torus(1.0);
  Rng rng(31);
  MapField phi = minimize_alpha_energy(
                     random_smooth_map(dom, torus, HomotopyClass::torus_class(1, 0, 0, 1), 0.02,
                                       rng),
                     1.5, quick_cfg())
                     .phi;
  SpectralData spec = dirac_spectrum(phi, 12);
  lambda_plus(phi, spec);
  ActionConfig acfg;
  acfg.alpha = 1.5;
  acfg.mu = 4.0;
  acfg.perturbation_scale = 0.25;
  MountainPassInit init = mountain_pass_init(phi, spec, acfg, quick_cfg());
  CriticalPoint cp = newton_solve(phi, init.psi0, acfg, quick_cfg());
  REQUIRE(cp.converged);

  // Perturb transversally to the degenerate directions (translations, the
  // U(1) phase and eigenspace rotations): scale the spinor radially and add
  // a mean-free map perturbation, then re-solve.
  Field dphi = random_tangent_field(cp.phi, 1e-4, rng);
  for (int c = 0; c < 2; ++c) {
    double mean = 0.0;
    for (int idx = 0; idx < dom.vertices(); ++idx) mean += dphi(idx, c);
    mean /= dom.vertices();
    for (int idx = 0; idx < dom.vertices(); ++idx) dphi(idx, c) -= mean;
  }
  MapField phi2 = retract_map(cp.phi, dphi, 1.0);
  PlainSpinor psi2 = project_tangent(phi2, transport_spinor(cp.phi, phi2, cp.psi));
  scale(psi2, 1.0 + 1e-4);
  CriticalPoint cp2 = newton_solve(phi2, psi2, acfg, quick_cfg());
  CHECK(cp2.converged);
  double dev = 0.0;
  for (std::size_t i = 0; i < cp.phi.values().size(); ++i) {
    dev = std::max(dev, std::abs(cp.phi.values().data()[i] - cp2.phi.values().data()[i]));
  }
  for (std::size_t i = 0; i < cp.psi.size(); ++i) {
    dev = std::max(dev, std::abs(cp.psi.data()[i] - cp2.psi.data()[i]));
  }
  CHECK(dev <= 1e-7);
}

TEST_CASE("pseudo-gradient flow: stationarity, monotonicity, contract") {
  SurfaceDomain dom(12, 1.0, {{-1, -1}});
  FlatTorus2 torus(1.0);
  const HomotopyClass id = HomotopyClass::torus_class(1, 0, 0, 1);
  Rng rng(37);
  ActionConfig acfg;
  acfg.alpha = 1.5;
  acfg.mu = 4.0;
  acfg.perturbation_scale = 0.125;

  {
    // From a converged critical point the flow stays put.
    MapField phi = minimize_alpha_energy(random_smooth_map(dom, torus, id, 0.02, rng), 1.5,
                                         quick_cfg())
                       .phi;
    SpectralData spec = dirac_spectrum(phi, 12);
    lambda_plus(phi, spec);
    MountainPassInit init = mountain_pass_init(phi, spec, acfg, quick_cfg());
    CriticalPoint cp = newton_solve(phi, init.psi0, acfg, quick_cfg());
    REQUIRE(cp.converged);
    const double a0 = cp.value.total;
    FlowTrace trace = pseudo_gradient_flow(cp.phi, cp.psi, acfg, quick_cfg(), 1.0);
    CHECK(trace.violations == 0);
    CHECK_FALSE(trace.aborted);
    const double a1 = action(trace.phi, trace.psi, acfg).total;
    CHECK(std::abs(a1 - a0) <= 1e-7 * std::abs(a0));
  }
  {
    // Random starts: strict decrease, zero violations, quadrature identity.
    for (int rep = 0; rep < 3; ++rep) {
      MapField phi = random_smooth_map(dom, torus, id, 0.1, rng);
      PlainSpinor psi = random_tangent_spinor(phi, 0.5, rng);
      SolverConfig cfg = quick_cfg();
      cfg.flow_dt = 0.001;
      const double a0 = action(phi, psi, acfg).total;
      FlowTrace trace = pseudo_gradient_flow(phi, psi, acfg, cfg, 2.0);
      CHECK(trace.violations == 0);
      CHECK_FALSE(trace.aborted);
      for (std::size_t i = 0; i + 1 < trace.steps.size(); ++i) {
        CHECK(trace.steps[i + 1].action <=
              trace.steps[i].action + 1e-12 * std::abs(trace.steps[i].action));
        CHECK(trace.steps[i].margin_norm >= -1e-12);
        CHECK(trace.steps[i].margin_descent >= -1e-12);
      }
      const double a1 = action(trace.phi, trace.psi, acfg).total;
      CHECK(a1 < a0);
      // Total decrease tracks the logged integrand within 5%.
      CHECK(std::abs((a0 - a1) - trace.action_integral) <= 0.05 * (a0 - a1));
    }
  }
}

TEST_CASE("continuation: nontrivial branch grows like k^2, trivial branch flat") {
  SurfaceDomain dom(12, 1.0, {{-1, -1}});
  FlatTorus2 torus(1.0);
  const HomotopyClass id = HomotopyClass::torus_class(1, 0, 0, 1);

  ContinuationSchedule sched;
  sched.alphas = {1.5};
  sched.ks = {4, 8, 16, 32};
  sched.mu = 4.0;
  sched.energy_bound = 50.0;
  sched.solver = quick_cfg();

  ContinuationReport rep = continuation_run(dom, torus, id, sched, 41);
  REQUIRE(rep.stages.size() == 4);
  CHECK(rep.all_converged);
  // log-log slope of integral |psi|^4 against k.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& s : rep.stages) {
    const double lx = std::log(s.k), ly = std::log(s.psi_l4);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const int n = static_cast<int>(rep.stages.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope == doctest::Approx(2.0).epsilon(0.05));
  CHECK(rep.any_bound_exceeded);  // k^2 growth beats any fixed bound
  CHECK(rep.stages.back().bound_exceeded);

  ContinuationSchedule triv = sched;
  triv.nontrivial_branch = false;
  triv.energy_bound = 50.0;
  ContinuationReport rep2 = continuation_run(dom, torus, id, triv, 41);
  CHECK(rep2.all_converged);
  CHECK_FALSE(rep2.any_bound_exceeded);
  for (const auto& s : rep2.stages) {
    CHECK(s.psi_l4 == 0.0);
    CHECK(s.energy == doctest::Approx(rep2.stages.front().energy).epsilon(1e-10));
  }

  // Bad schedules are rejected.
  ContinuationSchedule bad;
  bad.alphas = {1.2, 1.5};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  ContinuationSchedule bad2;
  bad2.ks = {8, 4};
  CHECK_THROWS_AS(bad2.validate(), ConfigError);
}

TEST_CASE("class preservation along solver trajectories") {
  SurfaceDomain dom(12, 1.0, {{+1, +1}});
  FlatTorus2 torus(1.0);
  Rng rng(43);
  const HomotopyClass cls = HomotopyClass::torus_class(2, 0, 0, 1);
  MapField start = random_smooth_map(dom, torus, cls, 0.05, rng);
  CriticalPoint cp = minimize_alpha_energy(start, 1.25, quick_cfg());
  CHECK(cp.homotopy == cls);
  CHECK(std::abs(cp.value.alpha_energy - 0.5 * std::pow(6.0, 1.25)) <= 1e-8);
}
