#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "test_util.hpp"

using namespace sdaf;
using namespace sdaf::testutil;

TEST_CASE("flat-target spectrum matches the symbol oracle (antiperiodic)") {
  SurfaceDomain dom(8, 1.0, {{-1, -1}});
  FlatTorus2 torus(1.0);
  MapField phi = class_representative(dom, torus, HomotopyClass::torus_class(1, 0, 0, 1));
  SpectralData spec = dirac_spectrum(phi, 16);
  CHECK(spec.from_symbol_path);
  CHECK(spec.n_zero == 0);  // no kernel off the fully periodic structure

  // The |eigenvalue| multiset must agree with the 16 smallest symbol values;
  // within a degenerate +- group any sign subset is a valid selection.
  std::vector<double> expected;
  for (int q1 = 0; q1 < dom.n(); ++q1)
    for (int q2 = 0; q2 < dom.n(); ++q2)
      for (int c = 0; c < 2; ++c) {
        auto [up, dn] = dirac_symbol(dom, q1 + 0.5, q2 + 0.5);
        expected.push_back(up);
        expected.push_back(dn);
      }
  std::sort(expected.begin(), expected.end(), [](double a, double b) {
    return std::abs(a) < std::abs(b);
  });
  expected.resize(16);
  std::vector<double> got_abs, exp_abs;
  for (int i = 0; i < 16; ++i) {
    got_abs.push_back(std::abs(spec.eigenvalues[i]));
    exp_abs.push_back(std::abs(expected[i]));
    CHECK(spec.residuals[i] <= 1e-8);
  }
  std::sort(got_abs.begin(), got_abs.end());
  std::sort(exp_abs.begin(), exp_abs.end());
  for (int i = 0; i < 16; ++i) CHECK(std::abs(got_abs[i] - exp_abs[i]) <= 1e-8);

  // Eigenvalues come in +- pairs for this constant-coefficient case.
  CHECK(std::abs(spec.eigenvalues.front() + spec.eigenvalues.back()) <= 1e-8);

  // Eigenspinors are L2-orthonormal.
  for (std::size_t i = 0; i < spec.eigenspinors.size(); ++i) {
    for (std::size_t j = i; j < spec.eigenspinors.size(); ++j) {
      const cdouble g = inner_l2(spec.eigenspinors[i], spec.eigenspinors[j]);
      CHECK(std::abs(g - (i == j ? 1.0 : 0.0)) <= 1e-10);
    }
  }
}

TEST_CASE("fully periodic flat case: kernel from the zero mode") {
  SurfaceDomain dom(8, 1.0, {{+1, +1}});
  FlatTorus2 torus(1.0);
  MapField phi = class_representative(dom, torus, HomotopyClass::torus_class(1, 0, 0, 1));
  // The zero-frequency kernel alone contributes 2 * (lift dimension) modes;
  // the stencil's doubling partners triple the momentum count, so restrict
  // the request to the zero-momentum sector.
  SpectralData spec = dirac_spectrum(phi, 4);
  CHECK(spec.n_zero == 4);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(spec.eigenvalues[i]) <= spec.zero_threshold);
  // With the doublers counted, the discrete kernel is 4 momenta x 2 x 2.
  SpectralData full = dirac_spectrum(phi, 20);
  CHECK(full.n_zero == 16);
}

TEST_CASE("iterative path agrees with the symbol path on the flat target") {
  SurfaceDomain dom(8, 1.0, {{-1, -1}});
  FlatTorus2 torus(1.0);
  MapField phi = class_representative(dom, torus, HomotopyClass::torus_class(1, 0, 0, 1));
  SpectralData sym = dirac_spectrum(phi, 8);
  SpectralOptions opt;
  opt.force_iterative = true;
  SpectralData itr = dirac_spectrum(phi, 8, opt);
  CHECK_FALSE(itr.from_symbol_path);
  // Compare |eigenvalue| multisets; degenerate +- groups admit any sign split.
  std::vector<double> sa, ia;
  for (int i = 0; i < 8; ++i) {
    sa.push_back(std::abs(sym.eigenvalues[i]));
    ia.push_back(std::abs(itr.eigenvalues[i]));
    CHECK(itr.residuals[i] <= 1e-8);
  }
  std::sort(sa.begin(), sa.end());
  std::sort(ia.begin(), ia.end());
  for (int i = 0; i < 8; ++i) CHECK(std::abs(sa[i] - ia[i]) <= 1e-7);
}

TEST_CASE("iterative spectrum matches a dense assembly on the sphere") {
  SurfaceDomain dom(6, 1.0, {{-1, +1}});
  // n = 6 keeps the dense oracle at 144 x 144.
  Rng rng(3);
  RoundSphere sphere;
  MapField phi = random_smooth_map(dom, sphere, HomotopyClass::sphere_class(0), 0.3, rng);
  const int m = 10;
  SpectralData spec = dirac_spectrum(phi, m);
  CHECK(spec.eigenvalues.size() == m);
  for (int i = 0; i < m; ++i) CHECK(spec.residuals[i] <= 1e-8);
  // Tangency of the eigenspinors.
  for (const auto& e : spec.eigenspinors) CHECK(tangency_violation(phi, e) <= 1e-9);

  DenseTangentOperator dense = DenseTangentOperator::build(phi);
  Eigen::VectorXd all = dense.eigenvalues();
  std::vector<double> nearest(all.data(), all.data() + all.size());
  std::sort(nearest.begin(), nearest.end(),
            [](double a, double b) { return std::abs(a) < std::abs(b); });
  nearest.resize(m);
  std::vector<double> na, ga;
  for (int i = 0; i < m; ++i) {
    na.push_back(std::abs(nearest[i]));
    ga.push_back(std::abs(spec.eigenvalues[i]));
  }
  std::sort(na.begin(), na.end());
  std::sort(ga.begin(), ga.end());
  for (int i = 0; i < m; ++i) {
    CHECK(std::abs(ga[i] - na[i]) <= 1e-7 * (1.0 + na[i]));
  }
}

TEST_CASE("spectral projections: idempotent, complete on the span, fingerprint") {
  SurfaceDomain dom(8, 1.0, {{-1, -1}});
  FlatTorus2 torus(1.0);
  MapField phi = class_representative(dom, torus, HomotopyClass::torus_class(1, 0, 0, 1));
  SpectralData spec = dirac_spectrum(phi, 12);
  Rng rng(7);

  // A positive eigenmode projects to itself under P+ and to zero under P-.
  const int pos0 = spec.index_of_class_start(+1);
  REQUIRE(spec.n_positive > 0);
  const PlainSpinor& e = spec.eigenspinors[pos0];
  ProjectionResult pp = spectral_projection(spec, phi, e, SpectralSign::positive);
  PlainSpinor dp = axpy(-1.0, e, pp.field);
  CHECK(norm_l2(dp) <= 1e-10);
  CHECK_FALSE(pp.partial);
  ProjectionResult pm = spectral_projection(spec, phi, e, SpectralSign::negative);
  CHECK(norm_l2(pm.field) <= 1e-10);

  // Random element of the span: P+ + P0 + P- = identity on the span.
  PlainSpinor v(dom, 2);
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t i = 0; i < spec.eigenspinors.size(); ++i) {
    v = axpy(cdouble(g(rng), g(rng)), spec.eigenspinors[i], v);
  }
  ProjectionResult a = spectral_projection(spec, phi, v, SpectralSign::positive);
  ProjectionResult b = spectral_projection(spec, phi, v, SpectralSign::zero);
  ProjectionResult c = spectral_projection(spec, phi, v, SpectralSign::negative);
  PlainSpinor sum = axpy(1.0, a.field, axpy(1.0, b.field, c.field));
  PlainSpinor diff = axpy(-1.0, v, sum);
  CHECK(norm_l2(diff) <= 1e-10 * norm_l2(v));

  // Orthogonal complement: all projections vanish and the partial flag trips.
  PlainSpinor ortho = spec.eigenspinors[0];
  // Build something outside the resolved span: a high-frequency mode.
  PlainSpinor high(dom, 2);
  for (int i = 0; i < dom.n(); ++i)
    for (int j = 0; j < dom.n(); ++j)
      high(dom.index(i, j), 0, 0) =
          std::polar(1.0, 2.0 * std::numbers::pi * (3.5 * i + 2.5 * j) / dom.n());
  for (const auto& ev : spec.eigenspinors) {
    const cdouble coef = inner_l2(ev, high);
    high = axpy(-coef, ev, high);
  }
  if (norm_l2(high) > 1e-8) {
    ProjectionResult ph = spectral_projection(spec, phi, high, SpectralSign::positive);
    CHECK(ph.partial);
    CHECK(norm_l2(ph.field) <= 1e-9 * norm_l2(high));
  }
  (void)ortho;

  // Fingerprint mismatch is rejected.
  MapField other = phi;
  other(0, 0) += 0.5;
  CHECK_THROWS_AS(spectral_projection(spec, other, v, SpectralSign::positive), GeometryError);
}

TEST_CASE("lambda_plus: one-dimensional Rayleigh quotient and the symbol value") {
  SurfaceDomain dom(8, 1.0, {{-1, -1}});
  FlatTorus2 torus(1.0);
  MapField phi = class_representative(dom, torus, HomotopyClass::torus_class(1, 0, 0, 1));
  SpectralData spec = dirac_spectrum(phi, 16);
  const double lp = lambda_plus(phi, spec);
  // Closed form: min over positive modes of lambda/(1 + lambda); the minimum
  // sits at the smallest positive eigenvalue.
  double lmin = std::numeric_limits<double>::infinity();
  for (double l : spec.eigenvalues)
    if (l > spec.zero_threshold) lmin = std::min(lmin, l);
  CHECK(lp == doctest::Approx(lmin / (1.0 + lmin)).epsilon(1e-8));
  CHECK(lp > 0.0);
  CHECK(spec.lambda_plus_stabilized);
  // e_plus is H^{1/2}-normalized with constant pointwise density.
  CHECK(h_half_norm(spec.e_plus) == doctest::Approx(1.0).epsilon(1e-10));
  const double d0 = spec.e_plus.abs2(0);
  for (int idx = 0; idx < dom.vertices(); ++idx) {
    CHECK(spec.e_plus.abs2(idx) == doctest::Approx(d0).epsilon(1e-10));
  }
  // And the quadratic form at e_plus equals lambda_plus.
  const double q = inner_l2(spec.e_plus, twisted_dirac(phi, spec.e_plus)).real();
  CHECK(q == doctest::Approx(lp).epsilon(1e-9));
}

TEST_CASE("lambda_plus is positive and continuous under map perturbations (sphere)") {
  SurfaceDomain dom(8, 1.0, {{-1, -1}});
  RoundSphere sphere;
  Rng rng(11);
  MapField phi = random_smooth_map(dom, sphere, HomotopyClass::sphere_class(0), 0.25, rng);
  SpectralData spec = dirac_spectrum(phi, 12);
  const double lp0 = lambda_plus(phi, spec);
  CHECK(lp0 > 0.0);

  // Finite-difference continuity: |lambda+(phi + t X) - lambda+(phi)| halves
  // with the step (slope ratio near 2).
  Field X = random_tangent_field(phi, 0.5, rng);
  auto lp_at = [&](double t) {
    MapField phit = retract_map(phi, X, t);
    SpectralData s = dirac_spectrum(phit, 12);
    return lambda_plus(phit, s);
  };
  const double d1 = std::abs(lp_at(0.02) - lp0);
  const double d2 = std::abs(lp_at(0.01) - lp0);
  REQUIRE(d2 > 0.0);
  const double ratio = d1 / d2;
  CHECK(ratio > 1.5);
  CHECK(ratio < 2.5);
}

TEST_CASE("projection/transport compatibility estimate is stable under halving") {
  SurfaceDomain dom(8, 1.0, {{-1, -1}});
  RoundSphere sphere;
  Rng rng(13);
  MapField phi = random_smooth_map(dom, sphere, HomotopyClass::sphere_class(0), 0.2, rng);
  SpectralData spec = dirac_spectrum(phi, 12);
  PlainSpinor psi = random_tangent_spinor(phi, 1.0, rng);
  ProjectionResult pplus = spectral_projection(spec, phi, psi, SpectralSign::positive);
  Field X = random_tangent_field(phi, 0.5, rng);

  double c_prev = -1.0;
  for (double t : {0.08, 0.04}) {
    MapField phit = retract_map(phi, X, t);
    SpectralData spect = dirac_spectrum(phit, 12);
    PlainSpinor moved = transport_spinor(phi, phit, pplus.field);
    ProjectionResult back = spectral_projection(spect, phit, moved, SpectralSign::positive);
    PlainSpinor diff = axpy(-1.0, pplus.field, back.field);
    const double dphi = norm_w1_2alpha(
        [&] {
          Field d(dom, 3);
          for (int idx = 0; idx < dom.vertices(); ++idx)
            for (int c = 0; c < 3; ++c) d(idx, c) = phit(idx, c) - phi(idx, c);
          return d;
        }(),
        1.5);
    const double c_now = h_half_norm(diff) / (dphi * h_half_norm(pplus.field));
    if (c_prev > 0.0) CHECK(c_now <= 2.0 * c_prev);
    c_prev = c_now;
  }
}

TEST_CASE("eigenvalues vary Lipschitz-continuously along map families") {
  SurfaceDomain dom(8, 1.0, {{-1, +1}});
  RoundSphere sphere;
  Rng rng(17);
  MapField phi = random_smooth_map(dom, sphere, HomotopyClass::sphere_class(0), 0.2, rng);
  Field X = random_tangent_field(phi, 0.5, rng);
  SpectralData s0 = dirac_spectrum(phi, 6);
  const double t = 0.01;
  SpectralData s1 = dirac_spectrum(retract_map(phi, X, t), 6);
  // Pair by |lambda| rank: the sign split within a degenerate group is not
  // a continuous function of the map, the magnitudes are.
  std::vector<double> a0, a1;
  for (int i = 0; i < 6; ++i) {
    a0.push_back(std::abs(s0.eigenvalues[i]));
    a1.push_back(std::abs(s1.eigenvalues[i]));
  }
  std::sort(a0.begin(), a0.end());
  std::sort(a1.begin(), a1.end());
  for (int i = 0; i < 6; ++i) {
    const double slope = std::abs(a1[i] - a0[i]) / t;
    CHECK(slope <= 50.0);  // bounded finite-difference slope
  }
}

TEST_CASE("empty positive subspace and bad m are rejected") {
  SurfaceDomain dom(8, 1.0, {{+1, +1}});
  FlatTorus2 torus(1.0);
  MapField phi = class_representative(dom, torus, HomotopyClass::torus_class(1, 0, 0, 1));
  CHECK_THROWS_AS(dirac_spectrum(phi, 0), ConfigError);
  SpectralData spec = dirac_spectrum(phi, 4);  // all kernel modes
  CHECK(spec.n_positive == 0);
  CHECK_THROWS_AS(lambda_plus(phi, spec), ConvergenceError);
}
