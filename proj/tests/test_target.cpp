#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "sdaf/sampling.hpp"
#include "sdaf/solver.hpp"
#include "sdaf/target.hpp"

using namespace sdaf;

namespace {
void random_unit3(double* p, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  double nn = 0.0;
  for (int c = 0; c < 3; ++c) {
    p[c] = g(rng);
    nn += p[c] * p[c];
  }
  nn = std::sqrt(nn);
  for (int c = 0; c < 3; ++c) p[c] /= nn;
}

void random_tangent3(const double* p, double* v, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (int c = 0; c < 3; ++c) v[c] = g(rng);
  const double d = v[0] * p[0] + v[1] * p[1] + v[2] * p[2];
  for (int c = 0; c < 3; ++c) v[c] -= d * p[c];
}
}  // namespace

TEST_CASE("sphere projection: radial, idempotent, singular at the center") {
  RoundSphere s;
  double p[3] = {2.0, 0.0, 0.0};
  s.project(p);
  CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(p[1] == 0.0);
  s.project(p);
  CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-15));

  double zero[3] = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(s.project(zero), GeometryError);
}

TEST_CASE("tangent projector is symmetric idempotent of rank 2") {
  RoundSphere s;
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    double p[3], P[9];
    random_unit3(p, rng);
    s.tangent_projector(p, P);
    double trace = 0.0;
    for (int a = 0; a < 3; ++a) {
      trace += P[a * 3 + a];
      for (int b = 0; b < 3; ++b) {
        CHECK(P[a * 3 + b] == doctest::Approx(P[b * 3 + a]).epsilon(1e-14));
        double pp = 0.0;
        for (int k = 0; k < 3; ++k) pp += P[a * 3 + k] * P[k * 3 + b];
        CHECK(pp == doctest::Approx(P[a * 3 + b]).epsilon(1e-13));
      }
    }
    CHECK(trace == doctest::Approx(2.0).epsilon(1e-13));
  }
}

TEST_CASE("projector annihilates geodesic velocities") {
  RoundSphere s;
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    double p[3], v[3];
    random_unit3(p, rng);
    random_tangent3(p, v, rng);
    // velocity of exp_p(t v) at small t by central differences
    double fw[3], bw[3];
    s.geodesic(p, v, 1e-6, fw);
    s.geodesic(p, v, -1e-6, bw);
    double vel[3], P[9];
    for (int c = 0; c < 3; ++c) vel[c] = (fw[c] - bw[c]) / 2e-6;
    s.tangent_projector(p, P);
    for (int a = 0; a < 3; ++a) {
      double pv = 0.0;
      for (int b = 0; b < 3; ++b) pv += P[a * 3 + b] * vel[b];
      CHECK(pv == doctest::Approx(vel[a]).epsilon(1e-8).scale(1.0));
    }
  }
}

TEST_CASE("sphere curvature: constant-curvature identity and Bianchi") {
  RoundSphere s;
  std::mt19937_64 rng(7);
  double p[3];
  random_unit3(p, rng);
  // orthonormal tangent pair
  double X[3], Y[3];
  random_tangent3(p, X, rng);
  double nx = std::sqrt(X[0] * X[0] + X[1] * X[1] + X[2] * X[2]);
  for (int c = 0; c < 3; ++c) X[c] /= nx;
  Y[0] = p[1] * X[2] - p[2] * X[1];
  Y[1] = p[2] * X[0] - p[0] * X[2];
  Y[2] = p[0] * X[1] - p[1] * X[0];

  double R[3];
  s.curvature_op(p, X, Y, Y, R);
  for (int c = 0; c < 3; ++c) CHECK(R[c] == doctest::Approx(X[c]).epsilon(1e-13));
  double sec = R[0] * X[0] + R[1] * X[1] + R[2] * X[2];
  CHECK(sec == doctest::Approx(1.0).epsilon(1e-13));

  // Antisymmetry in (X, Y) and the first Bianchi identity.
  double Z[3];
  random_tangent3(p, Z, rng);
  double rxy[3], ryx[3], r1[3], r2[3], r3[3];
  s.curvature_op(p, X, Y, Z, rxy);
  s.curvature_op(p, Y, X, Z, ryx);
  for (int c = 0; c < 3; ++c) CHECK(rxy[c] == doctest::Approx(-ryx[c]).epsilon(1e-13));
  s.curvature_op(p, X, Y, Z, r1);
  s.curvature_op(p, Y, Z, X, r2);
  s.curvature_op(p, Z, X, Y, r3);
  for (int c = 0; c < 3; ++c) CHECK(std::abs(r1[c] + r2[c] + r3[c]) <= 1e-12);

  // Gauss equation from the embedding: A(U, V) = -<U, V> p gives
  // <R(X,Y)Z, W> = <A(X,W), A(Y,Z)> - <A(X,Z), A(Y,W)>.
  double W[3];
  random_tangent3(p, W, rng);
  auto dot = [](const double* a, const double* b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  };
  const double gauss = dot(X, W) * dot(Y, Z) - dot(X, Z) * dot(Y, W);
  double RXYZ[3];
  s.curvature_op(p, X, Y, Z, RXYZ);
  CHECK(dot(RXYZ, W) == doctest::Approx(gauss).epsilon(1e-12).scale(1.0));
}

TEST_CASE("geodesics and parallel transport on the sphere") {
  RoundSphere s;
  {
    double p[3] = {1.0, 0.0, 0.0};
    double v[3] = {0.0, std::numbers::pi / 2.0, 0.0};
    double q[3];
    s.geodesic(p, v, 1.0, q);
    CHECK(q[0] == doctest::Approx(0.0).epsilon(1e-14).scale(1.0));
    CHECK(q[1] == doctest::Approx(1.0).epsilon(1e-14));
    s.geodesic(p, v, 0.0, q);
    CHECK(q[0] == doctest::Approx(1.0).epsilon(1e-15));
  }
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    double p[3], q[3], w[3], out[3], back[3];
    random_unit3(p, rng);
    random_unit3(q, rng);
    if (p[0] * q[0] + p[1] * q[1] + p[2] * q[2] < -0.9) continue;
    random_tangent3(p, w, rng);
    s.parallel_transport(p, q, w, out);
    // isometry
    const double n0 = std::hypot(w[0], std::hypot(w[1], w[2]));
    const double n1 = std::hypot(out[0], std::hypot(out[1], out[2]));
    CHECK(n1 == doctest::Approx(n0).epsilon(1e-12));
    // tangency at q
    CHECK(std::abs(out[0] * q[0] + out[1] * q[1] + out[2] * q[2]) <= 1e-12);
    // reversal is the inverse
    s.parallel_transport(q, p, out, back);
    for (int c = 0; c < 3; ++c) CHECK(back[c] == doctest::Approx(w[c]).epsilon(1e-12).scale(1.0));
  }
  // Antipodal points are rejected.
  double p[3] = {1.0, 0.0, 0.0}, q[3] = {-1.0, 0.0, 0.0}, w[3] = {0.0, 1.0, 0.0}, o[3];
  CHECK_THROWS_AS(s.parallel_transport(p, q, w, o), GeometryError);
}

TEST_CASE("flat torus chart: mod reduction, identity transport, zero curvature") {
  FlatTorus2 t(2.0 * std::numbers::pi);
  double p[2] = {7.0, -1.0};
  t.project(p);
  CHECK(p[0] == doctest::Approx(7.0 - 2.0 * std::numbers::pi).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(2.0 * std::numbers::pi - 1.0).epsilon(1e-14));

  double w[2] = {0.3, -0.8}, o[2];
  t.parallel_transport(p, p, w, o);
  CHECK(o[0] == w[0]);
  CHECK(o[1] == w[1]);
  double X[2] = {1, 0}, Y[2] = {0, 1}, Z[2] = {2, 3}, R[2];
  t.curvature_op(p, X, Y, Z, R);
  CHECK(R[0] == 0.0);
  CHECK(R[1] == 0.0);

  auto e = t.embed_ambient4(p);
  CHECK(e[0] * e[0] + e[1] * e[1] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(e[2] * e[2] + e[3] * e[3] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("transport_spinor: identity cases and the Lipschitz estimate") {
  SurfaceDomain dom(12, 1.0, {{+1, +1}});
  RoundSphere sphere;
  Rng rng(13);
  MapField phi = random_smooth_map(dom, sphere, HomotopyClass::sphere_class(0), 0.2, rng);
  PlainSpinor psi = random_tangent_spinor(phi, 1.0, rng);

  // Same map: unchanged.
  PlainSpinor same = transport_spinor(phi, phi, psi);
  for (std::size_t i = 0; i < psi.size(); ++i) {
    CHECK(std::abs(same.data()[i] - psi.data()[i]) <= 1e-14);
  }

  // Flat target: componentwise identity.
  FlatTorus2 torus(1.0);
  MapField tphi = random_smooth_map(dom, torus, HomotopyClass::torus_class(1, 0, 0, 1), 0.1, rng);
  PlainSpinor tpsi = random_tangent_spinor(tphi, 1.0, rng);
  MapField tphi2 = tphi;
  for (int idx = 0; idx < dom.vertices(); ++idx) tphi2(idx, 0) += 0.07;
  PlainSpinor moved = transport_spinor(tphi, tphi2, tpsi);
  for (std::size_t i = 0; i < tpsi.size(); ++i) CHECK(moved.data()[i] == tpsi.data()[i]);

  // Pointwise isometry and exact tangency after transport.
  Field dir = random_tangent_field(phi, 0.3, rng);
  MapField phi2 = retract_map(phi, dir, 1.0);
  PlainSpinor out = transport_spinor(phi, phi2, psi);
  for (int idx = 0; idx < dom.vertices(); ++idx) {
    CHECK(out.abs2(idx) == doctest::Approx(psi.abs2(idx)).epsilon(1e-12));
  }
  CHECK(tangency_violation(phi2, out) <= 1e-12);

  // Linear scaling: || T psi - psi || <= C |phi2 - phi| ||psi||, C stable
  // under step halving.
  double c_prev = -1.0;
  for (double t : {0.2, 0.1, 0.05}) {
    MapField phit = retract_map(phi, dir, t);
    PlainSpinor tr = transport_spinor(phi, phit, psi);
    PlainSpinor diff = axpy(-1.0, psi, tr);
    double supmove = 0.0;
    for (int idx = 0; idx < dom.vertices(); ++idx) {
      double p[3], q[3];
      for (int c = 0; c < 3; ++c) {
        p[c] = phi(idx, c);
        q[c] = phit(idx, c);
      }
      supmove = std::max(supmove, sphere.distance(p, q));
    }
    const double c_now = norm_l2(diff) / (supmove * norm_l2(psi));
    if (c_prev > 0.0) CHECK(std::abs(c_now - c_prev) <= 0.5 * c_prev);
    c_prev = c_now;
  }

  // Far-apart maps are rejected.
  MapField far = phi;
  for (int idx = 0; idx < dom.vertices(); ++idx) {
    far(idx, 0) = -phi(idx, 0);
    far(idx, 1) = -phi(idx, 1);
    far(idx, 2) = -phi(idx, 2);
  }
  CHECK_THROWS_AS(transport_spinor(phi, far, psi), GeometryError);
}

TEST_CASE("winding computation: identity, constant, double cover, degree") {
  SurfaceDomain dom(16, 1.0, {{+1, +1}});
  FlatTorus2 torus(1.0);
  {
    MapField phi = class_representative(dom, torus, HomotopyClass::torus_class(1, 0, 0, 1));
    WindingResult w = winding_of(phi);
    CHECK(w.ok);
    CHECK(w.cls.winding[0][0] == 1);
    CHECK(w.cls.winding[0][1] == 0);
    CHECK(w.cls.winding[1][0] == 0);
    CHECK(w.cls.winding[1][1] == 1);
  }
  {
    MapField phi = class_representative(dom, torus, HomotopyClass::torus_class(0, 0, 0, 0));
    WindingResult w = winding_of(phi);
    CHECK(w.ok);
    for (int c = 0; c < 2; ++c)
      for (int a = 0; a < 2; ++a) CHECK(w.cls.winding[c][a] == 0);
  }
  {
    MapField phi = class_representative(dom, torus, HomotopyClass::torus_class(2, 0, 0, 1));
    WindingResult w = winding_of(phi);
    CHECK(w.ok);
    CHECK(w.cls.winding[0][0] == 2);
    CHECK(w.cls.winding[1][1] == 1);
  }
  {
    RoundSphere sphere;
    MapField constant = class_representative(dom, sphere, HomotopyClass::sphere_class(0));
    WindingResult w = winding_of(constant);
    CHECK(w.ok);
    CHECK(w.cls.degree == 0);

    MapField bubble = bubble_map(dom, sphere, 0.15, 0.5, 0.5);
    WindingResult wb = winding_of(bubble);
    CHECK(wb.cls.degree == 1);
  }
}

TEST_CASE("class representative is on-manifold and in class") {
  SurfaceDomain dom(8, 1.0, {{+1, +1}});
  RoundSphere sphere;
  MapField c = class_representative(dom, sphere, HomotopyClass::sphere_class(0));
  CHECK(c.off_manifold_error() <= 1e-15);
  CHECK_THROWS_AS(class_representative(dom, sphere, HomotopyClass::sphere_class(2)), ConfigError);
}
