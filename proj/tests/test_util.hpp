#pragma once

// Shared test oracles: finite-difference derivatives of the action along
// admissible paths, and dense assembly of the twisted Dirac operator. These
// stay independent of the gradient/eigensolver code paths they check.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "sdaf/sampling.hpp"
#include "sdaf/solver.hpp"

namespace sdaf::testutil {

// Central finite difference of t -> action(retract(phi, tX), transport psi)
// at t = 0: the oracle for the horizontal gradient.
inline double fd_horizontal_derivative(const MapField& phi, const PlainSpinor& psi,
                                       const Field& X, const ActionConfig& acfg,
                                       double step = 1e-4) {
  auto at = [&](double t) {
    MapField phit = retract_map(phi, X, t);
    PlainSpinor psit = project_tangent(phit, transport_spinor(phi, phit, psi));
    return action(phit, psit, acfg).total;
  };
  return (at(step) - at(-step)) / (2.0 * step);
}

// Central finite difference of t -> action(phi, psi + tY) at t = 0: the
// oracle for the vertical differential (paired against Y in L2).
inline double fd_vertical_derivative(const MapField& phi, const PlainSpinor& psi,
                                     const PlainSpinor& Y, const ActionConfig& acfg,
                                     double step = 1e-4) {
  auto at = [&](double t) {
    PlainSpinor psit = axpy(t, Y, psi);
    return action(phi, psit, acfg).total;
  };
  return (at(step) - at(-step)) / (2.0 * step);
}

// Second difference of t -> E^alpha(exp_phi(t V)) at t = 0: the oracle for
// the second variation quadratic form.
inline double fd_second_variation(const MapField& phi, const Field& V, double alpha,
                                  double step = 1e-3) {
  auto at = [&](double t) {
    MapField phit = phi;
    const int L = phi.ambient_dim();
    for (int idx = 0; idx < phi.domain().vertices(); ++idx) {
      double p[4], v[4], o[4];
      for (int c = 0; c < L; ++c) {
        p[c] = phi(idx, c);
        v[c] = V(idx, c);
      }
      phi.target().geodesic(p, v, t, o);
      for (int c = 0; c < L; ++c) phit(idx, c) = o[c];
    }
    return alpha_energy(phit, alpha);
  };
  return (at(step) - 2.0 * at(0.0) + at(-step)) / (step * step);
}

// Dense Hermitian matrix of the twisted Dirac operator in an orthonormal
// basis of the tangent spinor space (independent eigensolver oracle).
struct DenseTangentOperator {
  // Orthonormal real tangent frames per vertex (t1, t2) and the dense matrix
  // in the basis delta_x (x) delta_s (x) t_a, normalized to unit L2 norm.
  std::vector<std::array<double, 4>> frame1, frame2;
  Eigen::MatrixXcd H;

  static DenseTangentOperator build(const MapField& phi) {
    const SurfaceDomain& dom = phi.domain();
    const int L = phi.ambient_dim();
    const int nv = dom.vertices();
    DenseTangentOperator out;
    out.frame1.resize(nv);
    out.frame2.resize(nv);
    for (int idx = 0; idx < nv; ++idx) {
      double p[4] = {0, 0, 0, 0};
      for (int c = 0; c < L; ++c) p[c] = phi(idx, c);
      if (phi.target().flat_chart()) {
        out.frame1[idx] = {1.0, 0.0, 0.0, 0.0};
        out.frame2[idx] = {0.0, 1.0, 0.0, 0.0};
      } else {
        // Gram-Schmidt a coordinate axis against the normal p.
        int axis = 0;
        for (int c = 1; c < 3; ++c)
          if (std::abs(p[c]) < std::abs(p[axis])) axis = c;
        double t1[3] = {0, 0, 0};
        t1[axis] = 1.0;
        double dot = t1[0] * p[0] + t1[1] * p[1] + t1[2] * p[2];
        for (int c = 0; c < 3; ++c) t1[c] -= dot * p[c];
        double nn = std::sqrt(t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2]);
        for (int c = 0; c < 3; ++c) t1[c] /= nn;
        const double t2[3] = {p[1] * t1[2] - p[2] * t1[1], p[2] * t1[0] - p[0] * t1[2],
                              p[0] * t1[1] - p[1] * t1[0]};
        out.frame1[idx] = {t1[0], t1[1], t1[2], 0.0};
        out.frame2[idx] = {t2[0], t2[1], t2[2], 0.0};
      }
    }

    const int dim = nv * 2 * 2;
    const double inv_h = 1.0 / dom.h();
    out.H = Eigen::MatrixXcd::Zero(dim, dim);
    auto basis_vec = [&](int col) {
      PlainSpinor b(dom, L);
      const int idx = col / 4;
      const int s = (col / 2) % 2;
      const int a = col % 2;
      const auto& fr = a == 0 ? out.frame1[idx] : out.frame2[idx];
      for (int c = 0; c < L; ++c) b(idx, s, c) = fr[c] * inv_h;  // unit L2 norm
      return b;
    };
    for (int col = 0; col < dim; ++col) {
      PlainSpinor Db = twisted_dirac(phi, basis_vec(col));
      for (int row = 0; row < dim; ++row) {
        out.H(row, col) = inner_l2(basis_vec(row), Db);
      }
    }
    out.H = 0.5 * (out.H + out.H.adjoint()).eval();
    return out;
  }

  Eigen::VectorXd eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    return es.eigenvalues();
  }
};

}  // namespace sdaf::testutil
