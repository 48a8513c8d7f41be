#include "sdaf/functional.hpp"

#include <cmath>

#include "sdaf/parallel.hpp"

namespace sdaf {

namespace {
constexpr cdouble kI(0.0, 1.0);

// Central difference of psi with spin-structure signs along one axis.
inline void central_diff(const SurfaceDomain& dom, const PlainSpinor& psi, int axis, int idx,
                         int L, cdouble* out /* 2 x L */) {
  const int iu = dom.up(axis, idx), id = dom.dn(axis, idx);
  const double su = dom.sgn_up(axis, idx), sd = dom.sgn_dn(axis, idx);
  const double inv_2h = 0.5 / dom.h();
  for (int s = 0; s < 2; ++s)
    for (int m = 0; m < L; ++m)
      out[s * L + m] = (su * psi(iu, s, m) - sd * psi(id, s, m)) * inv_2h;
}
}  // namespace

CanonicalPerturbation::CanonicalPerturbation(double mu) : mu_(mu) {
  if (!(mu > 2.0)) {
    throw ConfigError("canonical perturbation requires mu > 2, got " + std::to_string(mu));
  }
}

double CanonicalPerturbation::value(const double*, const cdouble* psi, int L) const {
  double a2 = 0.0;
  for (int k = 0; k < 2 * L; ++k) a2 += std::norm(psi[k]);
  return std::pow(a2, mu_ / 2.0);
}

void CanonicalPerturbation::d_psi(const double*, const cdouble* psi, int L, cdouble* out) const {
  double a2 = 0.0;
  for (int k = 0; k < 2 * L; ++k) a2 += std::norm(psi[k]);
  const double f = a2 > 0.0 ? mu_ * std::pow(a2, mu_ / 2.0 - 1.0) : 0.0;
  for (int k = 0; k < 2 * L; ++k) out[k] = f * psi[k];
}

void CanonicalPerturbation::d_phi(const double*, const cdouble*, int L, double* out) const {
  for (int c = 0; c < L; ++c) out[c] = 0.0;
}

void ActionConfig::validate() const {
  if (!(alpha > 1.0 && alpha <= 2.0)) {
    throw ConfigError("ActionConfig: alpha must lie in (1, 2], got " + std::to_string(alpha));
  }
  if (perturbation_scale < 0.0) {
    throw ConfigError("ActionConfig: perturbation scale must be >= 0");
  }
  if (!hook && !(resolved_mu() > 2.0)) {
    throw ConfigError("ActionConfig: canonical exponent mu = " + std::to_string(resolved_mu()) +
                      " violates mu > 2 (at alpha = " + std::to_string(alpha) +
                      " supply an explicit mu > 2)");
  }
}

const Perturbation& ActionConfig::perturbation() const {
  if (hook) return *hook;
  if (!canonical_ || static_cast<const CanonicalPerturbation*>(canonical_.get())->mu() !=
                         resolved_mu()) {
    canonical_ = std::make_shared<CanonicalPerturbation>(resolved_mu());
  }
  return *canonical_;
}

double alpha_energy(const MapField& phi, double alpha) {
  const SurfaceDomain& dom = phi.domain();
  const int L = phi.ambient_dim();
  const double w = dom.h() * dom.h();
  return 0.5 * w * parallel_sum(dom.vertices(), [&](std::ptrdiff_t vi) {
    const int idx = static_cast<int>(vi);
    double g2 = 0.0;
    for (int axis = 0; axis < 2; ++axis)
      for (int c = 0; c < L; ++c) {
        const double d = phi.dplus(axis, idx, c);
        g2 += d * d;
      }
    return std::pow(1.0 + g2, alpha);
  });
}

Field dirichlet_density(const MapField& phi) {
  const SurfaceDomain& dom = phi.domain();
  const int L = phi.ambient_dim();
  Field e(dom, 1);
  parallel_for(dom.vertices(), [&](std::ptrdiff_t vi) {
    const int idx = static_cast<int>(vi);
    double g2 = 0.0;
    for (int axis = 0; axis < 2; ++axis)
      for (int c = 0; c < L; ++c) {
        const double d = phi.dplus(axis, idx, c);
        g2 += d * d;
      }
    e(idx, 0) = g2;
  });
  return e;
}

double dirichlet_energy(const MapField& phi) { return 0.5 * integrate(dirichlet_density(phi)); }

PlainSpinor twisted_dirac(const MapField& phi, const PlainSpinor& psi) {
  const SurfaceDomain& dom = phi.domain();
  const int L = phi.ambient_dim();
  if (phi.target().flat_chart()) return untwisted_dirac(psi);

  PlainSpinor out(dom, L);
  parallel_for(dom.vertices(), [&](std::ptrdiff_t vi) {
    const int idx = static_cast<int>(vi);
    double p[4], P[16];
    for (int c = 0; c < L; ++c) p[c] = phi(idx, c);
    phi.target().tangent_projector(p, P);
    cdouble d0[8], d1[8], pd0[8], pd1[8];
    central_diff(dom, psi, 0, idx, L, d0);
    central_diff(dom, psi, 1, idx, L, d1);
    for (int s = 0; s < 2; ++s) {
      for (int m = 0; m < L; ++m) {
        cdouble a0(0.0, 0.0), a1(0.0, 0.0);
        for (int mm = 0; mm < L; ++mm) {
          a0 += P[m * L + mm] * d0[s * L + mm];
          a1 += P[m * L + mm] * d1[s * L + mm];
        }
        pd0[s * L + m] = a0;
        pd1[s * L + m] = a1;
      }
    }
    for (int m = 0; m < L; ++m) {
      out(idx, 0, m) = kI * pd0[1 * L + m] + pd1[1 * L + m];
      out(idx, 1, m) = kI * pd0[0 * L + m] - pd1[0 * L + m];
    }
  });
  return out;
}

double dirac_action(const MapField& phi, const PlainSpinor& psi) {
  return 0.5 * inner_l2(psi, twisted_dirac(phi, psi)).real();
}

double perturbation_total(const MapField& phi, const PlainSpinor& psi, const ActionConfig& cfg) {
  const Perturbation& F = cfg.perturbation();
  const SurfaceDomain& dom = phi.domain();
  const int L = phi.ambient_dim();
  const double w = dom.h() * dom.h();
  return w * parallel_sum(dom.vertices(), [&](std::ptrdiff_t vi) {
    const int idx = static_cast<int>(vi);
    double p[4];
    cdouble sp[8];
    for (int c = 0; c < L; ++c) p[c] = phi(idx, c);
    for (int s = 0; s < 2; ++s)
      for (int m = 0; m < L; ++m) sp[s * L + m] = psi(idx, s, m);
    return F.value(p, sp, L);
  });
}

PlainSpinor perturbation_d_psi(const MapField& phi, const PlainSpinor& psi,
                               const ActionConfig& cfg) {
  const Perturbation& F = cfg.perturbation();
  const SurfaceDomain& dom = phi.domain();
  const int L = phi.ambient_dim();
  PlainSpinor out(dom, L);
  parallel_for(dom.vertices(), [&](std::ptrdiff_t vi) {
    const int idx = static_cast<int>(vi);
    double p[4];
    cdouble sp[8], d[8];
    for (int c = 0; c < L; ++c) p[c] = phi(idx, c);
    for (int s = 0; s < 2; ++s)
      for (int m = 0; m < L; ++m) sp[s * L + m] = psi(idx, s, m);
    F.d_psi(p, sp, L, d);
    for (int s = 0; s < 2; ++s)
      for (int m = 0; m < L; ++m) out(idx, s, m) = d[s * L + m];
  });
  return out;
}

Field perturbation_d_phi(const MapField& phi, const PlainSpinor& psi, const ActionConfig& cfg) {
  const Perturbation& F = cfg.perturbation();
  const SurfaceDomain& dom = phi.domain();
  const int L = phi.ambient_dim();
  Field out(dom, L);
  parallel_for(dom.vertices(), [&](std::ptrdiff_t vi) {
    const int idx = static_cast<int>(vi);
    double p[4], g[4], P[16];
    cdouble sp[8];
    for (int c = 0; c < L; ++c) p[c] = phi(idx, c);
    for (int s = 0; s < 2; ++s)
      for (int m = 0; m < L; ++m) sp[s * L + m] = psi(idx, s, m);
    F.d_phi(p, sp, L, g);
    if (!phi.target().flat_chart()) {
      phi.target().tangent_projector(p, P);
      double t[4];
      for (int a = 0; a < L; ++a) {
        t[a] = 0.0;
        for (int b = 0; b < L; ++b) t[a] += P[a * L + b] * g[b];
      }
      for (int a = 0; a < L; ++a) g[a] = t[a];
    }
    for (int c = 0; c < L; ++c) out(idx, c) = g[c];
  });
  return out;
}

ActionValue action(const MapField& phi, const PlainSpinor& psi, const ActionConfig& cfg) {
  cfg.validate();
  ActionValue v;
  v.alpha_energy = alpha_energy(phi, cfg.alpha);
  v.dirac_action = dirac_action(phi, psi);
  v.perturbation = cfg.perturbation_scale > 0.0 ? perturbation_total(phi, psi, cfg) : 0.0;
  v.total = v.alpha_energy + v.dirac_action - cfg.perturbation_scale * v.perturbation;
  return v;
}

Field horizontal_gradient(const MapField& phi, const PlainSpinor& psi, const ActionConfig& cfg) {
  cfg.validate();
  const SurfaceDomain& dom = phi.domain();
  const int L = phi.ambient_dim();
  const double alpha = cfg.alpha;
  const bool flat = phi.target().flat_chart();

  // Energy part: -alpha * div( (1+|dphi|^2)^(alpha-1) dphi ).
  Field d[2];
  phi.differential(d);
  Field wd[2] = {Field(dom, L), Field(dom, L)};
  parallel_for(dom.vertices(), [&](std::ptrdiff_t vi) {
    const int idx = static_cast<int>(vi);
    double g2 = 0.0;
    for (int axis = 0; axis < 2; ++axis)
      for (int c = 0; c < L; ++c) g2 += d[axis](idx, c) * d[axis](idx, c);
    const double wgt = std::pow(1.0 + g2, alpha - 1.0);
    for (int axis = 0; axis < 2; ++axis)
      for (int c = 0; c < L; ++c) wd[axis](idx, c) = wgt * d[axis](idx, c);
  });
  GradField wg{{std::move(wd[0]), std::move(wd[1])}};
  Field grad_out = div(wg);
  parallel_for(static_cast<std::ptrdiff_t>(grad_out.size()),
               [&](std::ptrdiff_t i) { grad_out.data()[i] *= -alpha; });

  if (!flat) {
    // Dirac part: exact derivative of 0.5 Re(psi, D_phi psi) through the
    // projector and the transported spinor. Both contributions contract
    // dPi[X] against an L x L matrix per vertex.
    parallel_for(dom.vertices(), [&](std::ptrdiff_t vi) {
      const int idx = static_cast<int>(vi);
      double p[4], P[16];
      for (int c = 0; c < L; ++c) p[c] = phi(idx, c);
      phi.target().tangent_projector(p, P);

      cdouble du[2][8];
      central_diff(dom, psi, 0, idx, L, du[0]);
      central_diff(dom, psi, 1, idx, L, du[1]);

      // S_{mm'} = Re sum_{a,s,s'} conj(psi_{sm}) (e_a)_{ss'} (d_a psi)_{s'm'}.
      double S[16];
      for (int m = 0; m < L; ++m) {
        for (int mm = 0; mm < L; ++mm) {
          cdouble acc(0.0, 0.0);
          for (int a = 0; a < 2; ++a) {
            // e_a rows: (e_a u)_0 involves u_1, (e_a u)_1 involves u_0.
            const cdouble u0 = du[a][0 * L + mm], u1 = du[a][1 * L + mm];
            const cdouble e_u0 = (a == 0) ? kI * u1 : u1;
            const cdouble e_u1 = (a == 0) ? kI * u0 : -u0;
            acc += std::conj(psi(idx, 0, m)) * e_u0 + std::conj(psi(idx, 1, m)) * e_u1;
          }
          S[m * L + mm] = acc.real();
        }
      }

      // V = (I - Pi) (C psi) with C the unprojected stencil;
      // R_{mm'} = Re sum_s conj(V_{sm}) psi_{sm'}.
      cdouble C[8];
      for (int m = 0; m < L; ++m) {
        C[0 * L + m] = kI * du[0][1 * L + m] + du[1][1 * L + m];
        C[1 * L + m] = kI * du[0][0 * L + m] - du[1][0 * L + m];
      }
      cdouble Vn[8];
      for (int s = 0; s < 2; ++s) {
        for (int m = 0; m < L; ++m) {
          cdouble acc = C[s * L + m];
          for (int mm = 0; mm < L; ++mm) acc -= P[m * L + mm] * C[s * L + mm];
          Vn[s * L + m] = acc;
        }
      }
      double R[16];
      for (int m = 0; m < L; ++m)
        for (int mm = 0; mm < L; ++mm) {
          cdouble acc = std::conj(Vn[0 * L + m]) * psi(idx, 0, mm) +
                        std::conj(Vn[1 * L + m]) * psi(idx, 1, mm);
          R[m * L + mm] = acc.real();
        }

      double T[16], G[4];
      for (int k = 0; k < L * L; ++k) T[k] = 0.5 * (S[k] + R[k]);
      phi.target().projector_derivative_contraction(p, T, G);
      for (int c = 0; c < L; ++c) grad_out(idx, c) += G[c];
    });
  }

  if (cfg.perturbation_scale > 0.0 && cfg.hook) {
    Field fphi = perturbation_d_phi(phi, psi, cfg);
    parallel_for(static_cast<std::ptrdiff_t>(grad_out.size()), [&](std::ptrdiff_t i) {
      grad_out.data()[i] -= cfg.perturbation_scale * fphi.data()[i];
    });
  }

  return flat ? grad_out : project_map_tangent(phi, grad_out);
}

PlainSpinor dirac_residual(const MapField& phi, const PlainSpinor& psi, const ActionConfig& cfg) {
  cfg.validate();
  PlainSpinor r = twisted_dirac(phi, psi);
  if (cfg.perturbation_scale > 0.0) {
    PlainSpinor f = perturbation_d_psi(phi, psi, cfg);
    cdouble* pr = r.data();
    const cdouble* pf = f.data();
    const double s = cfg.perturbation_scale;
    parallel_for(static_cast<std::ptrdiff_t>(r.size()),
                 [&](std::ptrdiff_t i) { pr[i] -= s * pf[i]; });
  }
  return r;
}

PlainSpinor vertical_gradient(const MapField& phi, const PlainSpinor& psi,
                              const ActionConfig& cfg) {
  return resolvent_precondition(dirac_residual(phi, psi, cfg));
}

double second_variation(const MapField& phi, const Field& V, const Field& W, double alpha) {
  const SurfaceDomain& dom = phi.domain();
  const int L = phi.ambient_dim();
  if (map_tangency_violation(phi, V) > 1e-10 || map_tangency_violation(phi, W) > 1e-10) {
    throw GeometryError("second_variation: variations must be tangent along the map");
  }

  Field d[2];
  phi.differential(d);
  // Mixed second derivative of the vertexwise exponential.
  Field corr(dom, L);
  parallel_for(dom.vertices(), [&](std::ptrdiff_t vi) {
    const int idx = static_cast<int>(vi);
    double p[4], a[4], b[4], c[4];
    for (int k = 0; k < L; ++k) {
      p[k] = phi(idx, k);
      a[k] = V(idx, k);
      b[k] = W(idx, k);
    }
    phi.target().exp_mixed_second(p, a, b, c);
    for (int k = 0; k < L; ++k) corr(idx, k) = c[k];
  });
  GradField dV = grad(V);
  GradField dW = grad(W);
  GradField dC = grad(corr);

  const double w = dom.h() * dom.h();
  return w * parallel_sum(dom.vertices(), [&](std::ptrdiff_t vi) {
    const int idx = static_cast<int>(vi);
    double g2 = 0.0, vw = 0.0, vphi = 0.0, wphi = 0.0, cphi = 0.0;
    for (int axis = 0; axis < 2; ++axis) {
      for (int c = 0; c < L; ++c) {
        const double dp = d[axis](idx, c);
        g2 += dp * dp;
        vw += dV.axis[axis](idx, c) * dW.axis[axis](idx, c);
        vphi += dV.axis[axis](idx, c) * dp;
        wphi += dW.axis[axis](idx, c) * dp;
        cphi += dC.axis[axis](idx, c) * dp;
      }
    }
    const double w1 = std::pow(1.0 + g2, alpha - 1.0);
    const double w2 = std::pow(1.0 + g2, alpha - 2.0);
    return alpha * w1 * (vw + cphi) + 2.0 * alpha * (alpha - 1.0) * w2 * vphi * wphi;
  });
}

double map_tangency_violation(const MapField& phi, const Field& X) {
  if (phi.target().flat_chart()) return 0.0;
  const int L = phi.ambient_dim();
  double worst = 0.0;
  for (int idx = 0; idx < phi.domain().vertices(); ++idx) {
    double dot = 0.0;
    for (int c = 0; c < L; ++c) dot += phi(idx, c) * X(idx, c);
    worst = std::max(worst, std::abs(dot));
  }
  return worst;
}

Field project_map_tangent(const MapField& phi, const Field& X) {
  if (phi.target().flat_chart()) return X;
  const SurfaceDomain& dom = phi.domain();
  const int L = phi.ambient_dim();
  Field out(dom, L);
  parallel_for(dom.vertices(), [&](std::ptrdiff_t vi) {
    const int idx = static_cast<int>(vi);
    double p[4], P[16];
    for (int c = 0; c < L; ++c) p[c] = phi(idx, c);
    phi.target().tangent_projector(p, P);
    for (int a = 0; a < L; ++a) {
      double acc = 0.0;
      for (int b = 0; b < L; ++b) acc += P[a * L + b] * X(idx, b);
      out(idx, a) = acc;
    }
  });
  return out;
}

}  // namespace sdaf
