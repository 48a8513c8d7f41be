#include "sdaf/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

#include "sdaf/parallel.hpp"

namespace sdaf {

namespace {

// Combined tangent state (map direction, spinor direction) with the L2 x L2
// inner product used by the matrix-free Krylov solver.
struct TangentPair {
  Field X;
  PlainSpinor Y;
};

TangentPair make_zero_pair(const MapField& phi) {
  return {Field(phi.domain(), phi.ambient_dim()),
          PlainSpinor(phi.domain(), phi.ambient_dim())};
}

double pair_dot(const TangentPair& a, const TangentPair& b) {
  return inner_l2(a.X, b.X) + inner_l2(a.Y, b.Y).real();
}

double pair_norm(const TangentPair& a) { return std::sqrt(std::max(0.0, pair_dot(a, a))); }

void pair_axpy(double alpha, const TangentPair& x, TangentPair& y) {
  parallel_for(static_cast<std::ptrdiff_t>(y.X.size()),
               [&](std::ptrdiff_t i) { y.X.data()[i] += alpha * x.X.data()[i]; });
  parallel_for(static_cast<std::ptrdiff_t>(y.Y.size()),
               [&](std::ptrdiff_t i) { y.Y.data()[i] += alpha * x.Y.data()[i]; });
}

void pair_scale(TangentPair& x, double alpha) {
  parallel_for(static_cast<std::ptrdiff_t>(x.X.size()),
               [&](std::ptrdiff_t i) { x.X.data()[i] *= alpha; });
  parallel_for(static_cast<std::ptrdiff_t>(x.Y.size()),
               [&](std::ptrdiff_t i) { x.Y.data()[i] *= alpha; });
}

double field_max_abs(const Field& f) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) m = std::max(m, std::abs(f.data()[i]));
  return m;
}

// phi' = retract(phi, s*X), psi' = Pi_phi' transport(psi + s*Y).
struct State {
  MapField phi;
  PlainSpinor psi;
};

State retract_state(const State& st, const TangentPair& d, double s) {
  State out;
  out.phi = retract_map(st.phi, d.X, s);
  PlainSpinor moved = st.psi;
  cdouble* pm = moved.data();
  const cdouble* pd = d.Y.data();
  parallel_for(static_cast<std::ptrdiff_t>(moved.size()),
               [&](std::ptrdiff_t i) { pm[i] += s * pd[i]; });
  out.psi = project_tangent(out.phi, transport_spinor(st.phi, out.phi, moved));
  return out;
}

// Residual of the coupled system at a state, pulled back to the tangent
// spaces at `base` so Krylov vectors stay comparable.
TangentPair residual_at(const State& st, const ActionConfig& acfg) {
  return {horizontal_gradient(st.phi, st.psi, acfg), dirac_residual(st.phi, st.psi, acfg)};
}

Field transport_map_field(const MapField& from, const MapField& to, const Field& X) {
  if (from.target().flat_chart()) return X;
  const int L = from.ambient_dim();
  Field out(from.domain(), L);
  for (int idx = 0; idx < from.domain().vertices(); ++idx) {
    double p[4], q[4], w[4], o[4];
    for (int c = 0; c < L; ++c) {
      p[c] = from(idx, c);
      q[c] = to(idx, c);
      w[c] = X(idx, c);
    }
    from.target().parallel_transport(p, q, w, o);
    for (int c = 0; c < L; ++c) out(idx, c) = o[c];
  }
  return out;
}

TangentPair pullback_residual(const State& base, const State& at, const ActionConfig& acfg) {
  TangentPair r = residual_at(at, acfg);
  return {transport_map_field(at.phi, base.phi, r.X),
          transport_spinor(at.phi, base.phi, r.Y)};
}

// GMRES (no restart) on the finite-difference Jacobian of the pulled-back
// residual map. Returns the approximate Newton direction for J z = -r0.
TangentPair krylov_newton_direction(const State& st, const TangentPair& r0,
                                    const ActionConfig& acfg, const SolverConfig& cfg,
                                    double rel_tol, double lm_shift) {
  const double beta = pair_norm(r0);
  TangentPair zero = make_zero_pair(st.phi);
  if (beta == 0.0) return zero;

  double state_scale = 1.0;
  for (std::size_t i = 0; i < st.psi.size(); ++i)
    state_scale = std::max(state_scale, std::abs(st.psi.data()[i]));
  auto apply_jacobian = [&](const TangentPair& v) {
    const double t = cfg.jacobian_fd_step * state_scale;  // v is unit norm
    State moved = retract_state(st, v, t);
    TangentPair rt = pullback_residual(st, moved, acfg);
    pair_axpy(-1.0, r0, rt);
    pair_scale(rt, 1.0 / t);
    // Levenberg-Marquardt shift: keeps the direction away from the gauge
    // null space (phases, translations, eigenspace rotations) and fades as
    // the residual does.
    pair_axpy(lm_shift, v, rt);
    return rt;
  };

  const int maxdim = cfg.krylov_max;
  std::vector<TangentPair> V;
  V.reserve(maxdim + 1);
  {
    TangentPair v0 = r0;
    pair_scale(v0, -1.0 / beta);
    V.push_back(std::move(v0));
  }
  std::vector<std::vector<double>> H;  // H[j] holds column j (size j+2)
  std::vector<double> cs, sn, g;
  g.push_back(beta);

  int k = 0;
  for (; k < maxdim; ++k) {
    TangentPair w = apply_jacobian(V[k]);
    std::vector<double> hcol(k + 2, 0.0);
    for (int i = 0; i <= k; ++i) {
      hcol[i] = pair_dot(w, V[i]);
      pair_axpy(-hcol[i], V[i], w);
    }
    const double hnext = pair_norm(w);
    hcol[k + 1] = hnext;

    // Previous Givens rotations, then the new one eliminating hcol[k+1].
    for (int i = 0; i < k; ++i) {
      const double t = cs[i] * hcol[i] + sn[i] * hcol[i + 1];
      hcol[i + 1] = -sn[i] * hcol[i] + cs[i] * hcol[i + 1];
      hcol[i] = t;
    }
    const double denom = std::hypot(hcol[k], hcol[k + 1]);
    if (denom == 0.0) {
      H.push_back(std::move(hcol));
      break;
    }
    cs.push_back(hcol[k] / denom);
    sn.push_back(hcol[k + 1] / denom);
    hcol[k] = denom;
    hcol[k + 1] = 0.0;
    g.push_back(-sn[k] * g[k]);
    g[k] = cs[k] * g[k];
    H.push_back(std::move(hcol));

    const double resid = std::abs(g[k + 1]);
    if (hnext > 1e-14) {
      TangentPair vn = w;
      pair_scale(vn, 1.0 / hnext);
      V.push_back(std::move(vn));
    } else {
      ++k;
      break;
    }
    if (resid <= rel_tol * beta) {
      ++k;
      break;
    }
  }

  // Back-substitution for y in the k x k triangular system.
  const int kk = std::min<int>(k, static_cast<int>(H.size()));
  std::vector<double> y(kk, 0.0);
  for (int i = kk - 1; i >= 0; --i) {
    double s = g[i];
    for (int j = i + 1; j < kk; ++j) s -= H[j][i] * y[j];
    y[i] = H[i][i] != 0.0 ? s / H[i][i] : 0.0;
  }
  TangentPair z = make_zero_pair(st.phi);
  for (int i = 0; i < kk; ++i) pair_axpy(y[i], V[i], z);
  return z;
}

double residual_dl_norm(const State& st, const ActionConfig& acfg, double* horiz, double* vert) {
  Field h = horizontal_gradient(st.phi, st.psi, acfg);
  PlainSpinor dres = dirac_residual(st.phi, st.psi, acfg);
  PlainSpinor gv = resolvent_precondition(dres);
  const double hn = norm_l2(h);
  const double vn = std::sqrt(std::max(0.0, inner_l2(dres, gv).real()));
  if (horiz) *horiz = hn;
  if (vert) *vert = vn;
  return std::sqrt(hn * hn + vn * vn);
}

}  // namespace

void SolverConfig::validate() const {
  if (!(pseudo_gradient_a > 1.0 && pseudo_gradient_a < 2.0)) {
    throw ConfigError("SolverConfig: pseudo-gradient constant a must lie strictly in (1, 2)");
  }
  if (max_iters < 1 || newton_max_iters < 1) {
    throw ConfigError("SolverConfig: iteration limits must be positive");
  }
  if (!(grad_tol > 0.0)) throw ConfigError("SolverConfig: grad_tol must be positive");
}

double coupled_energy(const MapField& phi, const PlainSpinor& psi, double alpha) {
  const SurfaceDomain& dom = phi.domain();
  Field dens = dirichlet_density(phi);
  const double w = dom.h() * dom.h();
  const double grad_part = w * parallel_sum(dom.vertices(), [&](std::ptrdiff_t i) {
    return std::pow(dens(static_cast<int>(i), 0), alpha);
  });
  return grad_part + spinor_l4(psi);
}

double spinor_l4(const PlainSpinor& psi) {
  const SurfaceDomain& dom = psi.domain();
  const double w = dom.h() * dom.h();
  return w * parallel_sum(dom.vertices(), [&](std::ptrdiff_t i) {
    const double a2 = psi.abs2(static_cast<int>(i));
    return a2 * a2;
  });
}

MapField class_representative(const SurfaceDomain& dom, const TargetManifold& target,
                              const HomotopyClass& cls) {
  MapField phi(dom, target);
  if (target.flat_chart()) {
    if (cls.kind != HomotopyClass::Kind::winding) {
      throw ConfigError("class_representative: torus targets take a winding class");
    }
    const auto& torus = static_cast<const FlatTorus2&>(target);
    const double slope = torus.period() / dom.side_length();
    for (int idx = 0; idx < dom.vertices(); ++idx) {
      const double x1 = dom.position(idx, 0), x2 = dom.position(idx, 1);
      for (int c = 0; c < 2; ++c) {
        phi(idx, c) = slope * (cls.winding[c][0] * x1 + cls.winding[c][1] * x2);
      }
    }
    phi.winding() = cls.winding;
    return phi;
  }
  if (cls.kind != HomotopyClass::Kind::degree) {
    throw ConfigError("class_representative: sphere targets take a degree class");
  }
  if (cls.degree != 0) {
    throw ConfigError("class_representative: only degree 0 has a built-in representative");
  }
  for (int idx = 0; idx < dom.vertices(); ++idx) {
    phi(idx, 0) = 0.0;
    phi(idx, 1) = 0.0;
    phi(idx, 2) = 1.0;
  }
  return phi;
}

MapField retract_map(const MapField& phi, const Field& X, double t) {
  MapField out = phi;
  const int L = phi.ambient_dim();
  parallel_for(phi.domain().vertices(), [&](std::ptrdiff_t vi) {
    const int idx = static_cast<int>(vi);
    for (int c = 0; c < L; ++c) out(idx, c) += t * X(idx, c);
  });
  out.project_onto_target();
  return out;
}

CriticalPoint minimize_alpha_energy(const MapField& phi0, double alpha, const SolverConfig& cfg) {
  cfg.validate();
  ActionConfig acfg;
  acfg.alpha = alpha;
  acfg.perturbation_scale = 0.0;
  acfg.mu = 3.0;  // inert at scale 0; keeps the config valid at alpha = 2
  acfg.validate();

  MapField phi = phi0;
  phi.project_onto_target();
  const WindingResult cls0 = winding_of(phi);
  PlainSpinor zero(phi.domain(), phi.ambient_dim());

  const double cap = cfg.step_cap_fraction * phi.target().injectivity_radius();
  double f = alpha_energy(phi, alpha);
  Field g = horizontal_gradient(phi, zero, acfg);
  double gnorm = norm_l2(g);

  std::deque<double> recent{f};
  Field phi_prev_vals = phi.values();
  Field g_prev = g;
  double step = 0.0;
  int it = 0;
  for (; it < cfg.max_iters && gnorm > cfg.grad_tol; ++it) {
    const double gmax = field_max_abs(g);
    double s = step;
    if (it == 0 || !(s > 0.0)) s = std::min(0.1, gmax > 0 ? cap / gmax : 0.1);
    s = std::min(s, gmax > 0 ? cap / gmax : s);

    const double fref = *std::max_element(recent.begin(), recent.end());
    MapField trial = phi;
    double ftrial = 0.0;
    int bt = 0;
    for (; bt <= cfg.ls_max_backtracks; ++bt) {
      trial = retract_map(phi, g, -s);
      ftrial = alpha_energy(trial, alpha);
      if (ftrial <= fref - 1e-4 * s * gnorm * gnorm) break;
      s *= cfg.ls_shrink;
    }
    if (bt > cfg.ls_max_backtracks) {
      throw ConvergenceError("minimize_alpha_energy: line search failed at iteration " +
                             std::to_string(it) + " (|grad| = " + std::to_string(gnorm) + ")");
    }

    Field new_vals = trial.values();
    Field g_new = horizontal_gradient(trial, zero, acfg);

    // Barzilai-Borwein step from ambient differences.
    double sty = 0.0, sts = 0.0;
    for (std::size_t i = 0; i < new_vals.size(); ++i) {
      const double ds = new_vals.data()[i] - phi_prev_vals.data()[i];
      const double dy = g_new.data()[i] - g_prev.data()[i];
      sts += ds * ds;
      sty += ds * dy;
    }
    step = (sty > 1e-30) ? sts / sty : 0.0;

    phi_prev_vals = std::move(new_vals);
    g_prev = g_new;
    phi = std::move(trial);
    g = std::move(g_new);
    f = ftrial;
    gnorm = norm_l2(g);
    recent.push_back(f);
    if (recent.size() > 10) recent.pop_front();

    if ((it + 1) % 64 == 0) {
      const WindingResult w = winding_of(phi);
      if (!(w.cls == cls0.cls)) {
        throw ConvergenceError("minimize_alpha_energy: homotopy class changed from " +
                               cls0.cls.describe() + " to " + w.cls.describe());
      }
    }
  }

  CriticalPoint cp;
  cp.phi = std::move(phi);
  cp.psi = zero;
  cp.value = action(cp.phi, cp.psi, acfg);
  cp.horizontal_residual = gnorm;
  cp.vertical_residual = 0.0;
  cp.converged = gnorm <= cfg.grad_tol;
  cp.iterations = it;
  cp.classification = CriticalPoint::Kind::minimizer;
  const WindingResult wf = winding_of(cp.phi);
  cp.homotopy = wf.cls;
  cp.homotopy_ok = wf.ok && wf.cls == cls0.cls;
  if (!cp.homotopy_ok) {
    throw ConvergenceError("minimize_alpha_energy: homotopy class not preserved (" +
                           cls0.cls.describe() + " -> " + wf.cls.describe() + ")");
  }
  cp.nontrivial_spinor = false;
  return cp;
}

MountainPassInit mountain_pass_init(const MapField& phi_star, const SpectralData& spec,
                                    const ActionConfig& acfg, const SolverConfig& cfg) {
  cfg.validate();
  acfg.validate();
  if (spec.phi_fingerprint != fingerprint(phi_star)) {
    throw GeometryError("mountain_pass_init: spectral data is stale for this map");
  }
  if (spec.e_plus.size() == 0) {
    throw ConvergenceError("mountain_pass_init: lambda_plus / e_plus not computed");
  }
  if (!(acfg.perturbation_scale > 0.0)) {
    throw ConvergenceError(
        "mountain_pass_init: profile never turns down at perturbation scale 0");
  }

  auto profile = [&](double r) {
    PlainSpinor psi = spec.e_plus;
    scale(psi, r);
    return action(phi_star, psi, acfg).total;
  };
  const double base = profile(0.0);

  // Expand the ray until the profile has turned down below the base value.
  double r2 = 1.0;
  const int grid = 24;
  bool turned = false;
  for (int expand = 0; expand < 80 && !turned; ++expand) {
    double prev = base;
    for (int j = 1; j <= grid; ++j) {
      const double v = profile(r2 * j / grid);
      if (v < prev && v < base) {
        turned = true;
        break;
      }
      prev = v;
    }
    if (!turned) r2 *= 2.0;
    if (r2 > 1e12) break;
  }
  if (!turned) {
    throw ConvergenceError(
        "mountain_pass_init: ray profile never turns down (perturbation too weak or spectral "
        "data stale)");
  }

  // Bracket the maximum on the grid, then golden-section refine.
  double best_r = 0.0, best_v = base;
  for (int j = 0; j <= grid; ++j) {
    const double r = r2 * j / grid;
    const double v = profile(r);
    if (v > best_v) {
      best_v = v;
      best_r = r;
    }
  }
  double lo = std::max(0.0, best_r - r2 / grid), hi = std::min(r2, best_r + r2 / grid);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = profile(x1), f2 = profile(x2);
  for (int i = 0; i < 120 && hi - lo > 1e-13 * (1.0 + hi); ++i) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = profile(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = profile(x1);
    }
  }
  MountainPassInit out;
  out.r_star = 0.5 * (lo + hi);
  out.action_at_top = profile(out.r_star);
  out.base_action = base;
  out.r2 = r2;
  out.psi0 = spec.e_plus;
  scale(out.psi0, out.r_star);
  if (!(out.r_star > 0.0) || !(out.action_at_top > base)) {
    throw ConvergenceError("mountain_pass_init: no ascent along the ray (r* = " +
                           std::to_string(out.r_star) + ")");
  }
  return out;
}

CriticalPoint newton_solve(const MapField& phi0, const PlainSpinor& psi0,
                           const ActionConfig& acfg, const SolverConfig& cfg) {
  cfg.validate();
  acfg.validate();
  State st{phi0, project_tangent(phi0, psi0)};
  st.phi.project_onto_target();
  const WindingResult cls0 = winding_of(st.phi);

  TangentPair r = residual_at(st, acfg);
  double rnorm = pair_norm(r);
  State best = st;
  double best_rnorm = rnorm;

  const double cap = cfg.step_cap_fraction * st.phi.target().injectivity_radius();
  bool converged = false;
  int it = 0;
  for (; it < cfg.newton_max_iters; ++it) {
    double hn, vn;
    const double dl = residual_dl_norm(st, acfg, &hn, &vn);
    if (dl <= cfg.grad_tol) {
      converged = true;
      break;
    }
    const double forcing = std::min(0.01, dl);
    TangentPair z = krylov_newton_direction(st, r, acfg, cfg, forcing,
                                            0.3 * std::min(1.0, rnorm));

    const double zmax = field_max_abs(z.X);
    double smax = 1.0;
    if (zmax > cap) smax = cap / zmax;

    double s = smax;
    bool accepted = false;
    for (int bt = 0; bt <= cfg.ls_max_backtracks; ++bt) {
      State trial = retract_state(st, z, s);
      TangentPair rt = residual_at(trial, acfg);
      const double rn = pair_norm(rt);
      if (rn < (1.0 - 1e-4 * s) * rnorm) {
        st = std::move(trial);
        r = std::move(rt);
        rnorm = rn;
        accepted = true;
        break;
      }
      s *= cfg.ls_shrink;
    }
    if (!accepted) break;
    if (rnorm < best_rnorm) {
      best = st;
      best_rnorm = rnorm;
    }
  }
  if (!converged) {
    double hn, vn;
    if (residual_dl_norm(st, acfg, &hn, &vn) <= cfg.grad_tol) converged = true;
  }
  if (!converged && best_rnorm < rnorm) st = best;

  CriticalPoint cp;
  cp.phi = std::move(st.phi);
  cp.psi = std::move(st.psi);
  cp.value = action(cp.phi, cp.psi, acfg);
  cp.converged = converged;
  cp.iterations = it;
  cp.classification = CriticalPoint::Kind::saddle_candidate;
  const double dl = residual_dl_norm({cp.phi, cp.psi}, acfg, &cp.horizontal_residual,
                                     &cp.vertical_residual);
  cp.converged = dl <= cfg.grad_tol;
  const WindingResult wf = winding_of(cp.phi);
  cp.homotopy = wf.cls;
  cp.homotopy_ok = wf.ok && wf.cls == cls0.cls;
  cp.nontrivial_spinor = norm_l2(cp.psi) > 1e3 * cfg.grad_tol;
  return cp;
}

FlowTrace pseudo_gradient_flow(const MapField& phi0, const PlainSpinor& psi0,
                               const ActionConfig& acfg, const SolverConfig& cfg, double horizon) {
  cfg.validate();
  acfg.validate();
  const double a = cfg.pseudo_gradient_a;
  FlowTrace trace;
  State st{phi0, project_tangent(phi0, psi0)};
  st.phi.project_onto_target();

  double t = 0.0;
  double dt = cfg.flow_dt;
  double action_now = action(st.phi, st.psi, acfg).total;
  const double eps_tol = 10.0 * std::numeric_limits<double>::epsilon();

  while (t < horizon) {
    Field h = horizontal_gradient(st.phi, st.psi, acfg);
    PlainSpinor dres = dirac_residual(st.phi, st.psi, acfg);
    PlainSpinor gv = resolvent_precondition(dres);
    const double hn2 = inner_l2(h, h);
    const double vn2 = std::max(0.0, inner_l2(dres, gv).real());
    const double dl2 = hn2 + vn2;
    const double dl = std::sqrt(dl2);

    FlowStep stp;
    stp.t = t;
    stp.action = action_now;
    stp.dl_norm = dl;
    stp.omega_norm = std::sqrt(2.25 * hn2 + a * a * vn2);
    stp.dl_of_omega = 1.5 * hn2 + a * vn2;
    stp.margin_norm = 2.0 * dl - stp.omega_norm;
    stp.margin_descent = stp.dl_of_omega - dl2;
    stp.eta = stp.omega_norm > 1.0 ? 1.0 / stp.omega_norm : 1.0;
    if (dl > 0.0 && (stp.margin_norm < -1e-12 || stp.margin_descent < -1e-12)) {
      ++trace.violations;
    }
    if (dl <= cfg.grad_tol) {
      stp.dt = 0.0;
      trace.steps.push_back(stp);
      break;
    }

    // omega = (3/2)||d^H|| X~  (+)  a grad^V; the horizontal part is the
    // L2-Riesz representative scaled, i.e. 1.5 h.
    bool accepted = false;
    double local_dt = dt;
    for (int rej = 0; rej < 40; ++rej) {
      MapField phi_new = retract_map(st.phi, h, -stp.eta * local_dt * 1.5);
      PlainSpinor psi_moved = st.psi;
      cdouble* pm = psi_moved.data();
      const cdouble* pv = gv.data();
      const double fac = -stp.eta * local_dt * a;
      parallel_for(static_cast<std::ptrdiff_t>(psi_moved.size()),
                   [&](std::ptrdiff_t i) { pm[i] += fac * pv[i]; });
      PlainSpinor psi_new;
      try {
        psi_new = project_tangent(phi_new, transport_spinor(st.phi, phi_new, psi_moved));
      } catch (const GeometryError&) {
        ++trace.rejected_steps;
        local_dt *= 0.5;
        continue;
      }
      const double action_new = action(phi_new, psi_new, acfg).total;
      if (action_new <= action_now + eps_tol * std::abs(action_now)) {
        st.phi = std::move(phi_new);
        st.psi = std::move(psi_new);
        trace.action_integral += stp.eta * local_dt * stp.dl_of_omega;
        action_now = action_new;
        t += local_dt;
        stp.dt = local_dt;
        accepted = true;
        dt = std::min(cfg.flow_dt, local_dt * 2.0);
        break;
      }
      ++trace.rejected_steps;
      local_dt *= 0.5;
    }
    trace.steps.push_back(stp);
    if (!accepted) {
      trace.aborted = true;
      break;
    }
  }
  trace.phi = std::move(st.phi);
  trace.psi = std::move(st.psi);
  return trace;
}

void ContinuationSchedule::validate() const {
  if (alphas.empty() && ks.empty()) {
    throw ConfigError("ContinuationSchedule: need at least one alpha or k ladder entry");
  }
  for (std::size_t i = 1; i < alphas.size(); ++i) {
    if (alphas[i] > alphas[i - 1]) {
      throw ConfigError("ContinuationSchedule: alpha ladder must be non-increasing");
    }
  }
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] <= 0) throw ConfigError("ContinuationSchedule: k ladder entries must be positive");
    if (i > 0 && ks[i] < ks[i - 1]) {
      throw ConfigError("ContinuationSchedule: k ladder must be non-decreasing");
    }
  }
  if (!(energy_bound > 0.0)) throw ConfigError("ContinuationSchedule: energy bound must be > 0");
  solver.validate();
}

ContinuationReport continuation_run(const SurfaceDomain& dom, const TargetManifold& target,
                                    const HomotopyClass& cls, const ContinuationSchedule& schedule,
                                    std::uint64_t seed) {
  schedule.validate();
  ContinuationReport rep;
  MapField phi = class_representative(dom, target, cls);
  // A mild deterministic start perturbation keeps the minimize stage honest.
  {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.01);
    Field noise(dom, target.ambient_dim());
    for (std::size_t i = 0; i < noise.size(); ++i) noise.data()[i] = g(rng);
    phi = retract_map(phi, project_map_tangent(phi, noise), 1.0);
  }
  PlainSpinor psi(dom, target.ambient_dim());
  bool have_warm_psi = false;

  for (int i = 0; i < schedule.stages(); ++i) {
    ContinuationStage stage;
    stage.alpha = schedule.alpha_at(i);
    stage.k = schedule.k_at(i);

    ActionConfig acfg;
    acfg.alpha = stage.alpha;
    acfg.perturbation_scale = stage.k > 0 ? 1.0 / stage.k : 0.0;
    acfg.mu = schedule.mu > 0.0 ? schedule.mu
                                : (ActionConfig::default_mu(stage.alpha) > 2.0 ? 0.0 : 3.0);
    try {
      const MapField phi_prev = phi;
      CriticalPoint mincp = minimize_alpha_energy(phi, stage.alpha, schedule.solver);
      phi = mincp.phi;
      stage.m_theta = mincp.value.alpha_energy;
      if (have_warm_psi) {
        try {
          psi = project_tangent(phi, transport_spinor(phi_prev, phi, psi));
        } catch (const GeometryError&) {
          have_warm_psi = false;
        }
      }

      if (schedule.nontrivial_branch && acfg.perturbation_scale > 0.0) {
        CriticalPoint cp;
        if (have_warm_psi) {
          cp = newton_solve(phi, psi, acfg, schedule.solver);
          if (!cp.converged || !cp.nontrivial_spinor) {
            have_warm_psi = false;  // fall back to a fresh mountain-pass start
          }
        }
        if (!have_warm_psi) {
          SpectralData spec = dirac_spectrum(phi, 24);
          lambda_plus(phi, spec);
          MountainPassInit init = mountain_pass_init(phi, spec, acfg, schedule.solver);
          cp = newton_solve(phi, init.psi0, acfg, schedule.solver);
        }
        stage.converged = cp.converged;
        stage.nontrivial = cp.nontrivial_spinor;
        stage.horizontal_residual = cp.horizontal_residual;
        stage.vertical_residual = cp.vertical_residual;
        if (cp.converged) {
          phi = cp.phi;
          psi = cp.psi;
          have_warm_psi = true;
        } else {
          stage.note = "newton did not converge; keeping minimizer";
          psi = PlainSpinor(dom, target.ambient_dim());
          have_warm_psi = false;
        }
        stage.action = action(phi, psi, acfg).total;
      } else {
        psi = PlainSpinor(dom, target.ambient_dim());
        stage.converged = true;
        stage.nontrivial = false;
        stage.action = stage.m_theta;
        stage.horizontal_residual = mincp.horizontal_residual;
      }
    } catch (const Error& e) {
      stage.converged = false;
      stage.note = e.what();
    }

    stage.psi_l4 = spinor_l4(psi);
    stage.energy = coupled_energy(phi, psi, stage.alpha);
    stage.bound_exceeded = stage.energy > schedule.energy_bound;
    rep.any_bound_exceeded |= stage.bound_exceeded;
    rep.all_converged &= stage.converged;
    rep.stages.push_back(stage);
  }
  rep.phi = std::move(phi);
  rep.psi = std::move(psi);
  return rep;
}

}  // namespace sdaf
