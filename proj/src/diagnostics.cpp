#include "sdaf/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "sdaf/parallel.hpp"

namespace sdaf {

namespace {

// Unit-H^{1/2} random combination of the resolved eigenspinors in [start, start+count).
PlainSpinor random_span_unit(const SpectralData& spec, int start, int count, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  PlainSpinor out(spec.eigenspinors[start].domain(), spec.eigenspinors[start].ambient_dim());
  for (int i = 0; i < count; ++i) {
    out = axpy(cdouble(gauss(rng), gauss(rng)), spec.eigenspinors[start + i], out);
  }
  const double nn = h_half_norm(out);
  if (nn > 0.0) scale(out, 1.0 / nn);
  return out;
}

double linear_fit_slope(const std::vector<double>& logx, const std::vector<double>& logy) {
  const std::size_t n = logx.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += logx[i];
    my += logy[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (logx[i] - mx) * (logx[i] - mx);
    sxy += (logx[i] - mx) * (logy[i] - my);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

}  // namespace

ConcentrationScan concentration_scan(const MapField& phi, double radius, double eps0) {
  const SurfaceDomain& dom = phi.domain();
  if (radius < 2.0 * dom.h()) {
    throw ConfigError("concentration_scan: radius must be at least 2h = " +
                      std::to_string(2.0 * dom.h()));
  }
  ConcentrationScan scan;
  scan.radius = radius;
  scan.threshold = eps0;
  Field dens = dirichlet_density(phi);
  scan.total_energy = integrate(dens);

  // Ball stencil offsets on the periodic grid.
  const int n = dom.n();
  const int reach = static_cast<int>(std::floor(radius / dom.h())) + 1;
  std::vector<std::pair<int, int>> offsets;
  for (int di = -std::min(reach, n / 2); di <= std::min(reach, n - 1 - n / 2); ++di) {
    for (int dj = -std::min(reach, n / 2); dj <= std::min(reach, n - 1 - n / 2); ++dj) {
      const double dx = di * dom.h(), dy = dj * dom.h();
      if (dx * dx + dy * dy <= radius * radius) offsets.emplace_back(di, dj);
    }
  }
  const double w = dom.h() * dom.h();
  scan.local_energy.assign(dom.vertices(), 0.0);
  parallel_for(dom.vertices(), [&](std::ptrdiff_t vi) {
    const int idx = static_cast<int>(vi);
    const int ci = dom.coord(idx, 0), cj = dom.coord(idx, 1);
    double e = 0.0;
    for (const auto& [di, dj] : offsets) {
      const int i = ((ci + di) % n + n) % n;
      const int j = ((cj + dj) % n + n) % n;
      e += dens(dom.index(i, j), 0);
    }
    scan.local_energy[idx] = w * e;
  });
  for (int idx = 0; idx < dom.vertices(); ++idx) {
    if (scan.local_energy[idx] >= eps0) scan.flagged.push_back(idx);
  }
  return scan;
}

MinimaxEstimates minimax_estimates(const MapField& phi_star, SpectralData& spec,
                                   const ActionConfig& acfg, int samples, std::uint64_t seed,
                                   double r1, double r2, double rho) {
  acfg.validate();
  if (spec.phi_fingerprint != fingerprint(phi_star)) {
    throw GeometryError("minimax_estimates: spectral data is stale for this map");
  }
  if (spec.e_plus.size() == 0) lambda_plus(phi_star, spec);
  if (spec.n_positive == 0) {
    throw ConvergenceError("minimax_estimates: positive subspace too small to sample");
  }

  MinimaxEstimates est;
  est.samples = samples;
  est.m_theta = alpha_energy(phi_star, acfg.alpha);
  Rng rng(seed);

  auto act_ray = [&](double r) {
    PlainSpinor psi = spec.e_plus;
    scale(psi, r);
    return action(phi_star, psi, acfg).total;
  };

  const int lower_count = spec.n_negative + spec.n_zero;
  est.a_applicable = acfg.perturbation_scale > 0.0;

  if (est.a_applicable) {
    // R2: expand the ray until the profile returns below m_theta.
    if (r2 <= 0.0) {
      r2 = 1.0;
      for (int i = 0; i < 200 && act_ray(r2) > est.m_theta; ++i) r2 *= 1.5;
    }
    est.r2 = r2;

    if (lower_count == 0) {
      // No resolved negative/null subspace (an empty kernel with all
      // resolved modes positive): the boundary reduces to the two ray faces.
      est.r1 = 0.0;
      double worst = std::max(act_ray(0.0), act_ray(r2));
      est.a_estimate = worst;
    } else {
      // R1: grow until the sampled R1-sphere face stays below m_theta.
      if (r1 <= 0.0) {
        r1 = 1.0;
        for (int grow = 0; grow < 60; ++grow) {
          double worst = -std::numeric_limits<double>::infinity();
          Rng probe(seed ^ 0x9e3779b97f4a7c15ULL);
          for (int s = 0; s < std::max(64, samples / 8); ++s) {
            PlainSpinor low = random_span_unit(spec, 0, lower_count, probe);
            scale(low, r1);
            std::uniform_real_distribution<double> ur(0.0, r2);
            PlainSpinor psi = axpy(ur(probe), spec.e_plus, low);
            worst = std::max(worst, action(phi_star, psi, acfg).total);
          }
          if (worst <= est.m_theta) break;
          r1 *= 1.6;
        }
      }
      est.r1 = r1;

      double worst = -std::numeric_limits<double>::infinity();
      std::uniform_real_distribution<double> ur(0.0, r2);
      std::uniform_real_distribution<double> urad(0.0, 1.0);
      for (int s = 0; s < samples; ++s) {
        const int face = s % 3;
        PlainSpinor low = random_span_unit(spec, 0, lower_count, rng);
        double lownorm = 0.0, ray = 0.0;
        if (face == 0) {  // |psi^-0| = R1, r in [0, R2]
          lownorm = r1;
          ray = ur(rng);
        } else if (face == 1) {  // r = 0 face
          lownorm = r1 * urad(rng);
        } else {  // r = R2 face
          lownorm = r1 * urad(rng);
          ray = r2;
        }
        scale(low, lownorm);
        PlainSpinor psi = axpy(ray, spec.e_plus, low);
        worst = std::max(worst, action(phi_star, psi, acfg).total);
      }
      est.a_estimate = worst;
    }
  } else {
    est.a_estimate = std::numeric_limits<double>::quiet_NaN();
    est.r2 = r2 > 0.0 ? r2 : 1.0;
  }

  // b: sampled minimum over the positive span at H^{1/2} radius rho,
  // always including the extremal direction e_plus.
  const int start_pos = spec.index_of_class_start(+1);
  auto b_at = [&](double rho_try) {
    double best = std::numeric_limits<double>::infinity();
    PlainSpinor e = spec.e_plus;
    scale(e, rho_try);
    best = std::min(best, action(phi_star, e, acfg).total);
    Rng brng(seed ^ 0xabcdefULL);
    for (int s = 0; s < samples; ++s) {
      PlainSpinor u = random_span_unit(spec, start_pos, spec.n_positive, brng);
      scale(u, rho_try);
      best = std::min(best, action(phi_star, u, acfg).total);
    }
    return best;
  };
  if (rho <= 0.0) {
    rho = est.r2 > 0.0 ? 0.5 * est.r2 : 0.5;
    for (int shrink = 0; shrink < 60; ++shrink) {
      if (b_at(rho) > est.m_theta) break;
      rho *= 0.5;
    }
  }
  est.rho = rho;
  est.b_estimate = b_at(rho);

  est.sandwich_holds = (!est.a_applicable || est.a_estimate <= est.m_theta) &&
                       est.m_theta < est.b_estimate;
  return est;
}

UniquenessReport uniqueness_experiment(const SurfaceDomain& dom, const TargetManifold& target,
                                       const HomotopyClass& cls, double alpha, int trials,
                                       const SolverConfig& cfg, std::uint64_t seed) {
  UniquenessReport rep;
  rep.trials = trials;
  if (!target.flat_chart()) {
    rep.applicable = false;
    rep.note = "NOT-APPLICABLE: target must have nonpositive curvature (flat torus)";
    return rep;
  }
  rep.applicable = true;

  Rng rng(seed);
  std::vector<MapField> limits;
  for (int t = 0; t < trials; ++t) {
    MapField start = random_smooth_map(dom, target, cls, 0.05, rng);
    CriticalPoint cp = minimize_alpha_energy(start, alpha, cfg);
    if (!cp.converged) {
      rep.pass = false;
      rep.note = "solver failure in trial " + std::to_string(t);
      return rep;
    }
    limits.push_back(cp.phi);
  }

  // Mean-center each limit (translations are the expected degeneracy).
  for (MapField& phi : limits) {
    for (int c = 0; c < phi.ambient_dim(); ++c) {
      double mean = 0.0;
      for (int idx = 0; idx < dom.vertices(); ++idx) mean += phi(idx, c);
      mean /= dom.vertices();
      for (int idx = 0; idx < dom.vertices(); ++idx) phi(idx, c) -= mean;
    }
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < limits.size(); ++i) {
    for (std::size_t j = i + 1; j < limits.size(); ++j) {
      for (int idx = 0; idx < dom.vertices(); ++idx) {
        for (int c = 0; c < limits[i].ambient_dim(); ++c) {
          worst = std::max(worst, std::abs(limits[i](idx, c) - limits[j](idx, c)));
        }
      }
    }
  }
  rep.max_pairwise_deviation = worst;

  // Geodesic homotopy between the first two limits: on the lift this is the
  // linear homotopy; E^alpha(f_t) must be constant in t.
  if (limits.size() >= 2) {
    const double e0 = alpha_energy(limits[0], alpha);
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      MapField ft = limits[0];
      for (std::size_t k = 0; k < ft.values().size(); ++k) {
        ft.values().data()[k] =
            (1.0 - t) * limits[0].values().data()[k] + t * limits[1].values().data()[k];
      }
      rep.max_energy_drift =
          std::max(rep.max_energy_drift, std::abs(alpha_energy(ft, alpha) - e0));
    }
  }
  rep.pass = worst <= 1e-6 && rep.max_energy_drift <= 1e-8;
  return rep;
}

ConvexityReport convexity_experiment(const MapField& phi0, const MapField& phi1, double alpha,
                                     int steps) {
  if (!phi0.target().flat_chart()) {
    throw ConfigError("convexity_experiment: flat-torus target required");
  }
  const WindingResult w0 = winding_of(phi0);
  const WindingResult w1 = winding_of(phi1);
  if (!(w0.cls == w1.cls)) {
    throw ConfigError("convexity_experiment: maps are not homotopic (" + w0.cls.describe() +
                      " vs " + w1.cls.describe() + ")");
  }
  ConvexityReport rep;
  rep.steps = steps;
  std::vector<double> e(steps + 1);
  for (int j = 0; j <= steps; ++j) {
    const double t = static_cast<double>(j) / steps;
    MapField ft = phi0;
    for (std::size_t k = 0; k < ft.values().size(); ++k) {
      ft.values().data()[k] =
          (1.0 - t) * phi0.values().data()[k] + t * phi1.values().data()[k];
    }
    e[j] = alpha_energy(ft, alpha);
  }
  rep.scale = *std::max_element(e.begin(), e.end());
  rep.min_second_difference = std::numeric_limits<double>::infinity();
  for (int j = 1; j < steps; ++j) {
    rep.min_second_difference =
        std::min(rep.min_second_difference, e[j + 1] - 2.0 * e[j] + e[j - 1]);
  }
  rep.pass = rep.min_second_difference >= -1e-8 * rep.scale;
  return rep;
}

std::vector<std::string> GrowthConditionReport::failures() const {
  std::vector<std::string> out;
  if (!f1) out.push_back("F1");
  if (!f2) out.push_back("F2");
  if (!f3) out.push_back("F3");
  if (!f4) out.push_back("F4");
  if (!f5) out.push_back("F5");
  if (!f6) out.push_back("F6");
  if (!f7) out.push_back("F7");
  return out;
}

GrowthConditionReport growth_condition_check(const Perturbation& hook, double mu_claimed,
                                             double alpha, int samples, std::uint64_t seed) {
  GrowthConditionReport rep;
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int L = 3;

  // Random base points on the sphere target and unit spinor directions.
  auto random_point = [&](double* p) {
    double nn = 0.0;
    for (int c = 0; c < L; ++c) {
      p[c] = gauss(rng);
      nn += p[c] * p[c];
    }
    nn = std::sqrt(nn);
    for (int c = 0; c < L; ++c) p[c] /= nn;
  };
  auto random_unit_spinor = [&](cdouble* u) {
    double nn = 0.0;
    for (int k = 0; k < 2 * L; ++k) {
      u[k] = cdouble(gauss(rng), gauss(rng));
      nn += std::norm(u[k]);
    }
    nn = std::sqrt(nn);
    for (int k = 0; k < 2 * L; ++k) u[k] /= nn;
  };

  // Decades |psi| in [1, 1e3] for the growth fits, below 1 for (F5).
  std::vector<double> logt, logF, logFpsi, logFphi;
  bool f4ok = true, f2ok = true;
  double worst_mu = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    double p[3];
    cdouble u[6], fpsi[6];
    double fphi[3];
    random_point(p);
    random_unit_spinor(u);
    const double t = std::pow(10.0, 3.0 * (s + 0.5) / samples);
    cdouble psi[6];
    for (int k = 0; k < 6; ++k) psi[k] = t * u[k];
    const double F = hook.value(p, psi, L);
    hook.d_psi(p, psi, L, fpsi);
    hook.d_phi(p, psi, L, fphi);
    if (F < 0.0) f4ok = false;
    double npsi = 0.0, nphi = 0.0, pair = 0.0;
    for (int k = 0; k < 6; ++k) {
      npsi += std::norm(fpsi[k]);
      pair += (std::conj(fpsi[k]) * psi[k]).real();
    }
    for (int c = 0; c < L; ++c) nphi += fphi[c] * fphi[c];
    npsi = std::sqrt(npsi);
    nphi = std::sqrt(nphi);
    if (F > 0.0) {
      worst_mu = std::min(worst_mu, pair / F);
      if (pair < mu_claimed * F - 1e-9 * std::abs(pair)) f2ok = false;
    } else if (F == 0.0 && pair < 0.0) {
      f2ok = false;
    }
    logt.push_back(std::log(t));
    logF.push_back(F > 0.0 ? std::log(F) : -700.0);
    logFpsi.push_back(npsi > 0.0 ? std::log(npsi) : -700.0);
    logFphi.push_back(nphi > 0.0 ? std::log(nphi) : -700.0);
  }
  rep.fitted_mu = linear_fit_slope(logt, logF);
  rep.fitted_p_minus_1 = linear_fit_slope(logt, logFpsi);
  bool fphi_all_zero = true;
  for (double v : logFphi)
    if (v > -699.0) fphi_all_zero = false;
  rep.fitted_q = fphi_all_zero ? 0.0 : linear_fit_slope(logt, logFphi);

  // (F5): F/|psi|^2 must vanish as |psi| -> 0.
  double ratio_near_zero = 0.0, ratio_mid = 0.0;
  for (int j = 0; j < 8; ++j) {
    double p[3];
    cdouble u[6];
    random_point(p);
    random_unit_spinor(u);
    for (double t : {1e-6, 1e-5, 1e-4}) {
      cdouble psi[6];
      for (int k = 0; k < 6; ++k) psi[k] = t * u[k];
      ratio_near_zero = std::max(ratio_near_zero, hook.value(p, psi, L) / (t * t));
    }
    cdouble psi[6];
    for (int k = 0; k < 6; ++k) psi[k] = 0.1 * u[k];
    ratio_mid = std::max(ratio_mid, hook.value(p, psi, L) / 0.01);
  }
  rep.f5_ratio = ratio_near_zero;
  rep.f5 = ratio_near_zero <= 1e-3 * std::max(ratio_mid, 1e-30) || ratio_near_zero < 1e-12;

  rep.f1 = rep.fitted_p_minus_1 > 1.0 && rep.fitted_p_minus_1 < 3.0 + 1e-3;
  rep.f2 = f2ok && worst_mu > 2.0;
  rep.f3 = rep.fitted_q < 4.0;
  rep.f4 = f4ok;
  rep.f6 = rep.fitted_p_minus_1 > 2.0 && rep.fitted_p_minus_1 <= 1.0 + 2.0 / alpha + 1e-3;
  rep.f7 = fphi_all_zero || rep.fitted_q > 2.0;
  return rep;
}

DiagnosticsReport diagnose(const MapField& phi, const PlainSpinor& psi, const ActionConfig& acfg,
                           double scan_radius, double eps0, int minimax_samples,
                           std::uint64_t seed) {
  acfg.validate();
  DiagnosticsReport rep;
  rep.alpha = acfg.alpha;
  rep.perturbation_scale = acfg.perturbation_scale;
  rep.mu = acfg.resolved_mu();
  rep.action = action(phi, psi, acfg);
  rep.coupled_energy = coupled_energy(phi, psi, acfg.alpha);
  rep.psi_l4 = spinor_l4(psi);
  rep.seed = seed;

  Field h = horizontal_gradient(phi, psi, acfg);
  rep.horizontal_residual = norm_l2(h);
  PlainSpinor dres = dirac_residual(phi, psi, acfg);
  rep.vertical_residual =
      std::sqrt(std::max(0.0, inner_l2(dres, resolvent_precondition(dres)).real()));

  rep.concentration = concentration_scan(phi, scan_radius, eps0);
  SpectralData spec = dirac_spectrum(phi, 16, {});
  if (spec.n_positive > 0) {
    rep.lambda_plus = lambda_plus(phi, spec);
    if (minimax_samples > 0) {
      rep.minimax = minimax_estimates(phi, spec, acfg, minimax_samples, seed);
    }
  }
  return rep;
}

}  // namespace sdaf
