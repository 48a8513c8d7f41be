#include "sdaf/sampling.hpp"

#include <cmath>
#include <numbers>

#include "sdaf/solver.hpp"

namespace sdaf {

Field random_smooth_field(const SurfaceDomain& dom, int comps, int kmax, double amplitude,
                          Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  Field f(dom, comps);
  const int n = dom.n();
  for (int c = 0; c < comps; ++c) {
    for (int q1 = -kmax; q1 <= kmax; ++q1) {
      for (int q2 = -kmax; q2 <= kmax; ++q2) {
        if (q1 == 0 && q2 == 0) continue;
        const double decay = 1.0 / (1.0 + q1 * q1 + q2 * q2);
        const double amp = amplitude * decay * gauss(rng);
        const double ph = phase(rng);
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            const double arg = 2.0 * std::numbers::pi * (q1 * i + q2 * j) / n + ph;
            f(dom.index(i, j), c) += amp * std::cos(arg);
          }
        }
      }
    }
  }
  return f;
}

MapField random_smooth_map(const SurfaceDomain& dom, const TargetManifold& target,
                           const HomotopyClass& cls, double amplitude, Rng& rng) {
  MapField phi = class_representative(dom, target, cls);
  Field noise = random_smooth_field(dom, target.ambient_dim(), 3, amplitude, rng);
  noise = project_map_tangent(phi, noise);
  return retract_map(phi, noise, 1.0);
}

Field random_tangent_field(const MapField& phi, double amplitude, Rng& rng) {
  Field noise = random_smooth_field(phi.domain(), phi.ambient_dim(), 3, amplitude, rng);
  return project_map_tangent(phi, noise);
}

PlainSpinor random_tangent_spinor(const MapField& phi, double amplitude, Rng& rng) {
  const SurfaceDomain& dom = phi.domain();
  const int L = phi.ambient_dim();
  Field re = random_smooth_field(dom, 2 * L, 3, amplitude, rng);
  Field im = random_smooth_field(dom, 2 * L, 3, amplitude, rng);
  PlainSpinor psi(dom, L);
  for (int idx = 0; idx < dom.vertices(); ++idx)
    for (int s = 0; s < 2; ++s)
      for (int m = 0; m < L; ++m)
        psi(idx, s, m) = cdouble(re(idx, s * L + m), im(idx, s * L + m));
  return project_tangent(phi, psi);
}

MapField bubble_map(const SurfaceDomain& dom, const RoundSphere& target, double scale, double x0,
                    double y0) {
  MapField phi(dom, target);
  for (int idx = 0; idx < dom.vertices(); ++idx) {
    // Nearest-image offset from the bubble center.
    double u = dom.position(idx, 0) - x0;
    double v = dom.position(idx, 1) - y0;
    const double side = dom.side_length();
    u -= side * std::round(u / side);
    v -= side * std::round(v / side);
    u /= scale;
    v /= scale;
    const double r2 = u * u + v * v;
    phi(idx, 0) = 2.0 * u / (1.0 + r2);
    phi(idx, 1) = 2.0 * v / (1.0 + r2);
    phi(idx, 2) = (1.0 - r2) / (1.0 + r2);
  }
  return phi;
}

}  // namespace sdaf
