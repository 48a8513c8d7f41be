#include "sdaf/target.hpp"

#include <cmath>
#include <numbers>

#include "sdaf/parallel.hpp"

namespace sdaf {

namespace {
constexpr double kCenterGuard = 0.05;  // fraction of the radius still projectable

double dot3(const double* a, const double* b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
}  // namespace

double RoundSphere::injectivity_radius() const { return std::numbers::pi; }

void RoundSphere::project(double* p) const {
  const double r = std::sqrt(dot3(p, p));
  if (r < kCenterGuard) {
    throw GeometryError("sphere projection undefined near the center (|p| = " + std::to_string(r) +
                        ")");
  }
  for (int c = 0; c < 3; ++c) p[c] /= r;
}

void RoundSphere::tangent_projector(const double* p, double* P) const {
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) P[a * 3 + b] = (a == b ? 1.0 : 0.0) - p[a] * p[b];
}

void RoundSphere::curvature_op(const double* p, const double* X, const double* Y, const double* Z,
                               double* out) const {
  (void)p;
  const double yz = dot3(Y, Z), xz = dot3(X, Z);
  for (int c = 0; c < 3; ++c) out[c] = yz * X[c] - xz * Y[c];
}

void RoundSphere::geodesic(const double* p, const double* v, double t, double* out) const {
  const double speed = std::sqrt(dot3(v, v));
  const double th = t * speed;
  if (speed < 1e-300) {
    for (int c = 0; c < 3; ++c) out[c] = p[c];
    return;
  }
  const double c0 = std::cos(th), s0 = std::sin(th) / speed;
  for (int c = 0; c < 3; ++c) out[c] = c0 * p[c] + s0 * v[c];
}

void RoundSphere::parallel_transport(const double* p, const double* q, const double* w,
                                     double* out) const {
  const double c = dot3(p, q);
  if (c <= -1.0 + 1e-12) {
    throw GeometryError("sphere parallel transport: antipodal points are on the cut locus");
  }
  const double qw = dot3(q, w);
  const double f = qw / (1.0 + c);
  for (int k = 0; k < 3; ++k) out[k] = w[k] - f * (p[k] + q[k]);
}

void RoundSphere::projector_derivative_contraction(const double* p, const double* S,
                                                   double* G) const {
  // dPi_p[X] = -(X p^T + p X^T)  =>  <dPi[X], S>_F = -<X, (S + S^T) p>.
  for (int a = 0; a < 3; ++a) {
    double g = 0.0;
    for (int b = 0; b < 3; ++b) g += (S[a * 3 + b] + S[b * 3 + a]) * p[b];
    G[a] = -g;
  }
}

void RoundSphere::exp_mixed_second(const double* p, const double* V, const double* W,
                                   double* out) const {
  const double vw = dot3(V, W);
  for (int c = 0; c < 3; ++c) out[c] = -vw * p[c];
}

double RoundSphere::distance(const double* p, const double* q) const {
  double cr[3] = {p[1] * q[2] - p[2] * q[1], p[2] * q[0] - p[0] * q[2], p[0] * q[1] - p[1] * q[0]};
  return std::atan2(std::sqrt(dot3(cr, cr)), dot3(p, q));
}

FlatTorus2::FlatTorus2(double period) : period_(period) {
  if (!(period > 0.0)) throw ConfigError("FlatTorus2: period must be positive");
}

void FlatTorus2::project(double* p) const {
  for (int c = 0; c < 2; ++c) {
    p[c] = std::fmod(p[c], period_);
    if (p[c] < 0.0) p[c] += period_;
  }
}

void FlatTorus2::tangent_projector(const double* p, double* P) const {
  (void)p;
  P[0] = 1.0;
  P[1] = 0.0;
  P[2] = 0.0;
  P[3] = 1.0;
}

void FlatTorus2::curvature_op(const double*, const double*, const double*, const double*,
                              double* out) const {
  out[0] = out[1] = 0.0;
}

void FlatTorus2::geodesic(const double* p, const double* v, double t, double* out) const {
  out[0] = p[0] + t * v[0];
  out[1] = p[1] + t * v[1];
}

void FlatTorus2::parallel_transport(const double*, const double*, const double* w,
                                    double* out) const {
  out[0] = w[0];
  out[1] = w[1];
}

void FlatTorus2::projector_derivative_contraction(const double*, const double*, double* G) const {
  G[0] = G[1] = 0.0;
}

void FlatTorus2::exp_mixed_second(const double*, const double*, const double*, double* out) const {
  out[0] = out[1] = 0.0;
}

double FlatTorus2::distance(const double* p, const double* q) const {
  double d2 = 0.0;
  for (int c = 0; c < 2; ++c) {
    double d = std::fmod(std::abs(p[c] - q[c]), period_);
    d = std::min(d, period_ - d);
    d2 += d * d;
  }
  return std::sqrt(d2);
}

std::array<double, 4> FlatTorus2::embed_ambient4(const double* p) const {
  const double t1 = 2.0 * std::numbers::pi * p[0] / period_;
  const double t2 = 2.0 * std::numbers::pi * p[1] / period_;
  const double r = 1.0 / std::sqrt(2.0);
  return {r * std::cos(t1), r * std::sin(t1), r * std::cos(t2), r * std::sin(t2)};
}

HomotopyClass HomotopyClass::torus_class(int a00, int a01, int a10, int a11) {
  HomotopyClass c;
  c.kind = Kind::winding;
  c.winding = {{{a00, a01}, {a10, a11}}};
  return c;
}

HomotopyClass HomotopyClass::sphere_class(int deg) {
  HomotopyClass c;
  c.kind = Kind::degree;
  c.degree = deg;
  return c;
}

std::string HomotopyClass::describe() const {
  if (kind == Kind::degree) return "degree " + std::to_string(degree);
  return "winding [[" + std::to_string(winding[0][0]) + "," + std::to_string(winding[0][1]) +
         "],[" + std::to_string(winding[1][0]) + "," + std::to_string(winding[1][1]) + "]]";
}

MapField::MapField(const SurfaceDomain& dom, const TargetManifold& target)
    : dom_(&dom), target_(&target), values_(dom, target.ambient_dim()) {}

double MapField::dplus(int axis, int idx, int c) const {
  const int iu = dom_->up(axis, idx);
  double next = values_(iu, c);
  if (target_->flat_chart() && dom_->coord(idx, axis) == dom_->n() - 1) {
    const auto& torus = static_cast<const FlatTorus2&>(*target_);
    next += torus.period() * winding_[c][axis];
  }
  return (next - values_(idx, c)) / dom_->h();
}

void MapField::differential(Field out[2]) const {
  const int L = ambient_dim();
  for (int axis = 0; axis < 2; ++axis) {
    out[axis] = Field(*dom_, L);
    Field& oa = out[axis];
    parallel_for(dom_->vertices(), [&](std::ptrdiff_t vi) {
      const int idx = static_cast<int>(vi);
      for (int c = 0; c < L; ++c) oa(idx, c) = dplus(axis, idx, c);
    });
  }
}

double MapField::off_manifold_error() const {
  if (target_->flat_chart()) return 0.0;
  double worst = 0.0;
  const int L = ambient_dim();
  for (int idx = 0; idx < dom_->vertices(); ++idx) {
    double p[4];
    for (int c = 0; c < L; ++c) p[c] = values_(idx, c);
    target_->project(p);
    double d2 = 0.0;
    for (int c = 0; c < L; ++c) d2 += (p[c] - values_(idx, c)) * (p[c] - values_(idx, c));
    worst = std::max(worst, std::sqrt(d2));
  }
  return worst;
}

void MapField::project_onto_target() {
  if (target_->flat_chart()) return;
  const int L = ambient_dim();
  parallel_for(dom_->vertices(), [&](std::ptrdiff_t vi) {
    const int idx = static_cast<int>(vi);
    double p[4];
    for (int c = 0; c < L; ++c) p[c] = values_(idx, c);
    target_->project(p);
    for (int c = 0; c < L; ++c) values_(idx, c) = p[c];
  });
}

bool MapField::same_shape(const MapField& o) const {
  return dom_ && o.dom_ && *dom_ == *o.dom_ && target_ == o.target_;
}

double tangency_violation(const MapField& phi, const PlainSpinor& psi) {
  if (phi.target().flat_chart()) return 0.0;
  const int L = phi.ambient_dim();
  double worst = 0.0;
  for (int idx = 0; idx < phi.domain().vertices(); ++idx) {
    double p[4];
    for (int c = 0; c < L; ++c) p[c] = phi(idx, c);
    for (int s = 0; s < 2; ++s) {
      cdouble dot(0.0, 0.0);
      for (int m = 0; m < L; ++m) dot += psi(idx, s, m) * p[m];
      worst = std::max(worst, std::abs(dot));
    }
  }
  return worst;
}

PlainSpinor project_tangent(const MapField& phi, const PlainSpinor& psi) {
  if (phi.target().flat_chart()) return psi;
  const int L = phi.ambient_dim();
  PlainSpinor out(phi.domain(), L);
  parallel_for(phi.domain().vertices(), [&](std::ptrdiff_t vi) {
    const int idx = static_cast<int>(vi);
    double p[4], P[16];
    for (int c = 0; c < L; ++c) p[c] = phi(idx, c);
    phi.target().tangent_projector(p, P);
    for (int s = 0; s < 2; ++s) {
      for (int m = 0; m < L; ++m) {
        cdouble acc(0.0, 0.0);
        for (int mm = 0; mm < L; ++mm) acc += P[m * L + mm] * psi(idx, s, mm);
        out(idx, s, m) = acc;
      }
    }
  });
  return out;
}

PlainSpinor transport_spinor(const MapField& phi_old, const MapField& phi_new,
                             const PlainSpinor& psi) {
  if (!phi_old.same_shape(phi_new)) {
    throw ShapeError("transport_spinor: maps live on different domains or targets");
  }
  const TargetManifold& target = phi_old.target();
  if (target.flat_chart()) return psi;

  const int L = target.ambient_dim();
  const double iota = target.injectivity_radius();
  double sup_dist = 0.0;
  for (int idx = 0; idx < phi_old.domain().vertices(); ++idx) {
    double p[4], q[4];
    for (int c = 0; c < L; ++c) {
      p[c] = phi_old(idx, c);
      q[c] = phi_new(idx, c);
    }
    sup_dist = std::max(sup_dist, target.distance(p, q));
  }
  if (sup_dist >= iota) {
    throw GeometryError("transport_spinor: maps are " + std::to_string(sup_dist) +
                        " apart in sup distance, above the injectivity radius " +
                        std::to_string(iota) + "; shrink the step");
  }

  PlainSpinor out(phi_new.domain(), L);
  parallel_for(phi_old.domain().vertices(), [&](std::ptrdiff_t vi) {
    const int idx = static_cast<int>(vi);
    double p[4], q[4], wre[4], wim[4], ore[4], oim[4];
    for (int c = 0; c < L; ++c) {
      p[c] = phi_old(idx, c);
      q[c] = phi_new(idx, c);
    }
    for (int s = 0; s < 2; ++s) {
      for (int m = 0; m < L; ++m) {
        wre[m] = psi(idx, s, m).real();
        wim[m] = psi(idx, s, m).imag();
      }
      target.parallel_transport(p, q, wre, ore);
      target.parallel_transport(p, q, wim, oim);
      for (int m = 0; m < L; ++m) out(idx, s, m) = cdouble(ore[m], oim[m]);
    }
  });
  return out;
}

WindingResult winding_of(const MapField& phi) {
  const SurfaceDomain& dom = phi.domain();
  WindingResult res;
  if (phi.target().flat_chart()) {
    const auto& torus = static_cast<const FlatTorus2&>(phi.target());
    const double P = torus.period();
    res.cls.kind = HomotopyClass::Kind::winding;
    for (int c = 0; c < 2; ++c) {
      for (int axis = 0; axis < 2; ++axis) {
        // Accumulate nearest-image increments around one fundamental loop.
        double total = 0.0;
        bool conditioned = true;
        int idx = dom.index(0, 0);
        for (int k = 0; k < dom.n(); ++k) {
          const int nxt = dom.up(axis, idx);
          double d = phi(nxt, c) - phi(idx, c);
          d = d - P * std::round(d / P);
          if (std::abs(d) > 0.4 * P) conditioned = false;
          total += d;
          idx = nxt;
        }
        const double raw = total / P;
        res.cls.winding[c][axis] = static_cast<int>(std::lround(raw));
        if (!conditioned || std::abs(raw - std::lround(raw)) > 0.25) res.ok = false;
      }
    }
    return res;
  }

  // Degree of a sphere-valued map: quadrature of the pulled-back area form.
  Field d[2];
  phi.differential(d);
  const double w = dom.h() * dom.h();
  double deg = 0.0;
  for (int idx = 0; idx < dom.vertices(); ++idx) {
    const double a[3] = {d[0](idx, 0), d[0](idx, 1), d[0](idx, 2)};
    const double b[3] = {d[1](idx, 0), d[1](idx, 1), d[1](idx, 2)};
    const double cr[3] = {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
                          a[0] * b[1] - a[1] * b[0]};
    deg += w * (phi(idx, 0) * cr[0] + phi(idx, 1) * cr[1] + phi(idx, 2) * cr[2]);
  }
  deg /= 4.0 * std::numbers::pi;
  res.cls = HomotopyClass::sphere_class(static_cast<int>(std::lround(deg)));
  res.raw_degree = deg;
  if (std::abs(deg - std::lround(deg)) > 0.25) res.ok = false;
  return res;
}

}  // namespace sdaf
