#include "sdaf/domain.hpp"

#include <cmath>
#include <string>

#include "sdaf/parallel.hpp"

namespace sdaf {

SurfaceDomain::SurfaceDomain(int n, double side_length, SpinStructure spin)
    : n_(n), side_(side_length), spin_(spin), h_(side_length / n) {
  if (n < 4) {
    throw ConfigError("SurfaceDomain: grid resolution n must be >= 4, got " + std::to_string(n));
  }
  if (!(side_length > 0.0)) {
    throw ConfigError("SurfaceDomain: side_length must be positive, got " +
                      std::to_string(side_length));
  }
  for (int s : {spin.sign[0], spin.sign[1]}) {
    if (s != 1 && s != -1) throw ConfigError("SurfaceDomain: spin structure signs must be +1 or -1");
  }
  const int nv = n_ * n_;
  for (int axis = 0; axis < 2; ++axis) {
    up_[axis].resize(nv);
    dn_[axis].resize(nv);
    sgn_up_[axis].assign(nv, 1.0);
    sgn_dn_[axis].assign(nv, 1.0);
  }
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      const int idx = index(i, j);
      up_[0][idx] = index((i + 1) % n_, j);
      dn_[0][idx] = index((i + n_ - 1) % n_, j);
      up_[1][idx] = index(i, (j + 1) % n_);
      dn_[1][idx] = index(i, (j + n_ - 1) % n_);
      if (i == n_ - 1) sgn_up_[0][idx] = spin_.sign[0];
      if (i == 0) sgn_dn_[0][idx] = spin_.sign[0];
      if (j == n_ - 1) sgn_up_[1][idx] = spin_.sign[1];
      if (j == 0) sgn_dn_[1][idx] = spin_.sign[1];
    }
  }
}

double SurfaceDomain::distance(int ia, int ib) const {
  double d2 = 0.0;
  for (int axis = 0; axis < 2; ++axis) {
    double d = std::abs(position(ia, axis) - position(ib, axis));
    d = std::min(d, side_ - d);
    d2 += d * d;
  }
  return std::sqrt(d2);
}

SurfaceDomain build_domain(int n, double side_length, SpinStructure spin) {
  return SurfaceDomain(n, side_length, spin);
}

void require_same_shape(const Field& a, const Field& b, const char* what) {
  if (!a.same_shape(b)) throw ShapeError(std::string(what) + ": field shapes do not match");
}

GradField grad(const Field& f) {
  const SurfaceDomain& dom = f.domain();
  GradField g{{Field(dom, f.comps()), Field(dom, f.comps())}};
  const double inv_h = 1.0 / dom.h();
  const int comps = f.comps();
  for (int axis = 0; axis < 2; ++axis) {
    Field& ga = g.axis[axis];
    parallel_for(dom.vertices(), [&](std::ptrdiff_t idx) {
      const int i = static_cast<int>(idx);
      const int iu = dom.up(axis, i);
      for (int c = 0; c < comps; ++c) ga(i, c) = (f(iu, c) - f(i, c)) * inv_h;
    });
  }
  return g;
}

Field div(const GradField& v) {
  require_same_shape(v.axis[0], v.axis[1], "div");
  const SurfaceDomain& dom = v.axis[0].domain();
  const int comps = v.axis[0].comps();
  Field out(dom, comps);
  const double inv_h = 1.0 / dom.h();
  parallel_for(dom.vertices(), [&](std::ptrdiff_t idx) {
    const int i = static_cast<int>(idx);
    for (int c = 0; c < comps; ++c) {
      double s = 0.0;
      for (int axis = 0; axis < 2; ++axis) {
        const int id = dom.dn(axis, i);
        s += (v.axis[axis](i, c) - v.axis[axis](id, c)) * inv_h;
      }
      out(i, c) = s;
    }
  });
  return out;
}

double integrate(const Field& f) {
  const double w = f.domain().h() * f.domain().h();
  if (f.comps() != 1) throw ShapeError("integrate: expected a scalar field");
  return w * parallel_sum(f.domain().vertices(), [&](std::ptrdiff_t i) {
    return f(static_cast<int>(i), 0);
  });
}

double inner_l2(const Field& a, const Field& b) {
  require_same_shape(a, b, "inner_l2");
  const double w = a.domain().h() * a.domain().h();
  const int comps = a.comps();
  return w * parallel_sum(a.domain().vertices(), [&](std::ptrdiff_t idx) {
    const int i = static_cast<int>(idx);
    double s = 0.0;
    for (int c = 0; c < comps; ++c) s += a(i, c) * b(i, c);
    return s;
  });
}

double norm_l2(const Field& a) { return std::sqrt(inner_l2(a, a)); }

double inner_l2(const GradField& a, const GradField& b) {
  return inner_l2(a.axis[0], b.axis[0]) + inner_l2(a.axis[1], b.axis[1]);
}

double norm_w1_2alpha(const Field& f, double alpha) {
  const SurfaceDomain& dom = f.domain();
  const GradField g = grad(f);
  const double p = 2.0 * alpha;
  const int comps = f.comps();
  const double w = dom.h() * dom.h();
  const double total = w * parallel_sum(dom.vertices(), [&](std::ptrdiff_t idx) {
    const int i = static_cast<int>(idx);
    double f2 = 0.0, g2 = 0.0;
    for (int c = 0; c < comps; ++c) {
      f2 += f(i, c) * f(i, c);
      g2 += g.axis[0](i, c) * g.axis[0](i, c) + g.axis[1](i, c) * g.axis[1](i, c);
    }
    return std::pow(f2, p / 2.0) + std::pow(g2, p / 2.0);
  });
  return std::pow(total, 1.0 / p);
}

Field shift(const Field& f, int di, int dj) {
  const SurfaceDomain& dom = f.domain();
  const int n = dom.n();
  Field out(dom, f.comps());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int src = dom.index(((i - di) % n + n) % n, ((j - dj) % n + n) % n);
      const int dst = dom.index(i, j);
      for (int c = 0; c < f.comps(); ++c) out(dst, c) = f(src, c);
    }
  }
  return out;
}

namespace ref {

GradField grad(const Field& f) {
  const SurfaceDomain& dom = f.domain();
  GradField g{{Field(dom, f.comps()), Field(dom, f.comps())}};
  const double inv_h = 1.0 / dom.h();
  for (int axis = 0; axis < 2; ++axis) {
    for (int i = 0; i < dom.vertices(); ++i) {
      const int iu = dom.up(axis, i);
      for (int c = 0; c < f.comps(); ++c) g.axis[axis](i, c) = (f(iu, c) - f(i, c)) * inv_h;
    }
  }
  return g;
}

Field div(const GradField& v) {
  const SurfaceDomain& dom = v.axis[0].domain();
  Field out(dom, v.axis[0].comps());
  const double inv_h = 1.0 / dom.h();
  for (int i = 0; i < dom.vertices(); ++i) {
    for (int c = 0; c < out.comps(); ++c) {
      double s = 0.0;
      for (int axis = 0; axis < 2; ++axis) {
        s += (v.axis[axis](i, c) - v.axis[axis](dom.dn(axis, i), c)) * inv_h;
      }
      out(i, c) = s;
    }
  }
  return out;
}

double integrate(const Field& f) {
  double s = 0.0;
  for (int i = 0; i < f.domain().vertices(); ++i) s += f(i, 0);
  return s * f.domain().h() * f.domain().h();
}

}  // namespace ref

}  // namespace sdaf
