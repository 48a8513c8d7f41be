#include "sdaf/spin.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "sdaf/parallel.hpp"

namespace sdaf {

namespace {

constexpr cdouble kI(0.0, 1.0);

// FFTW plans for one n x n complex transform, executed on caller buffers.
struct FftPlans {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

FftPlans& plans_for(int n) {
  static std::mutex mu;
  static std::map<int, FftPlans> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<cdouble> dummy(static_cast<std::size_t>(n) * n);
  auto* p = reinterpret_cast<fftw_complex*>(dummy.data());
  FftPlans pl;
  pl.fwd = fftw_plan_dft_2d(n, n, p, p, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  pl.bwd = fftw_plan_dft_2d(n, n, p, p, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  return cache.emplace(n, pl).first->second;
}

// Half-integer momentum shift per axis: 0 for periodic, 1/2 for antiperiodic.
double momentum_shift(const SurfaceDomain& dom, int axis) {
  return dom.spin_structure().periodic(axis) ? 0.0 : 0.5;
}

double symbol_abs_at(const SurfaceDomain& dom, int qi, int qj) {
  const double n = dom.n();
  const double s1 = std::sin(2.0 * std::numbers::pi * (qi + momentum_shift(dom, 0)) / n) / dom.h();
  const double s2 = std::sin(2.0 * std::numbers::pi * (qj + momentum_shift(dom, 1)) / n) / dom.h();
  return std::hypot(s1, s2);
}

// Applies the Fourier multiplier g(|s(theta)|) channel by channel, using the
// phase twist that turns the sign-flipped stencil into a periodic one with
// half-integer momenta.
template <typename G>
PlainSpinor apply_symbol_multiplier(const PlainSpinor& psi, G&& g) {
  const SurfaceDomain& dom = psi.domain();
  const int n = dom.n();
  const int nv = dom.vertices();
  const int L = psi.ambient_dim();
  PlainSpinor out(dom, L);

  std::vector<cdouble> twist(nv);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double ph = std::numbers::pi *
                        (momentum_shift(dom, 0) * 2.0 * i + momentum_shift(dom, 1) * 2.0 * j) / n;
      twist[dom.index(i, j)] = std::polar(1.0, ph);
    }
  }
  std::vector<double> mult(nv);
  for (int qi = 0; qi < n; ++qi)
    for (int qj = 0; qj < n; ++qj) mult[dom.index(qi, qj)] = g(symbol_abs_at(dom, qi, qj));

  FftPlans& pl = plans_for(n);
  const double inv_nv = 1.0 / nv;
  std::vector<cdouble> buf(nv);
  auto* fb = reinterpret_cast<fftw_complex*>(buf.data());
  for (int s = 0; s < 2; ++s) {
    for (int m = 0; m < L; ++m) {
      for (int x = 0; x < nv; ++x) buf[x] = psi(x, s, m) * std::conj(twist[x]);
      fftw_execute_dft(pl.fwd, fb, fb);
      for (int q = 0; q < nv; ++q) buf[q] *= mult[q];
      fftw_execute_dft(pl.bwd, fb, fb);
      for (int x = 0; x < nv; ++x) out(x, s, m) = buf[x] * twist[x] * inv_nv;
    }
  }
  return out;
}

}  // namespace

std::array<std::array<cdouble, 2>, 2> CliffordFrame::e(int axis) {
  if (axis == 0) return {{{cdouble(0, 0), kI}, {kI, cdouble(0, 0)}}};
  return {{{cdouble(0, 0), cdouble(1, 0)}, {cdouble(-1, 0), cdouble(0, 0)}}};
}

std::array<cdouble, 2> CliffordFrame::mul(const std::array<double, 2>& X,
                                          const std::array<cdouble, 2>& xi) {
  // X1*e1 + X2*e2 applied to xi.
  return {kI * X[0] * xi[1] + X[1] * xi[1], kI * X[0] * xi[0] - X[1] * xi[0]};
}

void require_same_shape(const PlainSpinor& a, const PlainSpinor& b, const char* what) {
  if (!a.same_shape(b)) throw ShapeError(std::string(what) + ": spinor shapes do not match");
}

PlainSpinor untwisted_dirac(const PlainSpinor& psi) {
  const SurfaceDomain& dom = psi.domain();
  const int L = psi.ambient_dim();
  PlainSpinor out(dom, L);
  const double inv_2h = 0.5 / dom.h();
  parallel_for(dom.vertices(), [&](std::ptrdiff_t vi) {
    const int x = static_cast<int>(vi);
    const int u0 = dom.up(0, x), d0 = dom.dn(0, x);
    const int u1 = dom.up(1, x), d1 = dom.dn(1, x);
    const double su0 = dom.sgn_up(0, x), sd0 = dom.sgn_dn(0, x);
    const double su1 = dom.sgn_up(1, x), sd1 = dom.sgn_dn(1, x);
    for (int m = 0; m < L; ++m) {
      const cdouble dx0 = (su0 * psi(u0, 0, m) - sd0 * psi(d0, 0, m)) * inv_2h;
      const cdouble dx1 = (su0 * psi(u0, 1, m) - sd0 * psi(d0, 1, m)) * inv_2h;
      const cdouble dy0 = (su1 * psi(u1, 0, m) - sd1 * psi(d1, 0, m)) * inv_2h;
      const cdouble dy1 = (su1 * psi(u1, 1, m) - sd1 * psi(d1, 1, m)) * inv_2h;
      // e1 = i sigma1, e2 = i sigma2.
      out(x, 0, m) = kI * dx1 + dy1;
      out(x, 1, m) = kI * dx0 - dy0;
    }
  });
  return out;
}

std::pair<double, double> dirac_symbol(const SurfaceDomain& dom, double theta1, double theta2) {
  const double sft[2] = {momentum_shift(dom, 0), momentum_shift(dom, 1)};
  const double th[2] = {theta1, theta2};
  for (int a = 0; a < 2; ++a) {
    const double r = th[a] - sft[a];
    if (std::abs(r - std::round(r)) > 1e-9) {
      throw ConfigError("dirac_symbol: frequency " + std::to_string(th[a]) +
                        " inadmissible for this spin structure on axis " + std::to_string(a));
    }
  }
  const double s1 = std::sin(2.0 * std::numbers::pi * theta1 / dom.n()) / dom.h();
  const double s2 = std::sin(2.0 * std::numbers::pi * theta2 / dom.n()) / dom.h();
  const double a = std::hypot(s1, s2);
  return {a, -a};
}

double dirac_symbol_abs(const SurfaceDomain& dom, double theta1, double theta2) {
  return dirac_symbol(dom, theta1, theta2).first;
}

PlainSpinor resolvent_precondition(const PlainSpinor& psi) {
  return apply_symbol_multiplier(psi, [](double s) { return 1.0 / (1.0 + s); });
}

PlainSpinor apply_one_plus_abs_dirac(const PlainSpinor& psi) {
  return apply_symbol_multiplier(psi, [](double s) { return 1.0 + s; });
}

PlainSpinor resolvent_squared(const PlainSpinor& psi, double sigma) {
  return apply_symbol_multiplier(psi,
                                 [sigma](double s) { return 1.0 / (sigma * sigma + s * s); });
}

cdouble inner_l2(const PlainSpinor& a, const PlainSpinor& b) {
  require_same_shape(a, b, "inner_l2");
  const double w = a.domain().h() * a.domain().h();
  const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(a.size());
  const cdouble* pa = a.data();
  const cdouble* pb = b.data();
  const double re = parallel_sum(total, [&](std::ptrdiff_t i) {
    return pa[i].real() * pb[i].real() + pa[i].imag() * pb[i].imag();
  });
  const double im = parallel_sum(total, [&](std::ptrdiff_t i) {
    return pa[i].real() * pb[i].imag() - pa[i].imag() * pb[i].real();
  });
  return cdouble(re * w, im * w);
}

double norm_l2(const PlainSpinor& a) { return std::sqrt(std::abs(inner_l2(a, a).real())); }

double inner_h_half(const PlainSpinor& a, const PlainSpinor& b) {
  PlainSpinor oa = apply_one_plus_abs_dirac(a);
  return inner_l2(oa, b).real();
}

double h_half_norm_sq(const PlainSpinor& a) { return inner_h_half(a, a); }

double h_half_norm(const PlainSpinor& a) { return std::sqrt(std::max(0.0, h_half_norm_sq(a))); }

PlainSpinor axpy(cdouble alpha, const PlainSpinor& x, const PlainSpinor& y) {
  require_same_shape(x, y, "axpy");
  PlainSpinor out = y;
  cdouble* po = out.data();
  const cdouble* px = x.data();
  parallel_for(static_cast<std::ptrdiff_t>(x.size()),
               [&](std::ptrdiff_t i) { po[i] += alpha * px[i]; });
  return out;
}

void scale(PlainSpinor& x, cdouble alpha) {
  cdouble* px = x.data();
  parallel_for(static_cast<std::ptrdiff_t>(x.size()), [&](std::ptrdiff_t i) { px[i] *= alpha; });
}

namespace ref {

PlainSpinor untwisted_dirac(const PlainSpinor& psi) {
  const SurfaceDomain& dom = psi.domain();
  const int L = psi.ambient_dim();
  PlainSpinor out(dom, L);
  const double inv_2h = 0.5 / dom.h();
  for (int x = 0; x < dom.vertices(); ++x) {
    for (int m = 0; m < L; ++m) {
      cdouble d[2][2];
      for (int axis = 0; axis < 2; ++axis) {
        for (int s = 0; s < 2; ++s) {
          d[axis][s] = (dom.sgn_up(axis, x) * psi(dom.up(axis, x), s, m) -
                        dom.sgn_dn(axis, x) * psi(dom.dn(axis, x), s, m)) *
                       inv_2h;
        }
      }
      out(x, 0, m) = kI * d[0][1] + d[1][1];
      out(x, 1, m) = kI * d[0][0] - d[1][0];
    }
  }
  return out;
}

}  // namespace ref

}  // namespace sdaf
