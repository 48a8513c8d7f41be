#pragma once

#include <array>
#include <complex>
#include <utility>
#include <vector>

#include "sdaf/domain.hpp"

namespace sdaf {

using cdouble = std::complex<double>;

// Clifford multiplication on the 2-spinor fiber, e1 = i*sigma1, e2 = i*sigma2.
// Satisfies e_a e_b + e_b e_a = -2 delta_ab and <e_a x, y> = -<x, e_a y>.
struct CliffordFrame {
  static std::array<std::array<cdouble, 2>, 2> e(int axis);
  // (X1 e1 + X2 e2) xi for a tangent 2-vector X.
  static std::array<cdouble, 2> mul(const std::array<double, 2>& X,
                                    const std::array<cdouble, 2>& xi);
};

// Spinor field with values in C^2 (x) R^L: a 2-spinor for each of L ambient
// components. Storage (vertex, spinor index s, ambient index m).
class PlainSpinor {
 public:
  PlainSpinor() = default;
  PlainSpinor(const SurfaceDomain& dom, int ambient)
      : dom_(&dom), L_(ambient),
        v_(static_cast<std::size_t>(dom.vertices()) * 2 * ambient, cdouble(0.0, 0.0)) {}

  const SurfaceDomain& domain() const { return *dom_; }
  int ambient_dim() const { return L_; }
  std::size_t size() const { return v_.size(); }

  cdouble& operator()(int idx, int s, int m) {
    return v_[(static_cast<std::size_t>(idx) * 2 + s) * L_ + m];
  }
  cdouble operator()(int idx, int s, int m) const {
    return v_[(static_cast<std::size_t>(idx) * 2 + s) * L_ + m];
  }
  cdouble* data() { return v_.data(); }
  const cdouble* data() const { return v_.data(); }

  bool same_shape(const PlainSpinor& o) const {
    return dom_ && o.dom_ && *dom_ == *o.dom_ && L_ == o.L_;
  }

  // Pointwise squared modulus summed over (s, m).
  double abs2(int idx) const {
    double a = 0.0;
    for (int s = 0; s < 2; ++s)
      for (int m = 0; m < L_; ++m) a += std::norm((*this)(idx, s, m));
    return a;
  }

 private:
  const SurfaceDomain* dom_ = nullptr;
  int L_ = 0;
  std::vector<cdouble> v_;
};

void require_same_shape(const PlainSpinor& a, const PlainSpinor& b, const char* what);

// Untwisted Dirac operator D = sum_a e_a d_a with the symmetrized
// forward/backward (central) stencil and spin-structure sign flips across
// the periodic seam. Exactly L2-symmetric.
PlainSpinor untwisted_dirac(const PlainSpinor& psi);

// The two eigenvalues (+|s|, -|s|) of the 2x2 Fourier symbol of the stencil
// at lattice momentum theta (integer or half-integer per axis as the spin
// structure dictates). Throws on inadmissible frequencies.
std::pair<double, double> dirac_symbol(const SurfaceDomain& dom, double theta1, double theta2);

// |s(theta)| for an admissible frequency.
double dirac_symbol_abs(const SurfaceDomain& dom, double theta1, double theta2);

// Applies (1 + |D|)^{-1} by Fourier diagonalization.
PlainSpinor resolvent_precondition(const PlainSpinor& psi);
// Applies (1 + |D|); inverse of the above.
PlainSpinor apply_one_plus_abs_dirac(const PlainSpinor& psi);
// Applies (sigma^2 + |D|^2)^{-1}; used as an eigensolver preconditioner.
PlainSpinor resolvent_squared(const PlainSpinor& psi, double sigma);

// L2 inner product (complex) and norm, weight h^2 per vertex.
cdouble inner_l2(const PlainSpinor& a, const PlainSpinor& b);
double norm_l2(const PlainSpinor& a);

// H^{1/2}-type inner product Re((1+|D|)a, b)_2 and the squared norm.
double inner_h_half(const PlainSpinor& a, const PlainSpinor& b);
double h_half_norm_sq(const PlainSpinor& a);
double h_half_norm(const PlainSpinor& a);

// axpy-style helpers.
PlainSpinor axpy(cdouble alpha, const PlainSpinor& x, const PlainSpinor& y);
void scale(PlainSpinor& x, cdouble alpha);

namespace ref {
PlainSpinor untwisted_dirac(const PlainSpinor& psi);
}

}  // namespace sdaf
