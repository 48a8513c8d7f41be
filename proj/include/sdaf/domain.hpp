#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sdaf/errors.hpp"

namespace sdaf {

// Spin structure on the flat torus: one sign per axis.
// +1 = periodic spinor identification, -1 = antiperiodic.
struct SpinStructure {
  int sign[2] = {+1, +1};

  bool periodic(int axis) const { return sign[axis] > 0; }
  bool operator==(const SpinStructure&) const = default;
};

// Periodic n x n grid on the flat square torus R^2 / (side * Z)^2 with a
// fixed spin structure. Vertex (i, j) sits at (i*h, j*h); the quadrature
// weight of every vertex is h^2. Neighbor tables carry the seam sign flips
// that spinor-valued stencils need.
class SurfaceDomain {
 public:
  SurfaceDomain(int n, double side_length, SpinStructure spin);

  int n() const { return n_; }
  int vertices() const { return n_ * n_; }
  double side_length() const { return side_; }
  double h() const { return h_; }
  double area() const { return side_ * side_; }
  SpinStructure spin_structure() const { return spin_; }

  int index(int i, int j) const { return i * n_ + j; }
  int coord(int idx, int axis) const { return axis == 0 ? idx / n_ : idx % n_; }
  double position(int idx, int axis) const { return coord(idx, axis) * h_; }

  int up(int axis, int idx) const { return up_[axis][idx]; }
  int dn(int axis, int idx) const { return dn_[axis][idx]; }
  // Spinor seam signs for hops in +/- axis direction.
  double sgn_up(int axis, int idx) const { return sgn_up_[axis][idx]; }
  double sgn_dn(int axis, int idx) const { return sgn_dn_[axis][idx]; }

  // Shortest periodic distance between two vertices.
  double distance(int ia, int ib) const;

  bool operator==(const SurfaceDomain& o) const {
    return n_ == o.n_ && side_ == o.side_ && spin_ == o.spin_;
  }

 private:
  int n_;
  double side_;
  SpinStructure spin_;
  double h_;
  std::vector<int> up_[2], dn_[2];
  std::vector<double> sgn_up_[2], sgn_dn_[2];
};

SurfaceDomain build_domain(int n, double side_length, SpinStructure spin);

// Real field over the vertices with `comps` components per vertex.
class Field {
 public:
  Field() = default;
  Field(const SurfaceDomain& dom, int comps, double init = 0.0)
      : dom_(&dom), comps_(comps),
        v_(static_cast<std::size_t>(dom.vertices()) * comps, init) {}

  const SurfaceDomain& domain() const { return *dom_; }
  int comps() const { return comps_; }
  std::size_t size() const { return v_.size(); }

  double& operator()(int idx, int c) { return v_[static_cast<std::size_t>(idx) * comps_ + c]; }
  double operator()(int idx, int c) const { return v_[static_cast<std::size_t>(idx) * comps_ + c]; }
  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  bool same_shape(const Field& o) const {
    return dom_ && o.dom_ && *dom_ == *o.dom_ && comps_ == o.comps_;
  }

 private:
  const SurfaceDomain* dom_ = nullptr;
  int comps_ = 0;
  std::vector<double> v_;
};

using ScalarField = Field;

// Gradient as a pair of per-axis fields. Component a of grad(f) lives on the
// staggered point x + (h/2) e_a; this is what makes div below the exact
// negative adjoint under the vertex quadrature.
struct GradField {
  Field axis[2];
};

void require_same_shape(const Field& a, const Field& b, const char* what);

// Forward difference per axis (value associated with the edge midpoint).
GradField grad(const Field& f);
// Negative adjoint of grad: backward difference divergence,
// so that sum_x h^2 <v, grad f> + sum_x h^2 (div v) f = 0 exactly.
Field div(const GradField& v);
// Vertex-lumped quadrature, exact for constants.
double integrate(const Field& f);
// L2 inner product h^2 * sum_x <a(x), b(x)>.
double inner_l2(const Field& a, const Field& b);
double norm_l2(const Field& a);
double inner_l2(const GradField& a, const GradField& b);
// W^{1,2a}-style norm (integral of |f|^{2a} + |grad f|^{2a})^(1/2a).
double norm_w1_2alpha(const Field& f, double alpha);

// Shift a field by whole grid cells (translation on the torus).
Field shift(const Field& f, int di, int dj);

// Serial reference kernels, kept independent of the parallel versions for
// cross-checking and benchmarking.
namespace ref {
GradField grad(const Field& f);
Field div(const GradField& v);
double integrate(const Field& f);
}  // namespace ref

}  // namespace sdaf
