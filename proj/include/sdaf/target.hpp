#pragma once

#include <array>
#include <memory>
#include <string>

#include "sdaf/domain.hpp"
#include "sdaf/spin.hpp"

namespace sdaf {

// Embedded Riemannian target N in R^L (dim N = 2 for both built-ins).
// Flat-chart targets (the torus) represent points as lifts to the universal
// cover; the geometric operations then act on the chart.
class TargetManifold {
 public:
  virtual ~TargetManifold() = default;

  virtual int ambient_dim() const = 0;
  virtual int dim() const { return 2; }
  virtual double injectivity_radius() const = 0;
  virtual bool flat_chart() const = 0;
  virtual std::string name() const = 0;

  // Nearest-point projection onto N, in place. Throws GeometryError outside
  // the tubular-neighborhood guard.
  virtual void project(double* p) const = 0;
  // Symmetric idempotent rank-2 tangent projector at p, row-major L x L.
  virtual void tangent_projector(const double* p, double* P) const = 0;
  // Riemann curvature R(X,Y)Z for tangent X, Y, Z at p.
  virtual void curvature_op(const double* p, const double* X, const double* Y, const double* Z,
                            double* out) const = 0;
  // exp_p(t v).
  virtual void geodesic(const double* p, const double* v, double t, double* out) const = 0;
  // Parallel transport of tangent w from p to q along the minimizing geodesic.
  virtual void parallel_transport(const double* p, const double* q, const double* w,
                                  double* out) const = 0;
  // G such that <G, X> = <dPi_p[X], S>_F for every ambient X, S an L x L matrix.
  virtual void projector_derivative_contraction(const double* p, const double* S,
                                                double* G) const = 0;
  // d^2/(ds dt) exp_p(s V + t W) at s = t = 0.
  virtual void exp_mixed_second(const double* p, const double* V, const double* W,
                                double* out) const = 0;
  virtual double distance(const double* p, const double* q) const = 0;
};

// Unit round sphere S^2 in R^3.
class RoundSphere final : public TargetManifold {
 public:
  int ambient_dim() const override { return 3; }
  double injectivity_radius() const override;
  bool flat_chart() const override { return false; }
  std::string name() const override { return "sphere"; }
  void project(double* p) const override;
  void tangent_projector(const double* p, double* P) const override;
  void curvature_op(const double* p, const double* X, const double* Y, const double* Z,
                    double* out) const override;
  void geodesic(const double* p, const double* v, double t, double* out) const override;
  void parallel_transport(const double* p, const double* q, const double* w,
                          double* out) const override;
  void projector_derivative_contraction(const double* p, const double* S,
                                        double* G) const override;
  void exp_mixed_second(const double* p, const double* V, const double* W,
                        double* out) const override;
  double distance(const double* p, const double* q) const override;
};

// Flat 2-torus R^2 / (period Z)^2, represented by lifts to R^2. The ambient
// Clifford-torus embedding in R^4 is provided separately for validation.
class FlatTorus2 final : public TargetManifold {
 public:
  explicit FlatTorus2(double period);
  double period() const { return period_; }
  int ambient_dim() const override { return 2; }
  double injectivity_radius() const override { return period_ / 2.0; }
  bool flat_chart() const override { return true; }
  std::string name() const override { return "torus"; }
  void project(double* p) const override;  // reduces the chart mod period
  void tangent_projector(const double* p, double* P) const override;
  void curvature_op(const double* p, const double* X, const double* Y, const double* Z,
                    double* out) const override;
  void geodesic(const double* p, const double* v, double t, double* out) const override;
  void parallel_transport(const double* p, const double* q, const double* w,
                          double* out) const override;
  void projector_derivative_contraction(const double* p, const double* S,
                                        double* G) const override;
  void exp_mixed_second(const double* p, const double* V, const double* W,
                        double* out) const override;
  double distance(const double* p, const double* q) const override;

  // Clifford-torus point in R^4 for the angle pair 2*pi*p/period.
  std::array<double, 4> embed_ambient4(const double* p) const;

 private:
  double period_;
};

// Free homotopy class data: integer winding matrix for torus targets,
// degree for the sphere.
struct HomotopyClass {
  enum class Kind { winding, degree } kind = Kind::winding;
  std::array<std::array<int, 2>, 2> winding{{{0, 0}, {0, 0}}};
  int degree = 0;

  static HomotopyClass torus_class(int a00, int a01, int a10, int a11);
  static HomotopyClass sphere_class(int deg);
  bool operator==(const HomotopyClass&) const = default;
  std::string describe() const;
};

// Discrete map x -> N, stored as ambient values (sphere) or lifts (torus).
// For lift-valued maps the winding matrix supplies the seam offsets:
// crossing the axis-b seam adds period * winding[c][b] to component c.
class MapField {
 public:
  MapField() = default;
  MapField(const SurfaceDomain& dom, const TargetManifold& target);

  const SurfaceDomain& domain() const { return *dom_; }
  const TargetManifold& target() const { return *target_; }
  int ambient_dim() const { return target_->ambient_dim(); }

  Field& values() { return values_; }
  const Field& values() const { return values_; }
  double& operator()(int idx, int c) { return values_(idx, c); }
  double operator()(int idx, int c) const { return values_(idx, c); }

  std::array<std::array<int, 2>, 2>& winding() { return winding_; }
  const std::array<std::array<int, 2>, 2>& winding() const { return winding_; }

  // Seam-aware forward difference of component c along `axis` at vertex idx.
  double dplus(int axis, int idx, int c) const;
  // All-components forward differential into out[axis], each comps = L.
  void differential(Field out[2]) const;

  // Largest distance of a vertex value from N (0 for lift charts).
  double off_manifold_error() const;
  // Projects every vertex value onto N (no-op for lift charts).
  void project_onto_target();

  bool same_shape(const MapField& o) const;

 private:
  const SurfaceDomain* dom_ = nullptr;
  const TargetManifold* target_ = nullptr;
  Field values_;
  std::array<std::array<int, 2>, 2> winding_{{{0, 0}, {0, 0}}};
};

// Spinor field tangent along a map: carriers are PlainSpinor; tangency is a
// checked invariant.
double tangency_violation(const MapField& phi, const PlainSpinor& psi);
// Fiberwise tangent projection Id (x) Pi(phi(x)).
PlainSpinor project_tangent(const MapField& phi, const PlainSpinor& psi);

// Fiberwise parallel transport Id (x) P along minimizing geodesics between
// phi_old(x) and phi_new(x). Throws when the maps are too far apart.
PlainSpinor transport_spinor(const MapField& phi_old, const MapField& phi_new,
                             const PlainSpinor& psi);

// Discrete winding matrix / degree computation. ok=false flags
// ill-conditioned (near-half-period jumps or far-from-integer totals).
struct WindingResult {
  HomotopyClass cls;
  bool ok = true;
  double raw_degree = 0.0;
};
WindingResult winding_of(const MapField& phi);

}  // namespace sdaf
