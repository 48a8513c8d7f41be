#pragma once

#include <random>

#include "sdaf/functional.hpp"

namespace sdaf {

using Rng = std::mt19937_64;

// Band-limited real field: random Fourier modes up to |q| <= kmax per axis,
// deterministic in the rng state.
Field random_smooth_field(const SurfaceDomain& dom, int comps, int kmax, double amplitude,
                          Rng& rng);

// Class representative plus a smooth tangent perturbation, retracted onto N.
MapField random_smooth_map(const SurfaceDomain& dom, const TargetManifold& target,
                           const HomotopyClass& cls, double amplitude, Rng& rng);

// Smooth tangent field along phi.
Field random_tangent_field(const MapField& phi, double amplitude, Rng& rng);

// Smooth tangent spinor along phi (band-limited per channel, then projected).
PlainSpinor random_tangent_spinor(const MapField& phi, double amplitude, Rng& rng);

// Degree-one sphere map concentrated at scale s around (x0, y0): inverse
// stereographic profile of the shifted, rescaled coordinates.
MapField bubble_map(const SurfaceDomain& dom, const RoundSphere& target, double scale, double x0,
                    double y0);

}  // namespace sdaf
