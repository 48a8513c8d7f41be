// Timing comparison of the OpenMP kernels against their serial references.

#include <chrono>
#include <cstdio>
#include <random>

#include "sdaf/parallel.hpp"
#include "sdaf/sampling.hpp"
#include "sdaf/spin.hpp"

using namespace sdaf;
using hclock = std::chrono::high_resolution_clock;

namespace {

template <typename F>
double time_ms(int reps, F&& fn) {
  const auto t0 = hclock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto t1 = hclock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 128;
  const int reps = argc > 2 ? std::atoi(argv[2]) : 20;
  SurfaceDomain dom(n, 1.0, {{-1, +1}});
  Rng rng(7);

  Field f = random_smooth_field(dom, 3, 4, 1.0, rng);
  PlainSpinor psi(dom, 3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int idx = 0; idx < dom.vertices(); ++idx)
    for (int s = 0; s < 2; ++s)
      for (int m = 0; m < 3; ++m) psi(idx, s, m) = cdouble(g(rng), g(rng));

  printf("grid %d x %d, %d repetitions, %d thread(s)\n", n, n, reps, thread_count());
  printf("%-24s %12s %12s %8s\n", "kernel", "serial ms", "omp ms", "speedup");

  volatile double sink = 0.0;

  {
    GradField gs, gp;
    const double ts = time_ms(reps, [&] { gs = ref::grad(f); });
    const double tp = time_ms(reps, [&] { gp = grad(f); });
    sink += gs.axis[0](0, 0) + gp.axis[0](0, 0);
    printf("%-24s %12.3f %12.3f %8.2f\n", "grad", ts, tp, ts / tp);

    Field ds, dp;
    const double ts2 = time_ms(reps, [&] { ds = ref::div(gs); });
    const double tp2 = time_ms(reps, [&] { dp = div(gs); });
    sink += ds(0, 0) + dp(0, 0);
    printf("%-24s %12.3f %12.3f %8.2f\n", "div", ts2, tp2, ts2 / tp2);
  }
  {
    Field fs(dom, 1);
    for (int idx = 0; idx < dom.vertices(); ++idx) fs(idx, 0) = f(idx, 0);
    double vs = 0.0, vp = 0.0;
    const double ts = time_ms(reps, [&] { vs = ref::integrate(fs); });
    const double tp = time_ms(reps, [&] { vp = integrate(fs); });
    sink += vs + vp;
    printf("%-24s %12.3f %12.3f %8.2f\n", "integrate", ts, tp, ts / tp);
  }
  {
    PlainSpinor os, op;
    const double ts = time_ms(reps, [&] { os = ref::untwisted_dirac(psi); });
    const double tp = time_ms(reps, [&] { op = untwisted_dirac(psi); });
    sink += os(0, 0, 0).real() + op(0, 0, 0).real();
    printf("%-24s %12.3f %12.3f %8.2f\n", "untwisted_dirac", ts, tp, ts / tp);
  }
  {
    PlainSpinor r;
    const double tp = time_ms(reps, [&] { r = resolvent_precondition(psi); });
    sink += r(0, 0, 0).real();
    printf("%-24s %12s %12.3f %8s\n", "resolvent (fft)", "-", tp, "-");
  }
  if (sink == 12345.0) printf("~\n");
  return 0;
}
