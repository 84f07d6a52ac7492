// Serial reference against the OpenMP path for the hot kernels. Run with
// OMP_NUM_THREADS set to the core count; Arg(0) is serial, Arg(1) parallel.
#include <benchmark/benchmark.h>

#include "acs/ansatz.hpp"
#include "acs/jacobi.hpp"
#include "acs/residual.hpp"
#include "acs/spectra.hpp"

using namespace acs;

namespace {

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::Parallel : Exec::Serial; }

const Profile& prof() {
  static const Profile p = solve_heteroclinic(cubic_nonlinearity(), 20.0, 2001);
  return p;
}

struct Setup {
  Surface S = catenoid(20.0, 201, 1);
  FermiChart C;
  Ansatz A;
  GlobalField W;
  Setup()
      : C(build_chart(S, prof(), 0.1, log_jacobi_field(S, {-1.0, 1.0}).h0, std::vector<double>(S.num_nodes(), 0.0))),
        A(build_ansatz(C, prof())),
        W(build_global(A)) {}
};

const Setup& setup() {
  static const Setup s;
  return s;
}

void BM_laplace_beltrami(benchmark::State& st) {
  const Surface S = catenoid(20.0, 401, 128);
  std::vector<double> f(S.num_nodes());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = S.node[k].nu[2];
  for (auto _ : st) benchmark::DoNotOptimize(laplace_beltrami_apply(S, f, exec_of(st)));
}

void BM_build_chart(benchmark::State& st) {
  const auto& s = setup();
  const auto h0 = log_jacobi_field(s.S, {-1.0, 1.0}).h0;
  const std::vector<double> h1(s.S.num_nodes(), 0.0);
  for (auto _ : st) benchmark::DoNotOptimize(build_chart(s.S, prof(), 0.1, h0, h1, {}, exec_of(st)));
}

void BM_apply_laplacian(benchmark::State& st) {
  const auto& s = setup();
  for (auto _ : st) benchmark::DoNotOptimize(apply_laplacian(s.C, s.A.u1, exec_of(st)));
}

void BM_residual_u1(benchmark::State& st) {
  const auto& s = setup();
  for (auto _ : st) benchmark::DoNotOptimize(residual_u1(s.A, exec_of(st)));
}

void BM_build_tube(benchmark::State& st) {
  const auto& s = setup();
  const ScalarField3 u = [&s](const Vec3& x) { return s.W(x); };
  MeridianGrid g;
  g.n_s = 121;
  for (auto _ : st) benchmark::DoNotOptimize(build_tube(u, prof(), s.S, 0.1, 80.0, g, exec_of(st)));
}

}  // namespace

BENCHMARK(BM_laplace_beltrami)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_build_chart)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_apply_laplacian)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_residual_u1)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_build_tube)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
