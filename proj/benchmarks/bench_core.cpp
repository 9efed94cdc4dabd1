#include <benchmark/benchmark.h>

#include <Eigen/Core>
#include <cmath>

#include "usbp/kernel.hpp"
#include "usbp/montecarlo.hpp"
#include "usbp/scenario.hpp"
#include "usbp/sinkhorn.hpp"
#include "usbp/sweep.hpp"

namespace {

using namespace usbp;

CoefficientSet wavy_coeffs() {
  return {parse_expr("0.2*sin(x)"), parse_expr("1"),
          parse_expr("0.3*exp(-x^2)+0.1")};
}

GridSpec grid_of(int n_space, int n_steps) {
  return {-4.0, 4.0, n_space, 1.0, n_steps};
}

Eigen::VectorXd uniform_mass(const GridSpec& g) {
  const Eigen::VectorXd w = g.quad_weights();
  return w / w.sum();
}

// A mass-balanced, absolutely continuous target that is genuinely off the
// reference law: the surviving part is tilted by a Gaussian factor.
TargetPair tilted_target(const StepKernels& sk, const DeadSupport& ds,
                         const Eigen::VectorXd& mu0_mass) {
  const ReferenceLaw ref = reference_terminal_law(sk, ds, mu0_mass);
  const GridSpec& g = sk.grid;

  Eigen::VectorXd active = ref.terminal_active_mass;
  const double total = active.sum();
  for (int k = 0; k < g.n_space; ++k)
    active[k] *= std::exp(-0.5 * g.node(k) * g.node(k));
  active *= total / active.sum();

  TargetPair t;
  t.scenario = ds.kind();
  t.rho0 = mu0_mass.cwiseQuotient(g.quad_weights());
  t.rhoT_active = active.cwiseQuotient(g.quad_weights());
  t.rhoT_dead = ref.terminal_dead_mass / ds.cell_weight();
  return t;
}

void BM_BuildStepKernels(benchmark::State& state) {
  const GridSpec g = grid_of(static_cast<int>(state.range(0)), 32);
  const CoefficientSet coeffs = wavy_coeffs();
  for (auto _ : state) benchmark::DoNotOptimize(build_step_kernels(coeffs, g));
}
BENCHMARK(BM_BuildStepKernels)->Arg(64)->Arg(128);

void BM_KernelBetween(benchmark::State& state) {
  const StepKernels sk =
      build_step_kernels(wavy_coeffs(), grid_of(static_cast<int>(state.range(0)), 32));
  for (auto _ : state)
    benchmark::DoNotOptimize(kernel_between(sk, 0, sk.n_steps()));
}
BENCHMARK(BM_KernelBetween)->Arg(64)->Arg(128);

void BM_PhiSweep(benchmark::State& state) {
  const GridSpec g = grid_of(static_cast<int>(state.range(0)), 32);
  const StepKernels sk = build_step_kernels(wavy_coeffs(), g);
  const DeadSupport ds(ScenarioKind::Joint, g);
  const Eigen::VectorXd g_active = Eigen::VectorXd::Ones(g.n_space);
  const Eigen::VectorXd g_dead = Eigen::VectorXd::Ones(ds.size());
  for (auto _ : state)
    benchmark::DoNotOptimize(phi_sweep(sk, ds, g_active, g_dead));
}
BENCHMARK(BM_PhiSweep)->Arg(64)->Arg(128);

void BM_PhiHatSweep(benchmark::State& state) {
  const GridSpec g = grid_of(static_cast<int>(state.range(0)), 32);
  const StepKernels sk = build_step_kernels(wavy_coeffs(), g);
  const DeadSupport ds(ScenarioKind::Joint, g);
  const Eigen::VectorXd f = Eigen::VectorXd::Ones(g.n_space);
  const Eigen::VectorXd mu0 = uniform_mass(g);
  for (auto _ : state) benchmark::DoNotOptimize(phihat_sweep(sk, ds, f, mu0));
}
BENCHMARK(BM_PhiHatSweep)->Arg(64)->Arg(128);

void BM_SinkhornSolve(benchmark::State& state) {
  const GridSpec g = grid_of(static_cast<int>(state.range(0)), 16);
  const StepKernels sk = build_step_kernels(wavy_coeffs(), g);
  const DeadSupport ds(ScenarioKind::Joint, g);
  const Eigen::VectorXd mu0 = uniform_mass(g);
  const TargetPair t = tilted_target(sk, ds, mu0);
  int iters = 0;
  for (auto _ : state) {
    SinkhornResult r = sinkhorn_solve(sk, ds, mu0, t);
    iters = r.diagnostics.iterations;
    benchmark::DoNotOptimize(r);
  }
  state.counters["iterations"] = iters;
}
BENCHMARK(BM_SinkhornSolve)->Arg(48)->Arg(96);

void BM_Simulate(benchmark::State& state) {
  const GridSpec g = grid_of(64, 32);
  const StepKernels sk = build_step_kernels(wavy_coeffs(), g);
  const SdeFields fields = reference_sde_fields(sk);
  const Eigen::VectorXd mu0 = uniform_mass(g);
  SimConfig cfg;
  cfg.n_paths = static_cast<int>(state.range(0));
  cfg.seed = 20260817;
  for (auto _ : state) benchmark::DoNotOptimize(simulate(g, fields, mu0, cfg));
  state.SetItemsProcessed(state.iterations() * cfg.n_paths);
}
BENCHMARK(BM_Simulate)->Arg(1024)->Arg(8192);

}  // namespace

BENCHMARK_MAIN();
