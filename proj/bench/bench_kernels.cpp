// Serial reference against the OpenMP element loops on the same kernels.
#include <benchmark/benchmark.h>

#include <memory>

#include "tphdg/hdg.hpp"
#include "tphdg/verify.hpp"

using namespace tphdg;

namespace {

struct Fixture {
  Mesh mesh;
  MaterialField materials{named_parameter_set("L1")};
  ProblemData data;

  explicit Fixture(int n) : mesh(build_structured_mesh(n, n, {0, 0, 1, 1}, SplitPattern::diagonal, 0.1, 1)) {
    data = manufactured_problem(std::make_shared<ManufacturedSolution>(materials.parameters(0)), materials);
  }
};

ExecutionPolicy policy(const benchmark::State& s) {
  return s.range(0) ? ExecutionPolicy::parallel : ExecutionPolicy::serial;
}

AssemblyOptions options(const benchmark::State& s) {
  AssemblyOptions o;
  o.policy = policy(s);
  o.cache = false;  // every element assembled and factorized
  return o;
}

// range(0): 0 serial, 1 parallel; range(1): cells per side; range(2): degree.
void BM_Condense(benchmark::State& s) {
  const Fixture f(static_cast<int>(s.range(1)));
  for (auto _ : s) {
    CondensedSystem sys(f.mesh, f.materials, static_cast<int>(s.range(2)), 0.01, 0.5, options(s));
    benchmark::DoNotOptimize(sys.matrix().nonZeros());
  }
  s.SetLabel(s.range(0) ? "parallel" : "serial");
}

void BM_Loads(benchmark::State& s) {
  const Fixture f(static_cast<int>(s.range(1)));
  const DofLayout layout(static_cast<int>(s.range(2)));
  for (auto _ : s) {
    Eigen::MatrixXd F = assemble_loads(f.mesh, f.materials, layout, f.data, 0.1, -1, policy(s));
    benchmark::DoNotOptimize(F.data());
  }
  s.SetLabel(s.range(0) ? "parallel" : "serial");
}

void BM_Stage(benchmark::State& s) {
  const Fixture f(static_cast<int>(s.range(1)));
  const int k = static_cast<int>(s.range(2));
  const CondensedSystem sys(f.mesh, f.materials, k, 0.01, 0.5, options(s));
  const DiscreteState x0 = random_state(f.mesh, sys.layout(), 3);
  const Eigen::MatrixXd F = assemble_loads(f.mesh, f.materials, sys.layout(), f.data, 0.1);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(sys.traces().size());
  Eigen::MatrixXd Xs;
  Eigen::VectorXd Ys;
  for (auto _ : s) {
    sys.solve_stage(x0.X, F, zero, zero, Xs, Ys);
    benchmark::DoNotOptimize(Xs.data());
  }
  s.SetLabel(s.range(0) ? "parallel" : "serial");
}

void args(benchmark::internal::Benchmark* b) {
  for (int par : {0, 1}) {
    b->Args({par, 16, 1});
    b->Args({par, 16, 3});
  }
  b->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(BM_Condense)->Apply(args);
BENCHMARK(BM_Loads)->Apply(args);
BENCHMARK(BM_Stage)->Apply(args);

BENCHMARK_MAIN();
