#include <benchmark/benchmark.h>

#include "pinn/autodiff.hpp"
#include "pinn/bspline.hpp"
#include "pinn/physics.hpp"
#include "pinn/trainer.hpp"

using namespace pinn;

namespace {

nets::Params net(nets::Family f) {
  nets::NetworkSpec s;
  s.family = f;
  s.layers = f == nets::Family::Kan ? std::vector<int>{3, 5, 5, 3} : std::vector<int>{3, 20, 20, 3};
  return nets::init_params(s, 0);
}

void BM_BsplineBasis(benchmark::State& state) {
  const auto k = KnotVector::uniform(5, 3, -1.0, 1.0);
  double x = -1.0, acc = 0.0;
  for (auto _ : state) {
    for (std::size_t i = 0; i < k.basis_count(); ++i) acc += bspline_basis(x, i, 3, k);
    x = x > 1.0 ? -1.0 : x + 1e-3;
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_BsplineBasis);

void BM_CompileResidualTerm(benchmark::State& state) {
  const auto family = static_cast<nets::Family>(state.range(0));
  const auto p = net(family);
  const auto c = sampling::make_case(sampling::CaseKind::Cavity);
  const auto fields = physics::network_fields(p, physics::case_scaling(c, p.spec));
  for (auto _ : state) benchmark::DoNotOptimize(physics::compile_terms(c, fields));
  state.SetLabel(std::string(nets::family_name(family)));
}
BENCHMARK(BM_CompileResidualTerm)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ResidualForwardBackward(benchmark::State& state) {
  const auto family = static_cast<nets::Family>(state.range(0));
  const auto p = net(family);
  const auto c = sampling::make_case(sampling::CaseKind::Cavity);
  auto terms = physics::compile_terms(c, physics::network_fields(p, physics::case_scaling(c, p.spec)));
  auto& prog = terms.front().program;
  const sampling::Point pt{1.0, 0.4, 0.6};
  std::vector<double> grad(p.values.size());
  const double seed = 1.0;
  for (auto _ : state) {
    prog.run({pt, p.values});
    prog.backprop(std::span<const double>(&seed, 1), grad);
  }
  state.SetLabel(std::string(nets::family_name(family)));
}
BENCHMARK(BM_ResidualForwardBackward)->Arg(0)->Arg(1);

void BM_TrainingEpoch(benchmark::State& state) {
  const auto family = static_cast<nets::Family>(state.range(0));
  const auto p = net(family);
  const auto c = sampling::make_case(sampling::CaseKind::Poiseuille);
  auto problem = train::make_problem(c, p, {2000, 500, 500}, 0);
  const std::vector<double> w{0.1, 2, 2, 2};
  auto st = train::initial_state(p, balancing::fixed_weights(problem.term_names(), w), 0);
  train::TrainConfig cfg;
  cfg.checkpoint_every = 0;
  for (auto _ : state) {
    cfg.epochs = st.epoch + 1;
    train::train(problem, st, cfg);
  }
  state.SetLabel(std::string(nets::family_name(family)));
}
BENCHMARK(BM_TrainingEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
