#include "relucert/bounds.hpp"
#include "relucert/lp.hpp"
#include "relucert/milp.hpp"
#include "relucert/network.hpp"
#include "relucert/propagate.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

using namespace relucert;

namespace {

Network make_net(std::uint64_t seed, const std::vector<int>& dims) {
    std::mt19937_64 rng(seed);
    auto uni = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    std::vector<AffineLayer> layers;
    for (std::size_t i = 1; i < dims.size(); ++i) {
        Mat w(static_cast<std::size_t>(dims[i]), static_cast<std::size_t>(dims[i - 1]));
        double s = 2.0 / std::sqrt(static_cast<double>(dims[i - 1]));
        for (std::size_t r = 0; r < w.rows(); ++r)
            for (std::size_t c = 0; c < w.cols(); ++c)
                w(r, c) = uni(-s, s);
        Vec b(static_cast<std::size_t>(dims[i]));
        for (double& x : b)
            x = uni(-0.1, 0.1);
        layers.push_back({std::move(w), std::move(b)});
    }
    return Network(std::move(layers));
}

LinearProgram make_lp(std::uint64_t seed, int vars, int rows) {
    std::mt19937_64 rng(seed);
    auto uni = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    LinearProgram lp;
    for (int j = 0; j < vars; ++j)
        lp.add_var(-2.0, 2.0);
    for (int i = 0; i < rows; ++i) {
        SparseRow row;
        for (int j = 0; j < vars; ++j)
            row.emplace_back(j, uni(-1.0, 1.0));
        lp.add_row(std::move(row), Rel::Le, uni(0.5, 4.0));
    }
    SparseRow obj;
    for (int j = 0; j < vars; ++j)
        obj.emplace_back(j, uni(-1.0, 1.0));
    lp.set_objective(std::move(obj), Sense::Max);
    return lp;
}

void BM_SimplexSolve(benchmark::State& state) {
    LinearProgram lp = make_lp(7, static_cast<int>(state.range(0)), static_cast<int>(state.range(0)));
    for (auto _ : state) {
        LpSolution s = solve_lp(lp);
        benchmark::DoNotOptimize(s.objective_value);
    }
}
BENCHMARK(BM_SimplexSolve)->Arg(20)->Arg(60)->Arg(120);

void BM_BoxPropagate(benchmark::State& state) {
    Network net = make_net(11, {8, 64, 64, 64, 10});
    InputRegion region{Vec(8, 0.1), 0.1, {}, {}};
    for (auto _ : state) {
        BoundsMap bm = box_propagate(net, region);
        benchmark::DoNotOptimize(bm.num_layers());
    }
}
BENCHMARK(BM_BoxPropagate);

void BM_LpLayer(benchmark::State& state) {
    Network net = make_net(13, {6, 24, 24, 10});
    InputRegion region{Vec(6, 0.0), 0.1, {}, {}};
    PropagationConfig cfg;
    cfg.method = Method::Lp;
    cfg.workers = 1;
    BoundsMap below = pmilp_bounds(net, region, cfg, 1);
    for (auto _ : state) {
        BoundsMap bm = below;
        tighten_layer(net, region, cfg, bm, 2);
        benchmark::DoNotOptimize(average_uncertainty(bm, 2));
    }
}
BENCHMARK(BM_LpLayer);

void BM_PmilpNeuron(benchmark::State& state) {
    Network net = make_net(17, {6, 24, 24, 10});
    InputRegion region{Vec(6, 0.0), 0.12, {}, {}};
    PropagationConfig cfg;
    cfg.method = Method::Lp;
    cfg.workers = 1;
    BoundsMap below = pmilp_bounds(net, region, cfg, 2);
    MilpModel base = build_model(net, region, below, {}, 3);
    LayerObjective target = LayerObjective::single({3, 0});
    ScoreTable gs = score_gs(net, below, target, ScoreMethod::GsFsb);
    OpenSet x = select_open_set(gs, static_cast<int>(state.range(0)), 0, 0.01);
    MilpModel model = build_model(net, region, below, x, 3);
    MilpConfig mcfg;
    mcfg.mip_gap = 0.001;
    mcfg.branch_order = x;
    for (auto _ : state) {
        MilpResult res = solve_milp(model, target, Sense::Max, mcfg);
        benchmark::DoNotOptimize(res.safe_bound);
    }
}
BENCHMARK(BM_PmilpNeuron)->Arg(4)->Arg(8)->Arg(12);

} // namespace

BENCHMARK_MAIN();
