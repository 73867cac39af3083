#include <erasurekf/critical_value.hpp>
#include <erasurekf/filter.hpp>
#include <erasurekf/simulation.hpp>

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

namespace {

erasurekf::LinearSystem four_block_system() {
    erasurekf::LinearSystem sys;
    sys.A = Eigen::Vector4d(2, -2, 3, -3).asDiagonal();
    sys.C = Eigen::MatrixXd(2, 4);
    sys.C << 1, 0, 1, 0, 0, 1, 0, 1;
    sys.Q = Eigen::MatrixXd::Identity(4, 4);
    sys.R = Eigen::MatrixXd::Identity(2, 2);
    sys.Sigma0 = Eigen::MatrixXd::Identity(4, 4);
    return sys;
}

erasurekf::LinearSystem scalar_system() {
    erasurekf::LinearSystem sys;
    sys.A = Eigen::MatrixXd::Constant(1, 1, 2.0);
    sys.C = Eigen::MatrixXd::Constant(1, 1, 1.0);
    sys.Q = sys.R = sys.Sigma0 = Eigen::MatrixXd::Identity(1, 1);
    return sys;
}

void BM_RiccatiStep4(benchmark::State& state) {
    const auto sys = four_block_system();
    Eigen::MatrixXd P = sys.Sigma0;
    int gamma = 1;
    for (auto _ : state) {
        P = erasurekf::riccati_step(P, gamma, sys);
        gamma ^= 1;
        benchmark::DoNotOptimize(P);
    }
}
BENCHMARK(BM_RiccatiStep4);

void BM_SimulateTrajectoryScalar(benchmark::State& state) {
    const auto sys = scalar_system();
    std::uint64_t seed = 0;
    for (auto _ : state) {
        auto out = erasurekf::simulate_trajectory(sys, 0.8, 300, ++seed);
        benchmark::DoNotOptimize(out.trace.data());
    }
}
BENCHMARK(BM_SimulateTrajectoryScalar);

void BM_SimulateTrajectory4(benchmark::State& state) {
    const auto sys = four_block_system();
    std::uint64_t seed = 0;
    for (auto _ : state) {
        auto out = erasurekf::simulate_trajectory(sys, 0.8, 300, ++seed);
        benchmark::DoNotOptimize(out.trace.data());
    }
}
BENCHMARK(BM_SimulateTrajectory4);

void BM_CriticalValue4(benchmark::State& state) {
    const auto sys = four_block_system();
    for (auto _ : state) {
        auto res = erasurekf::critical_value(sys);
        benchmark::DoNotOptimize(res.lower);
    }
}
BENCHMARK(BM_CriticalValue4);

void BM_MlCovariance(benchmark::State& state) {
    const auto sys = four_block_system();
    const auto trace = erasurekf::make_erasure_trace(5, 0.5, static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto P = erasurekf::ml_covariance(trace, sys);
        benchmark::DoNotOptimize(P.data());
    }
}
BENCHMARK(BM_MlCovariance)->Arg(20)->Arg(50);

void BM_Estimate(benchmark::State& state) {
    const auto sys = scalar_system();
    erasurekf::TrialConfig cfg;
    cfg.p = 0.8;
    for (auto _ : state) {
        auto s = erasurekf::estimate(sys, cfg, static_cast<int>(state.range(0)));
        benchmark::DoNotOptimize(s.diverged_fraction);
    }
}
BENCHMARK(BM_Estimate)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
