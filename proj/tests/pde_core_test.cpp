#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "fixtures.hpp"
#include "koopctl/discrete_operator.hpp"
#include "koopctl/eigenassign.hpp"
#include "koopctl/eigensolve.hpp"
#include "koopctl/error.hpp"
#include "koopctl/simulate.hpp"
#include "koopctl/stability.hpp"
#include "koopctl/trajectory_io.hpp"

namespace {

using namespace koopctl;
using std::numbers::pi;

ParabolicPlant neumann(double a) { return {1.0, ReactionProfile::constant(a), 0.0, 0.0}; }

TEST(Grid, RejectsDegenerateSize) {
  EXPECT_THROW(SpatialGrid(2), InvalidArgument);
  EXPECT_NO_THROW(SpatialGrid(3));
}

TEST(Grid, NodesAndTrapezoidWeights) {
  const SpatialGrid grid(11);
  EXPECT_DOUBLE_EQ(grid.node(0), 0.0);
  EXPECT_DOUBLE_EQ(grid.node(10), 1.0);
  EXPECT_DOUBLE_EQ(grid.spacing(), 0.1);
  EXPECT_NEAR(grid.weights().sum(), 1.0, 1e-15);
  for (std::size_t i = 1; i < grid.size(); ++i) EXPECT_GT(grid.node(i), grid.node(i - 1));
  // trapezoid integrates z exactly: 1/2
  EXPECT_NEAR(grid.inner(grid.nodes(), Eigen::VectorXd::Ones(11)), 0.5, 1e-15);
}

TEST(Plant, ValidationAndProfiles) {
  ParabolicPlant p = ParabolicPlant::diffusion_reaction_example();
  EXPECT_NO_THROW(p.validate());
  EXPECT_NEAR(p.a(0.5), 7.0, 1e-15);
  EXPECT_NEAR(p.a(0.0), 5.0, 1e-15);
  p.rho = 0.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  EXPECT_THROW(ReactionProfile::polynomial({}), InvalidArgument);
  EXPECT_THROW(ReactionProfile::table({0.0, 0.5}, {1.0, 2.0}), InvalidArgument);  // misses z = 1
  EXPECT_THROW(ReactionProfile::table({0.0, 0.6, 0.5, 1.0}, {1, 2, 3, 4}), InvalidArgument);
}

TEST(Plant, TableProfileReproducesSmoothFunction) {
  std::vector<double> z, a;
  for (int i = 0; i <= 40; ++i) {
    z.push_back(i / 40.0);
    a.push_back(7.0 - 8.0 * (z.back() - 0.5) * (z.back() - 0.5));
  }
  const ReactionProfile table = ReactionProfile::table(z, a);
  const ReactionProfile poly = ReactionProfile::polynomial({5.0, 8.0, -8.0});
  for (double s : {0.0, 0.013, 0.37, 0.5, 0.91, 1.0}) EXPECT_NEAR(table(s), poly(s), 1e-12);
}

TEST(AssembleOperator, ThreeNodeNeumannLaplacian) {
  const SpatialGrid grid(3);
  const DiscreteOperator op = assemble_operator(neumann(0.0), grid);
  const double h2 = 0.25;
  Eigen::Matrix3d expected;
  expected << -2 / h2, 2 / h2, 0, 1 / h2, -2 / h2, 1 / h2, 0, 2 / h2, -2 / h2;
  EXPECT_LT((op.dense() - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_DOUBLE_EQ(op.g1[0], -2.0 / 0.5);
  EXPECT_DOUBLE_EQ(op.g2[2], 2.0 / 0.5);
  EXPECT_EQ(op.g1.tail(2).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(op.g2.head(2).cwiseAbs().maxCoeff(), 0.0);
}

TEST(AssembleOperator, ReactionIsAdditive) {
  const SpatialGrid grid(17);
  const Eigen::MatrixXd lap = assemble_operator(neumann(0.0), grid).dense();
  const Eigen::MatrixXd with = assemble_operator(neumann(7.0), grid).dense();
  EXPECT_LT((with - lap - 7.0 * Eigen::MatrixXd::Identity(17, 17)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(AssembleOperator, RobinRowsFromGhostNodes) {
  // x'(0) = q0 x(0) + u1: ghost x_{-1} = x_1 - 2h(q0 x_0 + u1).
  const SpatialGrid grid(5);
  const ParabolicPlant plant{2.0, ReactionProfile::constant(0.0), 3.0, -1.5};
  const DiscreteOperator op = assemble_operator(plant, grid);
  const double h = 0.25, r = 2.0 / (h * h);
  EXPECT_NEAR(op.diag[0], -2 * r - 2 * r * h * 3.0, 1e-9);
  EXPECT_NEAR(op.upper[0], 2 * r, 1e-9);
  EXPECT_NEAR(op.diag[4], -2 * r + 2 * r * h * -1.5, 1e-9);
  EXPECT_NEAR(op.lower[3], 2 * r, 1e-9);
  EXPECT_NEAR(op.g1[0], -2 * 2.0 / h, 1e-12);
  EXPECT_NEAR(op.g2[4], 2 * 2.0 / h, 1e-12);
}

TEST(Eigensolve, NeumannClosedForm) {
  const SpatialGrid grid(2001);
  const auto pairs = eigensolve_reference(assemble_operator(neumann(7.0), grid), grid, 3);
  const double expected[] = {7.0, -2.8696, -32.478};
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(pairs[k].lambda, 7.0 - k * k * pi * pi, 1e-3);
    EXPECT_NEAR(pairs[k].lambda, expected[k], 1e-3);
    const Eigen::VectorXd exact =
        k == 0 ? Eigen::VectorXd::Ones(2001)
               : Eigen::VectorXd(std::sqrt(2.0) * (k * pi * grid.nodes().array()).cos());
    EXPECT_LT(grid.norm(Eigen::VectorXd(pairs[k].phi - exact)), 1e-5) << "k=" << k;
  }
}

TEST(Eigensolve, SecondOrderConvergence) {
  double previous = 0.0;
  for (std::size_t n : {101u, 201u, 401u}) {
    const SpatialGrid grid(n);
    const auto pairs = eigensolve_reference(assemble_operator(neumann(7.0), grid), grid, 4);
    const double err = std::abs(pairs[3].lambda - (7.0 - 9.0 * pi * pi));
    if (previous > 0.0) {
      EXPECT_NEAR(std::log2(previous / err), 2.0, 0.2);
    }
    previous = err;
  }
}

TEST(Eigensolve, ExamplePlantDominantEigenvalue) {
  const auto& run = fixture::example_run();
  // 7.0034 is the expected identified value; the converged plant value is 7.0162.
  EXPECT_NEAR(run.reference[0].lambda, 7.0034, 0.05);
  EXPECT_GT(run.reference[0].lambda, 0.0);
  EXPECT_LT(run.reference[1].lambda, 0.0);
}

TEST(Eigensolve, OrthonormalSortedNormalised) {
  const auto& run = fixture::example_run();
  const auto& pairs = run.reference;
  for (std::size_t i = 0; i < 20; ++i) {
    if (i > 0) {
      EXPECT_LT(pairs[i].lambda, pairs[i - 1].lambda);
    }
    EXPECT_GT(pairs[i].phi[0], 0.0);
    EXPECT_GT(std::abs(pairs[i].phi[2000]), 1e-6);
    for (std::size_t j = 0; j <= i; ++j) {
      EXPECT_NEAR(run.grid.inner(pairs[i].phi, pairs[j].phi), i == j ? 1.0 : 0.0, 1e-8);
    }
  }
  EXPECT_NEAR(run.grid.norm(pairs[0].phi), 1.0, 1e-12);
}

TEST(Eigensolve, QuadraticEigenvalueGrowth) {
  const auto& pairs = fixture::example_run().reference;
  // lambda_i ~ -(i pi)^2 asymptotically: lambda_i / i^2 settles.
  std::vector<double> ratio;
  for (std::size_t i = 10; i <= 30; ++i) ratio.push_back(pairs[i - 1].lambda / double(i * i));
  for (std::size_t k = 1; k < ratio.size(); ++k) {
    EXPECT_LT(std::abs(ratio[k] - ratio[k - 1]), std::abs(ratio[k - 1] - (k >= 2 ? ratio[k - 2] : 0.0)) + 1e-12);
  }
  EXPECT_NEAR(ratio.back() / ratio[ratio.size() - 2], 1.0, 0.01);
  EXPECT_NEAR(ratio.back(), -pi * pi, 0.1 * pi * pi);
}

TEST(Eigensolve, RejectsTooManyEigenpairs) {
  const SpatialGrid grid(5);
  EXPECT_THROW(eigensolve_reference(assemble_operator(neumann(0.0), grid), grid, 6), InvalidArgument);
}

TEST(Simulate, ZeroDynamics) {
  const SpatialGrid grid(101);
  const auto traj = simulate(ParabolicPlant::diffusion_reaction_example(), grid,
                             {Eigen::VectorXd::Zero(101), 0.0}, zero_signal(), zero_signal(), {0.05, 1e-3, 1});
  EXPECT_EQ(traj.size(), 51u);
  for (const auto& x : traj.states) EXPECT_EQ(x.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Simulate, EigenvectorDecaysExponentially) {
  const auto& run = fixture::example_run();
  for (std::size_t k : {0u, 2u}) {
    const auto& pair = run.reference[k];
    const auto traj = simulate(run.plant, run.grid, {pair.phi, 0.0}, zero_signal(), zero_signal(),
                               {0.05, 1e-5, 5000});
    const Eigen::VectorXd exact = std::exp(pair.lambda * 0.05) * pair.phi;
    EXPECT_LT(run.grid.norm(Eigen::VectorXd(traj.back().values - exact)) / run.grid.norm(exact), 1e-4) << "k=" << k;
  }
}

TEST(Simulate, CrankNicolsonSecondOrder) {
  const SpatialGrid grid(201);
  const ParabolicPlant plant = ParabolicPlant::diffusion_reaction_example();
  const auto pair = eigensolve_reference(assemble_operator(plant, grid), grid, 3)[2];
  const Eigen::VectorXd exact = std::exp(pair.lambda * 0.1) * pair.phi;
  double previous = 0.0;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    const auto traj = simulate(plant, grid, {pair.phi, 0.0}, zero_signal(), zero_signal(), {0.1, dt, 1});
    const double err = grid.norm(Eigen::VectorXd(traj.back().values - exact));
    if (previous > 0.0) {
      EXPECT_NEAR(std::log2(previous / err), 2.0, 0.2);
    }
    previous = err;
  }
}

TEST(Simulate, PulseConcentratesNearLeftBoundary) {
  const auto& run = fixture::example_run();
  const Eigen::VectorXd& x = run.x0.values;
  EXPECT_GT(run.grid.norm(x), 0.1);
  EXPECT_DOUBLE_EQ(run.x0.t, 0.0);
  // the left end was driven: more mass on [0, 1/2) than on (1/2, 1]
  EXPECT_GT(x.head(1000).cwiseAbs().sum(), x.tail(1000).cwiseAbs().sum());
  EXPECT_GT(std::abs(x[0]), std::abs(x[2000]));
}

TEST(Simulate, InputValidation) {
  const SpatialGrid grid(11);
  const auto plant = ParabolicPlant::diffusion_reaction_example();
  const StateProfile x0{Eigen::VectorXd::Zero(11), 0.0};
  EXPECT_THROW(simulate(plant, grid, x0, zero_signal(), zero_signal(), {0.1, -1.0, 1}), InvalidArgument);
  EXPECT_THROW(simulate(plant, grid, {Eigen::VectorXd::Zero(5), 0.0}, zero_signal(), zero_signal(), {0.1, 0.01, 1}),
               InvalidArgument);
  EXPECT_THROW(step_count(0.0, 0.105, 0.01), InvalidArgument);
}

TEST(ClosedLoopSimulate, ZeroGainMatchesOpenLoop) {
  const SpatialGrid grid(201);
  const auto plant = ParabolicPlant::diffusion_reaction_example();
  const auto pairs = eigensolve_reference(assemble_operator(plant, grid), grid, 3);
  const StateProfile x0{pairs[0].phi + 0.3 * pairs[1].phi, 0.0};
  const SimulationOptions opts{0.05, 1e-3, 1};
  const auto open = simulate(plant, grid, x0, zero_signal(), zero_signal(), opts);
  const auto closed = closed_loop_simulate(plant, grid, x0, Eigen::MatrixXd::Zero(2, 3), mode_matrix(pairs, 0, 3), opts);
  ASSERT_EQ(open.size(), closed.size());
  for (std::size_t k = 0; k < open.size(); ++k) {
    EXPECT_LT((open.states[k] - closed.states[k]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ClosedLoopSimulate, TailModesLeftUnchanged) {
  const auto& run = fixture::example_run();
  const ModalModel model = modal_model_from_reference(run.reference, 3, 1.0);
  Eigen::MatrixXcd p(2, 3);
  p << 1.0, 0.5, -0.3, 0.2, 1.0, 0.7;
  const GainSynthesis synth = parametric_gain(model, run.targets, p);
  Eigen::VectorXd x = run.reference[3].phi;
  for (std::size_t i = 4; i < 11; ++i) x += 0.3 * run.reference[i].phi;
  const SimulationOptions opts{0.2, 1e-4, 10};
  const auto closed = closed_loop_simulate(run.plant, run.grid, {x, 0.0}, synth.K, model.real_modes(), opts);
  const auto open = simulate(run.plant, run.grid, {x, 0.0}, zero_signal(), zero_signal(), opts);
  for (std::size_t k = 0; k < open.size(); ++k) {
    EXPECT_LT(run.grid.norm(Eigen::VectorXd(open.states[k] - closed.states[k])), 1e-9 * run.grid.norm(x));
  }
  const DecayFit fit = decay_fit(closed, run.grid, 0.1);
  EXPECT_NEAR(fit.alpha, run.reference[3].lambda, 0.02 * std::abs(run.reference[3].lambda));
}

TEST(TrajectoryIo, RoundTripsLosslessly) {
  const SpatialGrid grid(7);
  const auto traj = simulate(ParabolicPlant::diffusion_reaction_example(), grid,
                             {Eigen::VectorXd::LinSpaced(7, 0.3, -1.1), 0.0},
                             [](double t) { return std::sin(40 * t); }, zero_signal(), {0.02, 1e-3, 2});
  const auto dir = std::filesystem::temp_directory_path() / "koopctl_traj_io";
  std::filesystem::create_directories(dir);
  write_trajectory_csv(traj, dir / "t.csv");
  write_trajectory_binary(traj, dir / "t.bin");
  for (const Trajectory& back : {read_trajectory_csv(dir / "t.csv"), read_trajectory_binary(dir / "t.bin")}) {
    ASSERT_EQ(back.size(), traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
      EXPECT_EQ(back.t[k], traj.t[k]);
      EXPECT_EQ(back.u1[k], traj.u1[k]);
      EXPECT_EQ(back.states[k], traj.states[k]);
    }
  }
  std::ofstream(dir / "bad.csv") << "t,u1,u2,x0\n0,0,0,abc\n";
  EXPECT_THROW(read_trajectory_csv(dir / "bad.csv"), InputError);
  std::ofstream(dir / "bad.bin") << "KCTRAJ0";
  EXPECT_THROW(read_trajectory_binary(dir / "bad.bin"), InputError);
  EXPECT_THROW(read_trajectory_binary(dir / "missing.bin"), InputError);
}

}  // namespace
