#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "flexform/errors.hpp"
#include "flexform/integrate.hpp"
#include "flexform/stability.hpp"
#include "support.hpp"

namespace flexform {
namespace {

using testing::graph_of;
using testing::stack;

const Eigen::VectorXd kUnitSquare = stack({{0, 0}, {1, 0}, {1, 1}, {0, 1}});

std::vector<double> sorted_real_parts(const StabilityReport& report) {
  std::vector<double> out;
  for (const auto& l : report.eigenvalues) out.push_back(l.real());
  std::sort(out.begin(), out.end());
  return out;
}

FormationSystem square_four_edges(double sign) {
  DisturbanceSet dist(4);
  dist.add_tail(0, Eigen::Matrix2d::Identity())
      .add_tail(2, Eigen::Matrix2d::Identity())
      .add_head(1, -sign * perp_matrix())
      .add_head(3, -sign * perp_matrix());
  return FormationSystem(testing::cycle(4), DistanceSpec{10.0, 10.0, 10.0, 10.0}, dist);
}

const Eigen::VectorXd kSquareTen = stack({{0, 0}, {-10, 0}, {-10, 10}, {0, 10}});

TEST(AugmentedError, ZeroAtReference) {
  const FormationGraph g = testing::cycle(5);
  const Eigen::VectorXd p = testing::regular_polygon(5, 2.0);
  const VirtualAugmentation aug = augment_to_rigid(g, p);
  const AugmentedError ae = augmented_error(g, aug, testing::realized_distances(g, p), p);
  EXPECT_EQ(ae.stacked().size(), 2 * 5 - 3);
  EXPECT_LT(ae.stacked().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AugmentedError, ScaledSquare) {
  const FormationGraph g = testing::cycle(4);
  const VirtualAugmentation aug = augment_to_rigid(g, kUnitSquare);
  const AugmentedError ae = augmented_error(g, aug, DistanceSpec{1.0, 1.0, 1.0, 1.0}, 2.0 * kUnitSquare);
  EXPECT_LT((ae.real - Eigen::VectorXd::Constant(4, 3.0)).norm(), 1e-14);
  ASSERT_EQ(ae.virtual_part.size(), 1);
  EXPECT_NEAR(ae.virtual_part[0], 3.0 * 2.0, 1e-14);
}

TEST(AugmentedError, DimensionMismatch) {
  VirtualAugmentation aug{{{0, 2}}, Eigen::VectorXd(0)};
  EXPECT_THROW(augmented_error(testing::cycle(4), aug, DistanceSpec{1.0, 1.0, 1.0, 1.0}, kUnitSquare), Error);
}

TEST(AugmentedErrorRate, VanishesOnDesiredAmbitWithoutDisturbance) {
  const FormationGraph g = testing::cycle(4);
  const VirtualAugmentation aug = augment_to_rigid(g, kUnitSquare);
  const FormationSystem sys(g, DistanceSpec{1.0, 1.0, 1.0, 1.0});
  // A rhombus is another point of the ambit: e = 0 but the diagonal differs.
  const double a = 0.3;
  const Eigen::VectorXd rhombus = stack({{0, 0}, {1, 0}, {1 + std::sin(a), std::cos(a)}, {std::sin(a), std::cos(a)}});
  EXPECT_LT(augmented_error_rate(sys, aug, rhombus).norm(), 1e-14);
}

TEST(AugmentedErrorRate, MismatchMovesVirtualErrorAtZeroRealError) {
  const FormationGraph g = testing::cycle(4);
  const VirtualAugmentation aug = augment_to_rigid(g, kUnitSquare);
  DisturbanceSet dist(4);
  dist.add_scalar_mismatch(0, 0.1);
  const FormationSystem sys(g, DistanceSpec{1.0, 1.0, 1.0, 1.0}, dist);
  const Eigen::VectorXd rate = augmented_error_rate(sys, aug, kUnitSquare);
  EXPECT_GT(std::abs(rate[4]), 1e-3);
}

TEST(AugmentedErrorRate, MatchesFiniteDifferencesAlongFlows) {
  std::mt19937_64 rng(67);
  const FormationGraph g = testing::cycle(5);
  const Eigen::VectorXd ref = testing::regular_polygon(5);
  const VirtualAugmentation aug = augment_to_rigid(g, ref);
  DisturbanceSet dist(5);
  dist.add_scalar_mismatch(1, 0.2).add_rotor(3, 0.5);
  for (const DisturbanceSet& d : {DisturbanceSet(5), dist}) {
    const FormationSystem sys(g, testing::realized_distances(g, ref), d);
    IntegrationParams params;
    params.dt = 1e-4;
    params.t_final = 0.02;
    params.record_stride = 1;
    for (int trial = 0; trial < 5; ++trial) {
      const Trajectory traj = simulate(sys, ref + 0.1 * testing::random_configuration(5, rng), params, &aug);
      for (std::size_t s = 50; s + 1 < traj.size(); s += 70) {
        Eigen::VectorXd before(7);
        Eigen::VectorXd after(7);
        before << traj.errors[s - 1], traj.virtual_errors[s - 1];
        after << traj.errors[s + 1], traj.virtual_errors[s + 1];
        const Eigen::VectorXd fd = (after - before) / (2.0 * params.dt);
        EXPECT_LT(testing::relative_error(fd, augmented_error_rate(sys, aug, traj.states[s])), 1e-5);
      }
    }
  }
}

TEST(FindErrorEquilibrium, UndisturbedReferenceIsItsOwnEquilibrium) {
  const FormationGraph g = testing::cycle(4);
  const VirtualAugmentation aug = augment_to_rigid(g, kUnitSquare);
  const Equilibrium eq = find_error_equilibrium(FormationSystem(g, DistanceSpec{1.0, 1.0, 1.0, 1.0}), aug, kUnitSquare);
  EXPECT_EQ(eq.positions, kUnitSquare);
  EXPECT_EQ(eq.refine_iterations, 0);
}

TEST(FindErrorEquilibrium, FourEdgeSquareDesign) {
  const FormationSystem sys = square_four_edges(1.0);
  const VirtualAugmentation aug = augment_to_rigid(sys.graph, kSquareTen);
  std::mt19937_64 rng(71);
  const Eigen::VectorXd start = kSquareTen + 0.5 * testing::random_configuration(4, rng);
  const Equilibrium eq = find_error_equilibrium(sys, aug, start);
  const Eigen::VectorXd z = relative_positions(sys.graph, eq.positions);
  EXPECT_LT(edge_errors(z, sys.distances).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((Eigen::Vector2d(z.segment<2>(0)) - perp(z.segment<2>(6))).norm(), 1e-6);
  EXPECT_LT((Eigen::Vector2d(z.segment<2>(4)) - perp(z.segment<2>(2))).norm(), 1e-6);
}

TEST(FindErrorEquilibrium, SmallMismatchMovesEquilibriumByOrderMu) {
  // Rigid triangle: a mismatch only moves the rest point (flexible graphs drift).
  const FormationGraph g = testing::cycle(3);
  const Eigen::VectorXd ref = stack({{0, 0}, {1, 0}, {0.3, 0.9}});
  const DistanceSpec d = testing::realized_distances(g, ref);
  const VirtualAugmentation aug = augment_to_rigid(g, ref);
  for (double mu : {1e-2, 1e-3}) {
    DisturbanceSet dist(3);
    dist.add_scalar_mismatch(0, mu);
    const Equilibrium eq = find_error_equilibrium(FormationSystem(g, d, dist), aug, ref);
    EXPECT_LT(eq.residual, 1e-10);
    const double err = augmented_error(g, aug, d, eq.positions).stacked().norm();
    EXPECT_LT(err, 10.0 * mu);
    EXPECT_GT(err, 0.0);
  }
}

TEST(FindErrorEquilibrium, RequiresCompleteAugmentation) {
  const FormationGraph g = testing::cycle(4);
  try {
    find_error_equilibrium(FormationSystem(g, DistanceSpec{1.0, 1.0, 1.0, 1.0}), VirtualAugmentation{{}, {}},
                           kUnitSquare);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Precondition);
  }
}

TEST(AugmentedJacobian, BlockStructureWithoutDisturbance) {
  std::mt19937_64 rng(73);
  for (const FormationGraph& g : {testing::cycle(4), testing::cycle(5), testing::path(4), testing::cycle(6)}) {
    for (int trial = 0; trial < 3; ++trial) {
      const Eigen::VectorXd p = testing::random_configuration(g.agent_count(), rng, 2.0);
      const VirtualAugmentation aug = augment_to_rigid(g, p);
      const Eigen::MatrixXd j = augmented_jacobian(FormationSystem(g, testing::realized_distances(g, p)), aug, p);
      const double scale = j.norm();
      EXPECT_LT(j.rightCols(aug.size()).colwise().norm().maxCoeff() / scale, 1e-7);
      const StabilityReport report = eigen_analysis(j, kDefaultZeroTolerance, g.edge_count());
      EXPECT_EQ(report.zero_count, aug.size());
      ASSERT_TRUE(report.block_structure_ok.has_value());
      EXPECT_TRUE(*report.block_structure_ok);
      // Nonzero eigenvalues are those of -2 R R^T on the real edges.
      const Eigen::MatrixXd r = rigidity_matrix(g, relative_positions(g, p));
      Eigen::VectorXd q = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(-2.0 * r * r.transpose()).eigenvalues();
      std::vector<double> expected(q.data(), q.data() + q.size());
      std::vector<double> actual = sorted_real_parts(report);
      actual.resize(expected.size());
      for (std::size_t i = 0; i < expected.size(); ++i) {
        EXPECT_NEAR(actual[i], expected[i], 1e-6 * std::abs(expected[i]));
      }
    }
  }
}

TEST(AugmentedJacobian, TriangleIsMinusQ) {
  const FormationGraph g = graph_of(3, {{1, 2}, {2, 3}, {3, 1}});
  const Eigen::VectorXd p = stack({{0, 0}, {1, 0}, {0, 1}});
  const Eigen::MatrixXd j =
      augmented_jacobian(FormationSystem(g, DistanceSpec{1.0, std::numbers::sqrt2, 1.0}), VirtualAugmentation{}, p);
  const StabilityReport report = eigen_analysis(j);
  const std::vector<double> re = sorted_real_parts(report);
  ASSERT_EQ(re.size(), 3u);
  // Independent oracle: eigenvalues of -2 R R^T are -(6 +- 2 sqrt 3) and -4.
  EXPECT_NEAR(re[0], -(6.0 + 2.0 * std::sqrt(3.0)), 1e-6);
  EXPECT_NEAR(re[1], -4.0, 1e-6);
  EXPECT_NEAR(re[2], -(6.0 - 2.0 * std::sqrt(3.0)), 1e-6);
  for (const auto& l : report.eigenvalues) EXPECT_NEAR(l.imag(), 0.0, 1e-9);
  EXPECT_EQ(report.verdict, Verdict::AsymptoticallyStable);
}

TEST(AugmentedJacobian, FourCycleHasOneZeroMode) {
  const FormationGraph g = testing::cycle(4);
  const VirtualAugmentation aug = augment_to_rigid(g, kUnitSquare);
  const StabilityAnalysis a = analyze_stability(FormationSystem(g, DistanceSpec{1.0, 1.0, 1.0, 1.0}), aug, kUnitSquare);
  const std::vector<double> re = sorted_real_parts(a.report);
  ASSERT_EQ(re.size(), 5u);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(re[static_cast<std::size_t>(i)], -4.0, 1e-6);
  EXPECT_NEAR(re[4], 0.0, 1e-7);
  EXPECT_EQ(a.report.zero_count, 1);
  EXPECT_EQ(a.report.unstable_count, 0);
  EXPECT_EQ(a.report.verdict, Verdict::MarginalWithZeroModes);
}

TEST(AugmentedJacobian, RankLossIsNonGeneric) {
  const FormationGraph g = testing::path(3);
  const VirtualAugmentation aug{{{0, 2}}, Eigen::VectorXd::Constant(1, 2.0)};
  try {
    augmented_jacobian(FormationSystem(g, DistanceSpec{1.0, 1.0}), aug, stack({{0, 0}, {1, 0}, {2, 0}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonGenericEquilibrium);
  }
}

TEST(EigenAnalysis, DiagonalExamples) {
  const StabilityReport marginal = eigen_analysis(Eigen::Vector3d(-1, -2, 0).asDiagonal().toDenseMatrix());
  EXPECT_EQ(marginal.zero_count, 1);
  EXPECT_EQ(marginal.unstable_count, 0);
  EXPECT_EQ(marginal.verdict, Verdict::MarginalWithZeroModes);
  EXPECT_EQ(marginal.max_real_part, 0.0);

  const Eigen::Matrix2d skew = (Eigen::Matrix2d() << 0, -1, 1, 0).finished();
  const StabilityReport stable = eigen_analysis(0.0 * skew - Eigen::Matrix2d::Identity());
  EXPECT_EQ(stable.verdict, Verdict::AsymptoticallyStable);
  EXPECT_EQ(stable.zero_count, 0);

  const StabilityReport unstable = eigen_analysis(Eigen::Vector2d(-3, 0.5).asDiagonal().toDenseMatrix());
  EXPECT_EQ(unstable.verdict, Verdict::Unstable);
  EXPECT_EQ(unstable.unstable_count, 1);
  EXPECT_DOUBLE_EQ(unstable.max_real_part, 0.5);
  EXPECT_DOUBLE_EQ(unstable.eigenvalues.front().real(), 0.5);
}

TEST(EigenAnalysis, ComplexPairsAndOrdering) {
  Eigen::Matrix3d j = Eigen::Matrix3d::Zero();
  j.topLeftCorner<2, 2>() << -1, -2, 2, -1;
  j(2, 2) = -5;
  const StabilityReport r = eigen_analysis(j);
  ASSERT_EQ(r.eigenvalues.size(), 3u);
  EXPECT_NEAR(r.eigenvalues[0].real(), -1.0, 1e-12);
  EXPECT_NEAR(r.eigenvalues[0].imag(), 2.0, 1e-12);
  EXPECT_NEAR(r.eigenvalues[1].imag(), -2.0, 1e-12);
  EXPECT_NEAR(r.eigenvalues[2].real(), -5.0, 1e-12);
}

TEST(EigenAnalysis, ToleranceIsRelativeToLargestSingularValue) {
  const Eigen::MatrixXd j = Eigen::Vector2d(-1e6, -1e-2).asDiagonal();
  EXPECT_EQ(eigen_analysis(j).zero_count, 1);
  EXPECT_EQ(eigen_analysis(j, 1e-9).zero_count, 0);
  EXPECT_THROW(eigen_analysis(Eigen::MatrixXd::Zero(2, 3)), Error);
}

TEST(SquareDesign, StableWithVirtualDiagonalAndFrozenSpectrum) {
  const FormationSystem sys = square_four_edges(1.0);
  const VirtualAugmentation aug = augment_to_rigid(sys.graph, kSquareTen);
  ASSERT_EQ(aug.size(), 1);
  EXPECT_EQ(aug.edges[0], (Edge{0, 2}));
  EXPECT_NEAR(aug.distances[0], 10.0 * std::numbers::sqrt2, 1e-12);
  const StabilityAnalysis a = analyze_stability(sys, aug, kSquareTen);
  EXPECT_EQ(a.report.verdict, Verdict::AsymptoticallyStable);
  // Independent finite-difference oracle on the agent-wise equations.
  const std::vector<std::complex<double>> expected{
      {-1.002500016261663, 0.0}, {-400.0000000249412, 0.0}, {-400.99750000865413, 0.0},
      {-401.0000000248882, 1.0000000000442384}, {-401.0000000248882, -1.0000000000442384}};
  ASSERT_EQ(a.report.eigenvalues.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_LT(std::abs(a.report.eigenvalues[i] - expected[i]), 1e-5 * std::abs(expected[i]) + 1e-6) << i;
  }
}

TEST(SquareDesign, LiteralSignsAreUnstableAtTheSquare) {
  DisturbanceSet literal(4);
  literal.add_tail(0, -Eigen::Matrix2d::Identity())
      .add_tail(2, -Eigen::Matrix2d::Identity())
      .add_head(1, perp_matrix())
      .add_head(3, perp_matrix());
  const FormationSystem sys(testing::cycle(4), DistanceSpec{10.0, 10.0, 10.0, 10.0}, literal);
  // perp() turns clockwise, so the literal equations rest on this square.
  const Eigen::VectorXd square = kSquareTen;
  const VirtualAugmentation aug = augment_to_rigid(sys.graph, square);
  EXPECT_LT(augmented_error_rate(sys, aug, square).norm(), 1e-12);
  const StabilityReport r = eigen_analysis(augmented_jacobian(sys, aug, square));
  EXPECT_EQ(r.verdict, Verdict::Unstable);
  EXPECT_NEAR(r.max_real_part, 0.9974999838009992, 1e-5);
}

TEST(ChainMismatch, SlowEigenvalueMatchesCenterManifoldReduction) {
  // d = (1, 3), mismatch mu on the tail of edge 1. The reduced drift predicts a
  // perturbed equilibrium at cos(angle) = -2/3 with slow eigenvalue -(5/32) mu.
  const FormationGraph g = testing::path(3);
  const DistanceSpec d{1.0, 3.0};
  const double c = -2.0 / 3.0;
  const Eigen::Vector2d z2 = 3.0 * Eigen::Vector2d(c, std::sqrt(1.0 - c * c));
  const Eigen::VectorXd ref = stack({{1, 0}, {0, 0}, {-z2.x(), -z2.y()}});
  const VirtualAugmentation aug = augment_to_rigid(g, ref);
  for (double mu : {-1e-3, -1e-4, 1e-4}) {
    DisturbanceSet dist(2);
    dist.add_scalar_mismatch(0, mu);
    const StabilityAnalysis a = analyze_stability(FormationSystem(g, d, dist), aug, ref);
    const double predicted = -5.0 / 32.0 * mu;
    EXPECT_NEAR(a.report.max_real_part, predicted, 1e-2 * std::abs(predicted)) << "mu = " << mu;
    EXPECT_EQ(a.report.verdict, mu < 0 ? Verdict::Unstable : Verdict::AsymptoticallyStable);
  }
}

TEST(CertifyZeroModes, FourCycle) {
  const ZeroModeCertificate cert = certify_zero_modes(testing::cycle(4), DistanceSpec{1.0, 1.0, 1.0, 1.0}, kUnitSquare);
  EXPECT_TRUE(cert.pass);
  ASSERT_EQ(cert.entries.size(), 2u);  // both diagonals
  for (const CertificateEntry& e : cert.entries) {
    EXPECT_EQ(e.report.zero_count, 1);
    EXPECT_TRUE(e.exact);
  }
}

TEST(CertifyZeroModes, PentagonAndPath) {
  const Eigen::VectorXd pentagon = testing::regular_polygon(5);
  const ZeroModeCertificate five =
      certify_zero_modes(testing::cycle(5), testing::realized_distances(testing::cycle(5), pentagon), pentagon);
  EXPECT_TRUE(five.pass);
  EXPECT_GE(five.entries.size(), 5u);
  for (const CertificateEntry& e : five.entries) EXPECT_EQ(e.report.zero_count, 2);

  const Eigen::VectorXd zigzag = stack({{0, 0}, {1, 0.3}, {1.6, -0.5}, {2.8, 0.1}});
  const ZeroModeCertificate path =
      certify_zero_modes(testing::path(4), testing::realized_distances(testing::path(4), zigzag), zigzag);
  EXPECT_TRUE(path.pass);
  // Only three rank-completing pairs exist among the three non-edges.
  EXPECT_EQ(path.entries.size(), 3u);
  for (const CertificateEntry& e : path.entries) EXPECT_EQ(e.report.zero_count, 2);
}

TEST(CertifyZeroModes, RigidGraphIsOutOfScope) {
  try {
    certify_zero_modes(graph_of(3, {{1, 2}, {2, 3}, {3, 1}}), DistanceSpec{1.0, std::numbers::sqrt2, 1.0},
                       stack({{0, 0}, {1, 0}, {0, 1}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Precondition);
  }
}

}  // namespace
}  // namespace flexform
