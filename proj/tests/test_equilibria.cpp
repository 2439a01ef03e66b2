#include "odyn/equilibria.hpp"

#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "odyn/io.hpp"
#include "oracles.hpp"

using namespace odyn;
using Catch::Approx;

namespace {

SystemMatrix example2_system() {
  const SignedMatrix b =
      load_csv_matrix_file(std::string(ODYN_FIXTURES) + "/example2_B.csv");
  Eigen::VectorXd d(3);
  d << 0.2688, 1.002, 1.3272;
  const SignedMatrix c(b.mat() + Eigen::MatrixXd(d.asDiagonal()));
  return build_system_a2(b, d, spectral_radius(c));
}

Eigen::VectorXd paper_gamma() {
  Eigen::VectorXd g(3);
  g << 4.2681, 8.1972, 11.5733;
  return g;
}

Eigen::VectorXd vec3(double a, double b, double c) {
  Eigen::VectorXd v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST_CASE("index partition per scenario") {
  const IndexPartition p1 = partition_indices(
      Scenario::positives(), (Eigen::VectorXd(2) << 1.0, 0.3).finished());
  CHECK(p1.i_a0 == std::vector<int>{0});
  CHECK(p1.i_aplus == std::vector<int>{1});
  CHECK(p1.perm == std::vector<int>{0, 1});

  const IndexPartition p2 =
      partition_indices(Scenario::neutrals(), vec3(0.0, 0.0, 0.5));
  CHECK(p2.i_a0 == std::vector<int>{0, 1});

  const IndexPartition p3 =
      partition_indices(Scenario::extremists(), vec3(1.0, -1.0, 0.2));
  CHECK(p3.i_a0 == std::vector<int>{0, 1});
  CHECK(p3.perm == std::vector<int>{0, 1, 2});
}

TEST_CASE("block decomposition splits and reassembles exactly") {
  const SystemMatrix sys = example2_system();

  IndexPartition empty;
  empty.i_aplus = {0, 1, 2};
  empty.perm = {0, 1, 2};
  const BlockSystem be = block_decompose(sys.e, empty);
  CHECK(be.e22.rows() == 3);
  CHECK((be.e22 - sys.e.mat()).cwiseAbs().maxCoeff() == 0.0);

  IndexPartition all;
  all.i_a0 = {0, 1, 2};
  all.perm = {0, 1, 2};
  const BlockSystem ba = block_decompose(sys.e, all);
  CHECK(ba.e11.rows() == 3);
  CHECK((ba.e11 - sys.e.mat()).cwiseAbs().maxCoeff() == 0.0);

  // I_a0 = {3}: the free block is rows/cols 1-2 of the published E.
  const IndexPartition p =
      partition_indices(Scenario::extremists(), vec3(0.2, 0.2, 1.0));
  REQUIRE(p.i_a0 == std::vector<int>{2});
  const BlockSystem b = block_decompose(sys.e, p);
  CHECK(b.e22(0, 0) == Approx(-1.3129).margin(5e-4));
  CHECK(b.e22(0, 1) == Approx(1.7877).margin(1e-12));
  CHECK(b.e22(1, 0) == Approx(-0.7678).margin(1e-12));
  CHECK(b.e22(1, 1) == Approx(-0.5797).margin(5e-4));

  // Exact reassembly through the permutation.
  std::mt19937_64 rng(83);
  const Eigen::MatrixXd m = oracles::random_matrix(rng, 5, -2.0, 2.0);
  IndexPartition rp;
  rp.i_a0 = {1, 4};
  rp.i_aplus = {0, 2, 3};
  rp.perm = {1, 4, 0, 2, 3};
  const BlockSystem rb = block_decompose(SignedMatrix(m), rp);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) {
      const int pr = rp.perm[r], pc = rp.perm[c];
      const double got = r < 2 ? (c < 2 ? rb.e11(r, c) : rb.e12(r, c - 2))
                               : (c < 2 ? rb.e21(r - 2, c) : rb.e22(r - 2, c - 2));
      REQUIRE(got == m(pr, pc));
    }
  }
}

TEST_CASE("boundary equilibrium is the span intersection with the face") {
  const SystemMatrix sys = example2_system();
  const IndexPartition p =
      partition_indices(Scenario::extremists(), vec3(0.2, 0.2, 1.0));
  const BlockSystem b = block_decompose(sys.e, p);

  const auto be = boundary_equilibrium(b, Eigen::VectorXd::Ones(1));
  REQUIRE(be.has_value());
  CHECK(be->strictly_interior);

  // Independent 2x2 solve by Cramer's rule.
  const double det =
      b.e22(0, 0) * b.e22(1, 1) - b.e22(0, 1) * b.e22(1, 0);
  const Eigen::VectorXd rhs = -b.e21 * Eigen::VectorXd::Ones(1);
  const double y1 = (rhs(0) * b.e22(1, 1) - b.e22(0, 1) * rhs(1)) / det;
  const double y2 = (b.e22(0, 0) * rhs(1) - rhs(0) * b.e22(1, 0)) / det;
  CHECK(be->y2_star(0) == Approx(y1).margin(1e-12));
  CHECK(be->y2_star(1) == Approx(y2).margin(1e-12));

  // Geometrically: the point where span(v_r) crosses the face x3 = 1.
  CHECK(be->y2_star(0) ==
        Approx(sys.cert.v_right(0) / sys.cert.v_right(2)).margin(1e-8));
  CHECK(be->y2_star(1) ==
        Approx(sys.cert.v_right(1) / sys.cert.v_right(2)).margin(1e-8));

  // Sign symmetry of the linear system.
  const auto bn = boundary_equilibrium(b, -Eigen::VectorXd::Ones(1));
  REQUIRE(bn.has_value());
  CHECK((bn->y2_star + be->y2_star).cwiseAbs().maxCoeff() <= 1e-12);

  // E21 = 0 forces y2* = 0.
  BlockSystem zb = b;
  zb.e21.setZero();
  const auto bz = boundary_equilibrium(zb, Eigen::VectorXd::Ones(1));
  REQUIRE(bz.has_value());
  CHECK(bz->y2_star.cwiseAbs().maxCoeff() == 0.0);

  // Singular E22 is reported as absence.
  BlockSystem sb = b;
  sb.e22.setZero();
  CHECK_FALSE(boundary_equilibrium(sb, Eigen::VectorXd::Ones(1)).has_value());
}

TEST_CASE("embedded boundary equilibria are true equilibria of the field") {
  const SystemMatrix sys = example2_system();
  for (double face : {1.0, -1.0}) {
    const IndexPartition p =
        partition_indices(Scenario::extremists(), vec3(0.2, 0.2, face));
    const BlockSystem b = block_decompose(sys.e, p);
    const auto be =
        boundary_equilibrium(b, Eigen::VectorXd::Constant(1, face));
    REQUIRE(be.has_value());
    const Eigen::VectorXd x_star =
        embed_blocks(p, Eigen::VectorXd::Constant(1, face), be->y2_star);
    CHECK(vector_field(sys, Scenario::extremists(), x_star)
              .cwiseAbs()
              .maxCoeff() <= 1e-8);
  }
}

TEST_CASE("free blocks of the critical system are nonsingular") {
  // The uniqueness argument needs E22 invertible whenever the partition is
  // proper; check every proper single/double pin of the demonstration system.
  const SystemMatrix sys = example2_system();
  for (int i = 0; i < 3; ++i) {
    IndexPartition p;
    p.i_a0 = {i};
    for (int j = 0; j < 3; ++j) {
      if (j != i) p.i_aplus.push_back(j);
    }
    p.perm = p.i_a0;
    p.perm.insert(p.perm.end(), p.i_aplus.begin(), p.i_aplus.end());
    const BlockSystem b = block_decompose(sys.e, p);
    const Eigen::VectorXd sv =
        Eigen::JacobiSVD<Eigen::MatrixXd>(b.e22).singularValues();
    REQUIRE(sv(sv.size() - 1) > 1e-9);
  }
}

TEST_CASE("Lyapunov evaluators at reference points") {
  LyapunovParams p;
  p.gamma = Eigen::VectorXd::Ones(2);

  CHECK(lyapunov_value(LyapunovKind::kP1, p, Eigen::VectorXd::Zero(2)) == 0.0);
  CHECK(lyapunov_value(LyapunovKind::kX1, p, Eigen::VectorXd::Zero(2)) == 0.0);

  // P1 at (0.5, 0.5) with unit gamma: 2 (-1 - 2 ln 0.5).
  const Eigen::VectorXd half = Eigen::VectorXd::Constant(2, 0.5);
  CHECK(lyapunov_value(LyapunovKind::kP1, p, half) ==
        Approx(2.0 * (-1.0 - 2.0 * std::log(0.5))).epsilon(1e-12));
  CHECK(lyapunov_value(LyapunovKind::kP1, p, half) ==
        Approx(0.7725887222397812).epsilon(1e-9));

  CHECK_THROWS_WITH(
      lyapunov_value(LyapunovKind::kP1, p, Eigen::VectorXd::Ones(2)),
      Catch::Matchers::ContainsSubstring("component 0"));
}

TEST_CASE("monotone check on the demonstration trajectories") {
  const SystemMatrix sys = example2_system();
  LyapunovParams params;
  params.gamma = paper_gamma();

  IntegrateOptions opts;
  opts.step = 0.01;
  opts.t_max = 300.0;
  opts.record_stride = 1;

  // Equilibrium trajectory: V is constant.
  const Trajectory eq =
      integrate(sys, Scenario::positives(), 0.4 * sys.cert.v_right, opts);
  const MonotoneReport req =
      lyapunov_monotone_check(eq, LyapunovKind::kP1, params);
  CHECK(req.max_increase == 0.0);
  CHECK(req.violations == 0);

  std::mt19937_64 rng(89);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd x0(3);
    for (int i = 0; i < 3; ++i) {
      x0(i) = -1.0 + (2.0 - 1e-3) * oracles::unit_uniform(rng);
    }
    const Trajectory tp = integrate(sys, Scenario::positives(), x0, opts);
    const MonotoneReport rp =
        lyapunov_monotone_check(tp, LyapunovKind::kP1, params);
    REQUIRE(rp.violations == 0);
    REQUIRE_FALSE(rp.exit_index.has_value());

    Eigen::VectorXd xi(3);
    for (int i = 0; i < 3; ++i) xi(i) = -0.99 + 1.98 * oracles::unit_uniform(rng);
    const Trajectory te = integrate(sys, Scenario::extremists(), xi, opts);
    const MonotoneReport re =
        lyapunov_monotone_check(te, LyapunovKind::kX1, params);
    REQUIRE(re.violations == 0);
  }
}

TEST_CASE("reduced-face evaluators follow the pinned trajectory") {
  const SystemMatrix sys = example2_system();
  const Eigen::VectorXd x0 = vec3(0.3, -0.2, 1.0);
  const IndexPartition part = partition_indices(Scenario::extremists(), x0);
  const BlockSystem blocks = block_decompose(sys.e, part);
  const auto be = boundary_equilibrium(blocks, Eigen::VectorXd::Ones(1));
  REQUIRE(be.has_value());

  LyapunovParams params;
  params.gamma = paper_gamma();
  params.partition = part;
  params.y2_star = be->y2_star;

  IntegrateOptions opts;
  opts.step = 0.01;
  opts.t_max = 400.0;
  opts.record_stride = 1;
  const Trajectory tr = integrate(sys, Scenario::extremists(), x0, opts);
  const MonotoneReport rep =
      lyapunov_monotone_check(tr, LyapunovKind::kX2, params);
  CHECK(rep.violations == 0);
  CHECK(rep.evaluated == static_cast<int>(tr.states.size()));

  // P2 on a positives face run.
  const Eigen::VectorXd xp = vec3(0.3, -0.2, 1.0);
  const IndexPartition pp = partition_indices(Scenario::positives(), xp);
  const BlockSystem pb = block_decompose(sys.e, pp);
  const auto pbe = boundary_equilibrium(pb, Eigen::VectorXd::Ones(1));
  REQUIRE(pbe.has_value());
  LyapunovParams pparams;
  pparams.gamma = paper_gamma();
  pparams.partition = pp;
  pparams.y2_star = pbe->y2_star;
  const Trajectory tp = integrate(sys, Scenario::positives(), xp, opts);
  const MonotoneReport prep =
      lyapunov_monotone_check(tp, LyapunovKind::kP2, pparams);
  CHECK(prep.violations == 0);
}

TEST_CASE("N3 parameters derive the sign split from x(0)") {
  const Eigen::VectorXd x0 = vec3(0.4, 0.0, -0.7);
  const LyapunovParams p = make_n3_params(Eigen::VectorXd::Ones(3), x0);
  CHECK(p.sign_pattern(0) == 1.0);
  CHECK(p.sign_pattern(1) == 0.0);
  CHECK(p.sign_pattern(2) == -1.0);
  // Nonnegative-started coordinates use ln(x+1), negative ones ln(eps - x).
  const double v = lyapunov_value(LyapunovKind::kN3, p, x0);
  const double expect = 2.0 * std::log(1.4) + 2.0 * std::log(1.0) +
                        2.0 * std::log(p.epsilon + 0.7);
  CHECK(v == Approx(expect).epsilon(1e-12));
}
