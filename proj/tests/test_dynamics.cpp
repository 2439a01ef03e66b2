#include "odyn/dynamics.hpp"

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

Eigen::VectorXd vec3(double a, double b, double c) {
  Eigen::VectorXd v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST_CASE("susceptibility laws at their frozen opinions") {
  CHECK(susceptibility(Scenario::positives(), Eigen::VectorXd::Ones(3))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK(susceptibility(Scenario::neutrals(), Eigen::VectorXd::Zero(3))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  const Eigen::VectorXd a =
      susceptibility(Scenario::extremists(), vec3(1.0, -1.0, 0.0));
  CHECK(a(0) == 0.0);
  CHECK(a(1) == 0.0);
  CHECK(a(2) == 1.0);

  CHECK_THROWS_AS(
      Scenario::custom("bad", [](double x) { return 1.0 + std::abs(x); }),
      std::invalid_argument);
}

TEST_CASE("vector field vanishes on equilibria") {
  const SystemMatrix sys = example2_system();
  // E v_r = 0, so any point on the span is an equilibrium for any scenario.
  const Eigen::VectorXd x = 0.5 * sys.cert.v_right;
  for (const Scenario& sc :
       {Scenario::positives(), Scenario::neutrals(), Scenario::extremists()}) {
    CHECK(vector_field(sys, sc, x).cwiseAbs().maxCoeff() <= 1e-8);
  }
  // Extremists kill the component at the faces.
  const Eigen::VectorXd f =
      vector_field(sys, Scenario::extremists(), vec3(1.0, 0.2, -0.3));
  CHECK(f(0) == 0.0);
  CHECK_THROWS_AS(
      vector_field(sys, Scenario::neutrals(), Eigen::VectorXd::Zero(2)),
      std::invalid_argument);
}

TEST_CASE("field Jacobian is exact for the neutrals law at the origin") {
  const SystemMatrix sys = example2_system();
  const Eigen::MatrixXd j =
      field_jacobian(sys, Scenario::neutrals(), Eigen::VectorXd::Zero(3));
  CHECK(j.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("field Jacobian matches central finite differences") {
  const SystemMatrix sys = example2_system();
  std::mt19937_64 rng(59);
  for (const Scenario& sc :
       {Scenario::positives(), Scenario::neutrals(), Scenario::extremists()}) {
    for (int rep = 0; rep < 50; ++rep) {
      Eigen::VectorXd x(3);
      for (int i = 0; i < 3; ++i) {
        x(i) = -0.9 + 1.8 * oracles::unit_uniform(rng);
      }
      const Eigen::MatrixXd analytic = field_jacobian(sys, sc, x);
      const Eigen::MatrixXd fd = oracles::fd_jacobian(
          [&](const Eigen::VectorXd& y) { return vector_field(sys, sc, y); },
          x);
      REQUIRE((analytic - fd).cwiseAbs().maxCoeff() <= 1e-5);
    }
  }
}

TEST_CASE("extremists Jacobian at the all-ones corner") {
  const SystemMatrix sys = example2_system();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(3);
  const Eigen::MatrixXd j = field_jacobian(sys, Scenario::extremists(), ones);
  const Eigen::VectorXd ex = sys.e.mat() * ones;
  // a(1) = 0 kills the a e_ij term; only the diagonal -2 x_i (Ex)_i remains.
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      if (r == c) {
        CHECK(j(r, c) == Approx(-2.0 * ex(r)).margin(1e-12));
      } else {
        CHECK(j(r, c) == 0.0);
      }
    }
  }
}

TEST_CASE("integration from an equilibrium stays put and converges") {
  const SystemMatrix sys = example2_system();
  IntegrateOptions opts;
  opts.t_max = 10.0;
  const Trajectory tr =
      integrate(sys, Scenario::neutrals(), Eigen::VectorXd::Zero(3), opts);
  CHECK(tr.terminated_by == Termination::kConverged);
  CHECK(tr.final_state().cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(tr.convergence.has_value());
  CHECK(tr.convergence->residual_field == 0.0);
  CHECK(tr.times.front() == 0.0);
}

TEST_CASE("interior extremists trajectories land on the Perron span") {
  const SystemMatrix sys = example2_system();
  IntegrateOptions opts;
  opts.step = 0.01;
  opts.t_max = 4000.0;
  opts.convergence_tol = 1e-9;
  std::mt19937_64 rng(61);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd x0(3);
    for (int i = 0; i < 3; ++i) {
      x0(i) = -0.999 + 1.998 * oracles::unit_uniform(rng);
    }
    const Trajectory tr = integrate(sys, Scenario::extremists(), x0, opts);
    REQUIRE(tr.terminated_by == Termination::kConverged);
    const auto [alpha, dist] = span_projection(sys.cert.v_right, tr.final_state());
    REQUIRE(dist <= 1e-4);
    REQUIRE(std::abs(alpha) < 1.0 + 1e-6);
  }
}

TEST_CASE("the pinned-face extremists run reaches the Perron vector") {
  const SystemMatrix sys = example2_system();
  IntegrateOptions opts;
  opts.step = 0.01;
  opts.t_max = 4000.0;
  opts.convergence_tol = 1e-10;
  const Trajectory tr =
      integrate(sys, Scenario::extremists(), vec3(0.2, 0.2, 1.0), opts);
  CHECK((tr.final_state() - sys.cert.v_right).cwiseAbs().maxCoeff() <= 1e-3);
  // The pinned coordinate never moves a bit.
  for (const auto& s : tr.states) CHECK(s(2) == 1.0);
}

TEST_CASE("stored states stay inside the box") {
  const SystemMatrix sys = example2_system();
  std::mt19937_64 rng(67);
  IntegrateOptions opts;
  opts.step = 0.02;
  opts.t_max = 200.0;
  for (const Scenario& sc :
       {Scenario::positives(), Scenario::neutrals(), Scenario::extremists()}) {
    for (int rep = 0; rep < 50; ++rep) {
      Eigen::VectorXd x0(3);
      for (int i = 0; i < 3; ++i) x0(i) = -1.0 + 2.0 * oracles::unit_uniform(rng);
      const Trajectory tr = integrate(sys, sc, x0, opts);
      for (const auto& s : tr.states) {
        REQUIRE(s.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("neutrals preserve the sign pattern; faces pin bit-exactly") {
  const SystemMatrix sys = example2_system();
  IntegrateOptions opts;
  opts.step = 0.02;
  opts.t_max = 500.0;
  std::mt19937_64 rng(71);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd x0(3);
    for (int i = 0; i < 3; ++i) x0(i) = -1.0 + 2.0 * oracles::unit_uniform(rng);
    const Trajectory tr = integrate(sys, Scenario::neutrals(), x0, opts);
    for (const auto& s : tr.states) {
      for (int i = 0; i < 3; ++i) {
        if (x0(i) > 0) REQUIRE(s(i) >= 0.0);
        if (x0(i) < 0) REQUIRE(s(i) <= 0.0);
        if (x0(i) == 0) REQUIRE(s(i) == 0.0);
      }
    }
  }

  // positives: x_i(0) = 1 stays exactly 1; extremists: |x_i(0)| = 1 constant.
  const Trajectory tp =
      integrate(sys, Scenario::positives(), vec3(1.0, 0.3, -0.4), opts);
  for (const auto& s : tp.states) REQUIRE(s(0) == 1.0);
  const Trajectory te =
      integrate(sys, Scenario::extremists(), vec3(-1.0, 0.3, 1.0), opts);
  for (const auto& s : te.states) {
    REQUIRE(s(0) == -1.0);
    REQUIRE(s(2) == 1.0);
  }
}

TEST_CASE("step halving moves the final state by less than 1e-6") {
  const SystemMatrix sys = example2_system();
  IntegrateOptions coarse;
  coarse.step = 0.01;
  coarse.t_max = 50.0;
  coarse.convergence_tol = 0.0;  // disable early exit for the comparison
  IntegrateOptions fine = coarse;
  fine.step = 0.005;
  for (const Scenario& sc : {Scenario::extremists(), Scenario::neutrals()}) {
    const Trajectory a = integrate(sys, sc, vec3(0.4, -0.2, 0.7), coarse);
    const Trajectory b = integrate(sys, sc, vec3(0.4, -0.2, 0.7), fine);
    CHECK((a.final_state() - b.final_state()).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("a pathological custom map drives the diverged diagnostic") {
  const SystemMatrix sys = example2_system();
  // Passes the construction probe (spike between probe points), then feeds
  // the integrator a non-finite susceptibility off-grid.
  const Scenario bad = Scenario::custom("spike", [](double x) {
    return (x > 0.10002 && x < 0.10098)
               ? std::numeric_limits<double>::infinity()
               : 0.5;
  });
  IntegrateOptions opts;
  opts.step = 0.5;
  opts.t_max = 100.0;
  const Trajectory tr = integrate(sys, bad, vec3(0.05, 0.1001, -0.2), opts);
  CHECK(tr.terminated_by == Termination::kDiverged);
  CHECK_FALSE(tr.diagnostic.empty());
}

TEST_CASE("flow Jacobian: identity at t = 0") {
  const SystemMatrix sys = example2_system();
  const Eigen::VectorXd x0 = vec3(0.3, -0.5, 0.7);
  const Eigen::MatrixXd m0 =
      flow_jacobian(sys, Scenario::neutrals(), x0, 0.0, 0.01);
  CHECK(m0.isIdentity(1e-15));
}

TEST_CASE("neutrals flow sensitivity is not sign-definite on signed graphs") {
  // With antagonistic weights the variational system has negative
  // off-diagonal generators (x_i^2 e_ij < 0 for e_ij < 0), so entries of
  // M(t) dip below zero; the short-time expansion pins the sign.
  const SystemMatrix sys = example2_system();
  const Eigen::VectorXd x0 = vec3(0.5, 0.5, 0.5);
  const Eigen::MatrixXd m =
      flow_jacobian(sys, Scenario::neutrals(), x0, 0.2, 0.01);
  // dM_13/dt at t=0 is x_1^2 e_13 = 0.25 * (-0.6743) < 0.
  CHECK(sys.e.mat()(0, 2) < 0.0);
  CHECK(m(0, 2) < 0.0);
}

TEST_CASE("flow Jacobian matches finite differences of the flow map") {
  const SystemMatrix sys = example2_system();
  const double t_end = 3.0, h = 0.01, dh = 1e-5;
  std::mt19937_64 rng(79);
  auto flow = [&](const Scenario& sc, const Eigen::VectorXd& x0) {
    IntegrateOptions opts;
    opts.step = h;
    opts.t_max = t_end;
    opts.convergence_tol = 0.0;
    return integrate(sys, sc, x0, opts).final_state();
  };
  for (const Scenario& sc : {Scenario::neutrals(), Scenario::extremists()}) {
    for (int rep = 0; rep < 3; ++rep) {
      Eigen::VectorXd x0(3);
      for (int i = 0; i < 3; ++i) {
        x0(i) = -0.8 + 1.6 * oracles::unit_uniform(rng);
      }
      const Eigen::MatrixXd m = flow_jacobian(sys, sc, x0, t_end, h);
      const Eigen::MatrixXd fd = oracles::fd_jacobian(
          [&](const Eigen::VectorXd& y) { return flow(sc, y); }, x0, dh);
      REQUIRE((m - fd).cwiseAbs().maxCoeff() <= 1e-3);
    }
  }
}
