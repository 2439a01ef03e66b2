#include "odyn/verify.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "odyn/io.hpp"
#include "odyn/reproduce.hpp"
#include "oracles.hpp"

using namespace odyn;
using Catch::Approx;

namespace {

SystemMatrix example2_system(bool critical = true) {
  const SignedMatrix b =
      load_csv_matrix_file(std::string(ODYN_FIXTURES) + "/example2_B.csv");
  Eigen::VectorXd d(3);
  d << 0.2688, 1.002, 1.3272;
  const SignedMatrix c(b.mat() + Eigen::MatrixXd(d.asDiagonal()));
  const double rho = spectral_radius(c);
  return build_system_a2(b, d, critical ? rho : rho + 0.5);
}

StabilityCertificate example2_gamma(const SystemMatrix& sys) {
  Eigen::VectorXd g(3);
  g << 4.2681, 8.1972, 11.5733;
  return check_gamma(sys.e, g);
}

Eigen::VectorXd vec3(double a, double b, double c) {
  Eigen::VectorXd v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST_CASE("predict dispatches the theorem clauses") {
  const SystemMatrix sys = example2_system();
  const StabilityCertificate gamma = example2_gamma(sys);
  REQUIRE(gamma.valid);

  const auto t2 = predict(sys, Scenario::neutrals(), vec3(0.2, 0.5, 0.9), gamma);
  CHECK(t2.id == TheoremId::kT2Pos);
  CHECK(t2.limit.kind == LimitKind::kSpanOfVr);
  CHECK(t2.limit.alpha_lo == 0.0);
  CHECK(t2.limit.alpha_hi == 1.0);
  CHECK_FALSE(t2.limit.lo_closed);
  CHECK(t2.limit.hi_closed);

  const auto t2n = predict(sys, Scenario::neutrals(), vec3(-0.2, -0.5, -0.9), gamma);
  CHECK(t2n.id == TheoremId::kT2Neg);
  const auto t2m = predict(sys, Scenario::neutrals(), vec3(0.2, -0.5, 0.9), gamma);
  CHECK(t2m.id == TheoremId::kT2Mixed);
  CHECK(t2m.limit.kind == LimitKind::kZero);

  // x3 pinned at the face that carries the Perron maximum.
  const auto t33 = predict(sys, Scenario::extremists(), vec3(0.1, 0.1, 1.0), gamma);
  CHECK(t33.id == TheoremId::kT3_3);
  CHECK(t33.limit.kind == LimitKind::kBetaVr);
  CHECK((t33.limit.point - sys.cert.v_right).cwiseAbs().maxCoeff() == 0.0);
  CHECK(t33.j_set == std::vector<int>{2});

  const auto t34 = predict(sys, Scenario::extremists(), vec3(0.1, 0.1, -1.0), gamma);
  CHECK(t34.id == TheoremId::kT3_4);

  // Mixed pinned extremes on agents 1 and 2: the reduced equilibrium leaves
  // the open box, so no clause applies.
  const auto unsup = predict(sys, Scenario::extremists(), vec3(1.0, -1.0, 0.0), gamma);
  CHECK(unsup.id == TheoremId::kUnsupported);

  const auto t11 = predict(sys, Scenario::positives(), vec3(0.3, -0.2, 0.9), gamma);
  CHECK(t11.id == TheoremId::kT1_1);
  CHECK(t11.limit.alpha_lo == -1.0);
  CHECK(t11.limit.lo_closed);
  CHECK_FALSE(t11.limit.hi_closed);

  const auto t13 = predict(sys, Scenario::positives(), vec3(0.3, -0.2, 1.0), gamma);
  CHECK(t13.id == TheoremId::kT1_3);

  const auto t31 = predict(sys, Scenario::extremists(), vec3(0.3, -0.2, 0.9), gamma);
  CHECK(t31.id == TheoremId::kT3_1);
  CHECK_FALSE(t31.limit.lo_closed);
  CHECK_FALSE(t31.limit.hi_closed);
}

TEST_CASE("predict in the strict regime and the error paths") {
  const SystemMatrix strict = example2_system(/*critical=*/false);
  const auto gs = search_gamma(strict.e);
  REQUIRE(gs.has_value());
  const auto t2s = predict(strict, Scenario::neutrals(), vec3(0.2, 0.5, 0.9), *gs);
  CHECK(t2s.id == TheoremId::kT2Strict);
  CHECK(t2s.limit.kind == LimitKind::kZero);

  const SystemMatrix sys = example2_system();
  StabilityCertificate invalid = example2_gamma(sys);
  invalid.valid = false;
  CHECK_THROWS_AS(predict(sys, Scenario::neutrals(), vec3(0.2, 0.5, 0.9), invalid),
                  std::invalid_argument);
}

TEST_CASE("pinned T1.2 point prediction on a strict system") {
  // In the strict regime a pinned positives face has a unique reduced
  // equilibrium; verify the embedded point is predicted and reached.
  const SystemMatrix strict = example2_system(false);
  const auto gs = search_gamma(strict.e);
  REQUIRE(gs.has_value());
  const Eigen::VectorXd x0 = vec3(0.2, 0.2, 1.0);
  const auto pred = predict(strict, Scenario::positives(), x0, *gs);
  if (pred.id == TheoremId::kT1_2) {
    IntegrateOptions opts;
    opts.step = 0.01;
    opts.t_max = 4000.0;
    opts.convergence_tol = 1e-11;
    const Trajectory tr = integrate(strict, Scenario::positives(), x0, opts);
    CHECK((tr.final_state() - pred.limit.point).cwiseAbs().maxCoeff() <= 1e-5);
  } else {
    CHECK(pred.id == TheoremId::kUnsupported);
  }
}

TEST_CASE("verify_theorem confirms the interior extremists clause") {
  const SystemMatrix sys = example2_system();
  const StabilityCertificate gamma = example2_gamma(sys);
  const auto pred = predict(sys, Scenario::extremists(), vec3(0.1, 0.1, 0.1), gamma);
  REQUIRE(pred.id == TheoremId::kT3_1);

  VerifyOptions opts;
  opts.samples = 12;
  opts.seed = 99;
  opts.tol = 1e-4;
  opts.integrate.step = 0.02;
  opts.integrate.t_max = 20000.0;
  opts.integrate.convergence_tol = 1e-8;
  const VerificationReport rep = verify_theorem(pred, sys, Scenario::extremists(), opts);
  CHECK(rep.passed == 12);
  CHECK(rep.failed == 0);
  CHECK(rep.worst_distance <= 1e-4);
  for (const auto& s : rep.samples) {
    CHECK(std::abs(s.alpha) < 1.0 + 1e-6);
    // Unanimity: the limit lies in a single orthant up to 1e-6.
    CHECK(((s.x_final.array() >= -1e-6).all() ||
           (s.x_final.array() <= 1e-6).all()));
  }
}

TEST_CASE("verify_theorem is deterministic across thread counts") {
  const SystemMatrix sys = example2_system();
  const StabilityCertificate gamma = example2_gamma(sys);
  const auto pred = predict(sys, Scenario::extremists(), vec3(0.1, 0.1, 0.1), gamma);

  VerifyOptions opts;
  opts.samples = 8;
  opts.seed = 7;
  opts.integrate.step = 0.02;
  opts.integrate.t_max = 10000.0;
  opts.threads = 1;
  const VerificationReport a = verify_theorem(pred, sys, Scenario::extremists(), opts);
  opts.threads = 2;
  const VerificationReport b = verify_theorem(pred, sys, Scenario::extremists(), opts);
  REQUIRE(a.samples.size() == b.samples.size());
  CHECK(to_json(a).dump() == to_json(b).dump());

  VerifyOptions empty = opts;
  empty.samples = 0;
  const VerificationReport e = verify_theorem(pred, sys, Scenario::extremists(), empty);
  CHECK(e.samples.empty());
  CHECK(e.all_passed());

  CHECK_THROWS_AS(
      verify_theorem(predict(sys, Scenario::extremists(), vec3(1.0, -1.0, 0.0), gamma),
                     sys, Scenario::extremists(), opts),
      std::invalid_argument);
}

TEST_CASE("reproduce: example 2 panels classify as published") {
  const ReproduceResult res = run_reproduce(2, ODYN_FIXTURES);
  REQUIRE(res.panels.size() == 9);
  CHECK(res.sys.regime == Regime::kCriticalA2);

  CHECK(res.panel("fig7a").classification == TheoremId::kT1_1);
  CHECK(res.panel("fig8a").classification == TheoremId::kT2Pos);
  CHECK(res.panel("fig8b").classification == TheoremId::kT2Neg);
  CHECK(res.panel("fig8c").classification == TheoremId::kT2Mixed);
  CHECK(res.panel("fig9b").classification == TheoremId::kT3_3);
  CHECK(res.panel("fig9c").classification == TheoremId::kT3_4);
  CHECK(res.panel("fig9d").classification == TheoremId::kUnsupported);
  for (const auto& p : res.panels) {
    CHECK(p.classified_pass);
    CHECK(p.pinned_constant);
  }
  // Fig. 9(b): the pinned-face run lands on the Perron vector.
  CHECK((res.panel("fig9b").traj.final_state() - res.sys.cert.v_right)
            .cwiseAbs()
            .maxCoeff() <= 1e-3);
  // Mixed-sign neutrals decay to the origin.
  CHECK(res.panel("fig8c").traj.final_state().cwiseAbs().maxCoeff() <= 1e-3);

  // Determinism: the same seed reproduces the identical summary.
  const ReproduceResult res2 = run_reproduce(2, ODYN_FIXTURES);
  CHECK(to_json(res).dump() == to_json(res2).dump());
}
