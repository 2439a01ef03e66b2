#ifndef ODYN_VERIFY_HPP
#define ODYN_VERIFY_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "odyn/dynamics.hpp"
#include "odyn/equilibria.hpp"
#include "odyn/stability.hpp"

namespace odyn {

enum class TheoremId {
  kT1_1, kT1_2, kT1_3,
  kT2Pos, kT2Neg, kT2Mixed, kT2Strict,
  kT3_1, kT3_2, kT3_3, kT3_4,
  kUnsupported,
};

inline const char* to_string(TheoremId id) {
  switch (id) {
    case TheoremId::kT1_1: return "T1.1";
    case TheoremId::kT1_2: return "T1.2";
    case TheoremId::kT1_3: return "T1.3";
    case TheoremId::kT2Pos: return "T2.pos";
    case TheoremId::kT2Neg: return "T2.neg";
    case TheoremId::kT2Mixed: return "T2.mixed";
    case TheoremId::kT2Strict: return "T2.strict";
    case TheoremId::kT3_1: return "T3.1";
    case TheoremId::kT3_2: return "T3.2";
    case TheoremId::kT3_3: return "T3.3";
    case TheoremId::kT3_4: return "T3.4";
    case TheoremId::kUnsupported: return "unsupported";
  }
  return "?";
}

enum class LimitKind { kSpanOfVr, kPoint, kZero, kBetaVr };

inline const char* to_string(LimitKind k) {
  switch (k) {
    case LimitKind::kSpanOfVr: return "span_of_vr";
    case LimitKind::kPoint: return "point";
    case LimitKind::kZero: return "zero";
    case LimitKind::kBetaVr: return "beta_vr";
  }
  return "?";
}

/// Expected limit set. For kSpanOfVr the alpha interval is expressed in the
/// infinity-normalized Perron vector, so beta = 1/||v_r||_inf = 1. Point and
/// BetaVr carry the explicit target state.
struct LimitSpec {
  LimitKind kind = LimitKind::kZero;
  double alpha_lo = 0.0;
  double alpha_hi = 0.0;
  bool lo_closed = false;
  bool hi_closed = false;
  Eigen::VectorXd point;
  int beta_sign = 0;
};

/// Initial-condition region: coordinates in `pinned` are held at exact face
/// values, the rest are sampled uniformly from [free_lo, free_hi] subject to
/// the sign constraint.
struct RegionSpec {
  enum class Sign { kNone, kAllPositive, kAllNegative, kMixed };
  std::vector<std::pair<int, double>> pinned;
  double free_lo = -1.0;
  double free_hi = 1.0;
  Sign sign = Sign::kNone;
  std::string description;
};

struct TheoremPrediction {
  TheoremId id = TheoremId::kUnsupported;
  bool corollary = false;  // undirected graph, Corollary 1-3 variant
  LimitSpec limit;
  RegionSpec region;
  std::vector<int> j_set;  // argmax set of v_r where relevant

  bool supported() const { return id != TheoremId::kUnsupported; }
};

namespace detail {

inline std::vector<int> argmax_set(const Eigen::VectorXd& v, double tie_tol) {
  std::vector<int> j;
  const double m = v.maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v(i) >= m - tie_tol * std::max(1.0, std::abs(m))) {
      j.push_back(static_cast<int>(i));
    }
  }
  return j;
}

inline bool is_symmetric(const Eigen::MatrixXd& m, double tol = 1e-12) {
  return (m - m.transpose()).cwiseAbs().maxCoeff() <=
         tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

}  // namespace detail

/// Selects the applicable theorem clause for (scenario, regime, x0 region)
/// and spells out the predicted limit set together with the admissible
/// initial-condition sampler. Requires a valid diagonal-stability
/// certificate; returns an Unsupported prediction when no clause covers the
/// configuration (e.g. mixed pinned faces whose reduced equilibrium leaves
/// the open box).
inline TheoremPrediction predict(const SystemMatrix& sys, const Scenario& sc,
                                 const Eigen::VectorXd& x0,
                                 const StabilityCertificate& stability,
                                 double tie_tol = 1e-9, double eps = 1e-3) {
  if (x0.size() != sys.n()) {
    throw std::invalid_argument("predict: x0 dimension mismatch");
  }
  if (!stability.valid) {
    throw std::invalid_argument(
        "predict: diagonal stability certificate is not valid");
  }
  if (sys.cert.v_right.size() != sys.n()) {
    throw std::invalid_argument("predict: system lacks a Perron vector");
  }
  detail::require_in_box(x0, "predict");

  const Eigen::VectorXd& vr = sys.cert.v_right;  // ||v_r||_inf = 1
  const bool critical = sys.critical();
  TheoremPrediction pred;
  pred.corollary = detail::is_symmetric(sys.b.mat());
  pred.j_set = detail::argmax_set(vr, tie_tol);
  const bool vr_not_ones =
      static_cast<Eigen::Index>(pred.j_set.size()) < sys.n();

  // Exact face detection: the harness pins coordinates to bit-exact values.
  std::vector<int> pinned;
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    for (double z : sc.pinned_values()) {
      if (x0(i) == z) {
        pinned.push_back(static_cast<int>(i));
        break;
      }
    }
  }

  auto span_limit = [&](double lo, double hi, bool loc, bool hic) {
    pred.limit.kind = LimitKind::kSpanOfVr;
    pred.limit.alpha_lo = lo;
    pred.limit.alpha_hi = hi;
    pred.limit.lo_closed = loc;
    pred.limit.hi_closed = hic;
  };
  auto zero_limit = [&] {
    pred.limit.kind = LimitKind::kZero;
    pred.limit.point = Eigen::VectorXd::Zero(sys.n());
  };
  auto beta_limit = [&](int sign) {
    pred.limit.kind = LimitKind::kBetaVr;
    pred.limit.beta_sign = sign;
    pred.limit.point = sign * vr;
  };

  auto pinned_equals_jset = [&](double face) {
    if (pinned.size() != pred.j_set.size()) return false;
    for (size_t k = 0; k < pinned.size(); ++k) {
      if (pinned[k] != pred.j_set[k]) return false;
      if (x0(pinned[k]) != face) return false;
    }
    return true;
  };

  switch (sc.kind()) {
    case ScenarioKind::kStubbornPositives: {
      if (pinned.empty()) {
        pred.id = TheoremId::kT1_1;
        pred.region.free_lo = -1.0;
        pred.region.free_hi = 1.0 - eps;
        pred.region.description = "x(0) < 1 componentwise";
        if (critical) {
          span_limit(-1.0, 1.0, true, false);
        } else {
          zero_limit();
        }
        return pred;
      }
      if (critical && vr_not_ones && pinned_equals_jset(1.0)) {
        pred.id = TheoremId::kT1_3;
        beta_limit(+1);
      } else {
        const IndexPartition part = partition_indices(sc, x0);
        const BlockSystem blocks = block_decompose(sys.e, part);
        const Eigen::VectorXd y1 = Eigen::VectorXd::Ones(part.n0());
        const auto be = boundary_equilibrium(blocks, y1);
        if (!be || !be->half_open_interior) {
          pred.id = TheoremId::kUnsupported;
          pred.region.description = be ? "reduced equilibrium leaves [-1,1)"
                                       : "E22 singular";
          return pred;
        }
        pred.id = TheoremId::kT1_2;
        pred.limit.kind = LimitKind::kPoint;
        pred.limit.point = embed_blocks(part, y1, be->y2_star);
      }
      for (int i : pinned) pred.region.pinned.emplace_back(i, 1.0);
      pred.region.free_lo = -1.0;
      pred.region.free_hi = 1.0 - eps;
      pred.region.description = "x_i(0) = 1 on the pinned set, rest in [-1,1)";
      return pred;
    }

    case ScenarioKind::kStubbornNeutrals: {
      if (!critical) {
        pred.id = TheoremId::kT2Strict;
        zero_limit();
        pred.region.description = "any x(0) in [-1,1]^N";
        return pred;
      }
      const bool all_pos = (x0.array() > 0.0).all();
      const bool all_neg = (x0.array() < 0.0).all();
      if (all_pos) {
        pred.id = TheoremId::kT2Pos;
        span_limit(0.0, 1.0, false, true);
        pred.region.free_lo = eps;
        pred.region.free_hi = 1.0;
        pred.region.sign = RegionSpec::Sign::kAllPositive;
        pred.region.description = "x(0) > 0";
      } else if (all_neg) {
        pred.id = TheoremId::kT2Neg;
        span_limit(-1.0, 0.0, true, false);
        pred.region.free_lo = -1.0;
        pred.region.free_hi = -eps;
        pred.region.sign = RegionSpec::Sign::kAllNegative;
        pred.region.description = "x(0) < 0";
      } else {
        pred.id = TheoremId::kT2Mixed;
        zero_limit();
        pred.region.sign = RegionSpec::Sign::kMixed;
        pred.region.description = "mixed signs or a zero component";
      }
      return pred;
    }

    case ScenarioKind::kStubbornExtremists: {
      if (pinned.empty()) {
        pred.id = TheoremId::kT3_1;
        pred.region.free_lo = -1.0 + eps;
        pred.region.free_hi = 1.0 - eps;
        pred.region.description = "x(0) in (-1,1)^N";
        if (critical) {
          span_limit(-1.0, 1.0, false, false);
        } else {
          zero_limit();
        }
        return pred;
      }
      double face = 0.0;
      if (critical && vr_not_ones &&
          (pinned_equals_jset(1.0) || pinned_equals_jset(-1.0))) {
        face = x0(pinned[0]);
        pred.id = face > 0 ? TheoremId::kT3_3 : TheoremId::kT3_4;
        beta_limit(face > 0 ? +1 : -1);
      } else {
        const IndexPartition part = partition_indices(sc, x0);
        const BlockSystem blocks = block_decompose(sys.e, part);
        Eigen::VectorXd y1(part.n0());
        for (Eigen::Index k = 0; k < part.n0(); ++k) {
          y1(k) = x0(part.i_a0[static_cast<size_t>(k)]);
        }
        const auto be = boundary_equilibrium(blocks, y1);
        if (!be || !be->strictly_interior) {
          pred.id = TheoremId::kUnsupported;
          pred.region.description = be ? "reduced equilibrium leaves (-1,1)"
                                       : "E22 singular";
          for (int i : pinned) pred.region.pinned.emplace_back(i, x0(i));
          return pred;
        }
        pred.id = TheoremId::kT3_2;
        pred.limit.kind = LimitKind::kPoint;
        pred.limit.point = embed_blocks(part, y1, be->y2_star);
      }
      for (int i : pinned) pred.region.pinned.emplace_back(i, x0(i));
      pred.region.free_lo = -1.0 + eps;
      pred.region.free_hi = 1.0 - eps;
      pred.region.description = "|x_i(0)| = 1 on the pinned set, rest interior";
      return pred;
    }

    case ScenarioKind::kCustom:
      pred.id = TheoremId::kUnsupported;
      pred.region.description = "no theorem clause for custom susceptibility";
      return pred;
  }
  return pred;
}

struct SampleResult {
  Eigen::VectorXd x0;
  Eigen::VectorXd x_final;
  double alpha = 0.0;
  double distance_to_span = 0.0;
  double limit_error = 0.0;  // distance to the expected limit object
  bool pass = false;
  bool pinning_ok = true;      // pinned coordinates bit-constant
  bool sign_ok = true;         // neutrals: sign pattern preserved
  Termination termination = Termination::kTimeLimit;
  double t_end = 0.0;
  std::string reason;
};

struct VerificationReport {
  TheoremPrediction prediction;
  std::vector<SampleResult> samples;
  int passed = 0;
  int failed = 0;
  double worst_distance = 0.0;
  double worst_alpha_excess = 0.0;

  bool all_passed() const { return failed == 0; }
};

struct VerifyOptions {
  int samples = 50;
  std::uint64_t seed = 0;
  double tol = 1e-4;        // limit-matching tolerance
  double alpha_slack = 1e-6;
  double eps = 1e-3;        // region margin used by the samplers
  IntegrateOptions integrate;
  int threads = 0;          // 0: hardware concurrency
};

namespace detail {

// Deterministic uniform double in [0,1): fixed bit recipe so sample streams
// are identical across platforms and thread counts.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline Eigen::VectorXd draw_sample(const RegionSpec& region, Eigen::Index n,
                                   std::mt19937_64& rng) {
  Eigen::VectorXd x(n);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i) = region.free_lo +
             (region.free_hi - region.free_lo) * unit_uniform(rng);
    }
    for (const auto& [idx, val] : region.pinned) x(idx) = val;
    bool ok = true;
    switch (region.sign) {
      case RegionSpec::Sign::kNone: break;
      case RegionSpec::Sign::kAllPositive: ok = (x.array() > 0.0).all(); break;
      case RegionSpec::Sign::kAllNegative: ok = (x.array() < 0.0).all(); break;
      case RegionSpec::Sign::kMixed:
        ok = (x.array() > 0.0).any() && (x.array() < 0.0).any();
        break;
    }
    if (ok) return x;
  }
  throw std::runtime_error("verify: region sampler failed to satisfy sign constraint");
}

}  // namespace detail

/// Draws seeded initial conditions from the prediction's region, integrates
/// each, and checks the limit against the predicted set. The sample list is
/// generated sequentially up front, so the report is deterministic for a
/// given seed regardless of the worker count.
inline VerificationReport verify_theorem(const TheoremPrediction& pred,
                                         const SystemMatrix& sys,
                                         const Scenario& sc,
                                         const VerifyOptions& opts) {
  if (!pred.supported()) {
    throw std::invalid_argument("verify_theorem: prediction is unsupported");
  }
  VerificationReport report;
  report.prediction = pred;
  if (opts.samples <= 0) return report;

  std::mt19937_64 rng(opts.seed);
  std::vector<Eigen::VectorXd> draws;
  draws.reserve(static_cast<size_t>(opts.samples));
  for (int s = 0; s < opts.samples; ++s) {
    draws.push_back(detail::draw_sample(pred.region, sys.n(), rng));
  }

  report.samples.resize(static_cast<size_t>(opts.samples));
  const Eigen::VectorXd& vr = sys.cert.v_right;

  auto run_one = [&](int s) {
    SampleResult& r = report.samples[static_cast<size_t>(s)];
    r.x0 = draws[static_cast<size_t>(s)];
    const Trajectory traj = integrate(sys, sc, r.x0, opts.integrate);
    r.x_final = traj.final_state();
    r.termination = traj.terminated_by;
    r.t_end = traj.final_time();
    const auto [alpha, dist] = span_projection(vr, r.x_final);
    r.alpha = alpha;
    r.distance_to_span = dist;

    for (const auto& [idx, val] : pred.region.pinned) {
      for (const auto& state : traj.states) {
        if (state(idx) != val) {
          r.pinning_ok = false;
          break;
        }
      }
    }
    if (sc.kind() == ScenarioKind::kStubbornNeutrals) {
      for (const auto& state : traj.states) {
        for (Eigen::Index i = 0; i < state.size(); ++i) {
          const double s0 = r.x0(i);
          if ((s0 > 0 && state(i) < 0) || (s0 < 0 && state(i) > 0) ||
              (s0 == 0 && state(i) != 0)) {
            r.sign_ok = false;
          }
        }
        if (!r.sign_ok) break;
      }
    }

    if (traj.terminated_by == Termination::kDiverged) {
      r.pass = false;
      r.reason = "diverged: " + traj.diagnostic;
      return;
    }

    switch (pred.limit.kind) {
      case LimitKind::kSpanOfVr: {
        r.limit_error = dist;
        const bool dist_ok = dist <= opts.tol;
        const double lo_excess = pred.limit.alpha_lo - alpha;
        const double hi_excess = alpha - pred.limit.alpha_hi;
        const bool alpha_ok = lo_excess <= opts.alpha_slack &&
                              hi_excess <= opts.alpha_slack;
        r.pass = dist_ok && alpha_ok;
        if (!dist_ok) r.reason = "distance to span exceeds tol";
        else if (!alpha_ok) r.reason = "alpha outside predicted interval";
        break;
      }
      case LimitKind::kZero:
        r.limit_error = r.x_final.cwiseAbs().maxCoeff();
        r.pass = r.limit_error <= opts.tol;
        if (!r.pass) r.reason = "final state not at the origin";
        break;
      case LimitKind::kPoint:
      case LimitKind::kBetaVr:
        r.limit_error = (r.x_final - pred.limit.point).cwiseAbs().maxCoeff();
        r.pass = r.limit_error <= opts.tol;
        if (!r.pass) r.reason = "final state away from the predicted point";
        break;
    }
    if (!r.pinning_ok) {
      r.pass = false;
      r.reason += (r.reason.empty() ? "" : "; ");
      r.reason += "pinned coordinate drifted";
    }
    if (!r.sign_ok) {
      r.pass = false;
      r.reason += (r.reason.empty() ? "" : "; ");
      r.reason += "sign pattern not preserved";
    }
  };

  int workers = opts.threads > 0
                    ? opts.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, opts.samples));
  if (workers == 1) {
    for (int s = 0; s < opts.samples; ++s) run_one(s);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int s = w; s < opts.samples; s += workers) run_one(s);
      });
    }
    for (auto& t : pool) t.join();
  }

  for (const auto& r : report.samples) {
    if (r.pass) ++report.passed;
    else ++report.failed;
    report.worst_distance = std::max(report.worst_distance, r.limit_error);
    if (pred.limit.kind == LimitKind::kSpanOfVr) {
      report.worst_alpha_excess =
          std::max({report.worst_alpha_excess,
                    pred.limit.alpha_lo - r.alpha, r.alpha - pred.limit.alpha_hi});
    }
  }
  return report;
}

}  // namespace odyn

#endif  // ODYN_VERIFY_HPP
