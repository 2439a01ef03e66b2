#ifndef ODYN_DYNAMICS_HPP
#define ODYN_DYNAMICS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "odyn/spectral.hpp"

namespace odyn {

enum class ScenarioKind {
  kStubbornPositives,   // a(x) = 0.5 (1 - x), opinion 1 is frozen
  kStubbornNeutrals,    // a(x) = x^2, opinion 0 is frozen
  kStubbornExtremists,  // a(x) = 1 - x^2, opinions +-1 are frozen
  kCustom,
};

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kStubbornPositives: return "positives";
    case ScenarioKind::kStubbornNeutrals: return "neutrals";
    case ScenarioKind::kStubbornExtremists: return "extremists";
    case ScenarioKind::kCustom: return "custom";
  }
  return "?";
}

/// State-dependent susceptibility law, shared by all agents. Custom maps must
/// stay within [0,1] on [-1,1]; this is probed at construction and enforced
/// again by susceptibility().
class Scenario {
 public:
  static Scenario positives() { return Scenario(ScenarioKind::kStubbornPositives); }
  static Scenario neutrals() { return Scenario(ScenarioKind::kStubbornNeutrals); }
  static Scenario extremists() { return Scenario(ScenarioKind::kStubbornExtremists); }

  static Scenario custom(std::string name, std::function<double(double)> a,
                         std::function<double(double)> da = {}) {
    Scenario s(ScenarioKind::kCustom);
    s.name_ = std::move(name);
    s.custom_a_ = std::move(a);
    s.custom_da_ = std::move(da);
    for (int k = 0; k <= 2000; ++k) {
      const double x = -1.0 + 1e-3 * k;
      const double v = s.custom_a_(x);
      if (!(v >= -1e-12 && v <= 1.0 + 1e-12)) {
        throw std::invalid_argument("custom susceptibility leaves [0,1] at x=" +
                                    std::to_string(x));
      }
    }
    return s;
  }

  ScenarioKind kind() const { return kind_; }

  const std::string& name() const { return name_; }

  double a(double x) const {
    switch (kind_) {
      case ScenarioKind::kStubbornPositives: return 0.5 * (1.0 - x);
      case ScenarioKind::kStubbornNeutrals: return x * x;
      case ScenarioKind::kStubbornExtremists: return 1.0 - x * x;
      case ScenarioKind::kCustom: return custom_a_(x);
    }
    return 0.0;
  }

  double da(double x) const {
    switch (kind_) {
      case ScenarioKind::kStubbornPositives: return -0.5;
      case ScenarioKind::kStubbornNeutrals: return 2.0 * x;
      case ScenarioKind::kStubbornExtremists: return -2.0 * x;
      case ScenarioKind::kCustom:
        if (custom_da_) return custom_da_(x);
        return (custom_a_(x + 1e-6) - custom_a_(x - 1e-6)) / 2e-6;
    }
    return 0.0;
  }

  /// Opinion values frozen by this law (a vanishes there).
  std::vector<double> pinned_values() const {
    switch (kind_) {
      case ScenarioKind::kStubbornPositives: return {1.0};
      case ScenarioKind::kStubbornNeutrals: return {0.0};
      case ScenarioKind::kStubbornExtremists: return {-1.0, 1.0};
      case ScenarioKind::kCustom: {
        std::vector<double> zs;
        for (int k = 0; k <= 2000; ++k) {
          const double x = -1.0 + 1e-3 * k;
          if (custom_a_(x) <= 1e-12) zs.push_back(x);
        }
        return zs;
      }
    }
    return {};
  }

 private:
  explicit Scenario(ScenarioKind k) : kind_(k), name_(to_string(k)) {}

  ScenarioKind kind_;
  std::string name_;
  std::function<double(double)> custom_a_;
  std::function<double(double)> custom_da_;
};

namespace detail {

inline void require_in_box(const Eigen::VectorXd& x, const char* who) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x(i) >= -1.0 - 1e-12 && x(i) <= 1.0 + 1e-12)) {
      throw std::invalid_argument(std::string(who) + ": component " +
                                  std::to_string(i) + " outside [-1,1]");
    }
  }
}

}  // namespace detail

/// Componentwise susceptibility a_i(x_i), each value in [0,1].
inline Eigen::VectorXd susceptibility(const Scenario& sc,
                                      const Eigen::VectorXd& x) {
  detail::require_in_box(x, "susceptibility");
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    out(i) = sc.a(x(i));
    if (!(out(i) >= -1e-12 && out(i) <= 1.0 + 1e-12)) {
      throw std::domain_error("susceptibility out of [0,1] at component " +
                              std::to_string(i));
    }
  }
  return out;
}

/// Right-hand side A(x) E x.
inline Eigen::VectorXd vector_field(const SystemMatrix& sys,
                                    const Scenario& sc,
                                    const Eigen::VectorXd& x) {
  if (x.size() != sys.n()) {
    throw std::invalid_argument("vector_field: state dimension mismatch");
  }
  Eigen::VectorXd out = sys.e.mat() * x;
  for (Eigen::Index i = 0; i < x.size(); ++i) out(i) *= sc.a(x(i));
  return out;
}

/// Analytic Jacobian of the field by the product rule:
/// J_ij = a_i(x_i) e_ij + delta_ij a_i'(x_i) (Ex)_i.
inline Eigen::MatrixXd field_jacobian(const SystemMatrix& sys,
                                      const Scenario& sc,
                                      const Eigen::VectorXd& x) {
  if (x.size() != sys.n()) {
    throw std::invalid_argument("field_jacobian: state dimension mismatch");
  }
  const Eigen::VectorXd ex = sys.e.mat() * x;
  Eigen::MatrixXd j = sys.e.mat();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    j.row(i) *= sc.a(x(i));
    j(i, i) += sc.da(x(i)) * ex(i);
  }
  return j;
}

enum class Termination { kTimeLimit, kConverged, kDiverged };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::kTimeLimit: return "time_limit";
    case Termination::kConverged: return "converged";
    case Termination::kDiverged: return "diverged";
  }
  return "?";
}

struct ConvergenceReport {
  Eigen::VectorXd limit_estimate;
  std::optional<double> alpha;  // coefficient of v_r, present near the span
  double residual_field = 0.0;
  double distance_to_span = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  Termination terminated_by = Termination::kTimeLimit;
  std::optional<ConvergenceReport> convergence;
  std::string diagnostic;

  const Eigen::VectorXd& final_state() const { return states.back(); }
  double final_time() const { return times.back(); }
};

struct IntegrateOptions {
  double step = 1e-2;
  double t_max = 200.0;
  double convergence_tol = 1e-8;
  // Samples kept in the trajectory: every `record_stride` steps, or an
  // automatic stride capping storage near 4096 samples when 0.
  int record_stride = 0;
};

namespace detail {

template <class Vec>
struct RawTrajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  Termination term = Termination::kTimeLimit;
  std::string diagnostic;
  Vec final_state;
  double final_time = 0.0;
};

// Fixed-step RK4 with post-step clamping to [-1,1]^N. The three scenario
// laws saturate at the box faces: the outward flux there is genuinely
// nonzero for positives/neutrals, and the clamp realizes the model's
// face-pinned behavior (e.g. the closed alpha-interval endpoints). Pinned
// coordinates (a = 0 exactly) stay bit-constant because every stage
// derivative vanishes there.
template <int N, class AFun>
RawTrajectory<Eigen::Matrix<double, N, 1>> rk4_clamped(
    const Eigen::MatrixXd& e_in, const Eigen::VectorXd& x0, AFun a,
    const IntegrateOptions& opts) {
  using Vec = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;

  const double h = opts.step;
  const long long n_steps =
      static_cast<long long>(std::ceil(opts.t_max / h - 1e-12));
  const long long stride =
      opts.record_stride > 0
          ? opts.record_stride
          : std::max<long long>(1, n_steps / 4096);

  const Mat e = e_in;
  Vec x = x0;
  Vec k1 = x, k2 = x, k3 = x, k4 = x, xs = x;

  auto field = [&](const Vec& v, Vec& out) {
    out.noalias() = e * v;
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) *= a(v(i));
  };

  RawTrajectory<Vec> raw;
  raw.times.push_back(0.0);
  raw.states.push_back(x);

  constexpr int kWindow = 10;
  std::vector<Vec> ring(kWindow, x);

  for (long long k = 0; k < n_steps; ++k) {
    field(x, k1);
    if (k >= kWindow) {
      const double delta =
          (x - ring[static_cast<size_t>(k % kWindow)]).cwiseAbs().maxCoeff();
      if (k1.cwiseAbs().maxCoeff() < opts.convergence_tol &&
          delta < opts.convergence_tol) {
        raw.term = Termination::kConverged;
        raw.final_state = x;
        raw.final_time = static_cast<double>(k) * h;
        if (raw.times.back() != raw.final_time) {
          raw.times.push_back(raw.final_time);
          raw.states.push_back(x);
        }
        return raw;
      }
    }
    ring[static_cast<size_t>(k % kWindow)] = x;

    xs = x + (0.5 * h) * k1;
    field(xs, k2);
    xs = x + (0.5 * h) * k2;
    field(xs, k3);
    xs = x + h * k3;
    field(xs, k4);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    if (!x.allFinite()) {
      raw.term = Termination::kDiverged;
      raw.diagnostic = "non-finite state at t=" +
                       std::to_string(static_cast<double>(k + 1) * h);
      // Keep the last finite state as the endpoint.
      raw.final_state = ring[static_cast<size_t>(k % kWindow)];
      raw.final_time = static_cast<double>(k) * h;
      if (raw.times.back() != raw.final_time) {
        raw.times.push_back(raw.final_time);
        raw.states.push_back(raw.final_state);
      }
      return raw;
    }
    x = x.cwiseMax(-1.0).cwiseMin(1.0);
    if ((k + 1) % stride == 0) {
      raw.times.push_back(static_cast<double>(k + 1) * h);
      raw.states.push_back(x);
    }
  }
  raw.term = Termination::kTimeLimit;
  raw.final_state = x;
  raw.final_time = static_cast<double>(n_steps) * h;
  if (raw.times.back() != raw.final_time) {
    raw.times.push_back(raw.final_time);
    raw.states.push_back(x);
  }
  return raw;
}

template <int N, class AFun>
Trajectory integrate_sized(const SystemMatrix& sys, AFun a,
                           const Eigen::VectorXd& x0,
                           const IntegrateOptions& opts) {
  auto raw = rk4_clamped<N, AFun>(sys.e.mat(), x0, a, opts);
  Trajectory tr;
  tr.times = std::move(raw.times);
  tr.states.reserve(raw.states.size());
  for (auto& s : raw.states) tr.states.emplace_back(std::move(s));
  tr.terminated_by = raw.term;
  tr.diagnostic = std::move(raw.diagnostic);
  return tr;
}

template <class AFun>
Trajectory integrate_dispatch_n(const SystemMatrix& sys, AFun a,
                                const Eigen::VectorXd& x0,
                                const IntegrateOptions& opts) {
  switch (sys.n()) {
    case 2: return integrate_sized<2>(sys, a, x0, opts);
    case 3: return integrate_sized<3>(sys, a, x0, opts);
    case 4: return integrate_sized<4>(sys, a, x0, opts);
    default: return integrate_sized<Eigen::Dynamic>(sys, a, x0, opts);
  }
}

}  // namespace detail

/// Projection of x onto span(v): the least-squares coefficient alpha and the
/// infinity-norm residual.
inline std::pair<double, double> span_projection(const Eigen::VectorXd& v,
                                                 const Eigen::VectorXd& x) {
  const double alpha = v.dot(x) / v.dot(v);
  const double dist = (x - alpha * v).cwiseAbs().maxCoeff();
  return {alpha, dist};
}

/// Fixed-step RK4 integration of dx/dt = A(x) E x over [-1,1]^N with
/// post-step clamping (face saturation). Terminates early once the field
/// residual and the state movement over the trailing 10 steps both drop
/// below convergence_tol; fills the convergence report against the system's
/// certified Perron vector.
inline Trajectory integrate(const SystemMatrix& sys, const Scenario& sc,
                            const Eigen::VectorXd& x0,
                            const IntegrateOptions& opts = {}) {
  if (x0.size() != sys.n()) {
    throw std::invalid_argument("integrate: x0 dimension mismatch");
  }
  detail::require_in_box(x0, "integrate");
  if (!(opts.step > 0.0) || !(opts.t_max > 0.0)) {
    throw std::invalid_argument("integrate: step and t_max must be positive");
  }

  Trajectory tr;
  switch (sc.kind()) {
    case ScenarioKind::kStubbornPositives:
      tr = detail::integrate_dispatch_n(
          sys, [](double x) { return 0.5 * (1.0 - x); }, x0, opts);
      break;
    case ScenarioKind::kStubbornNeutrals:
      tr = detail::integrate_dispatch_n(
          sys, [](double x) { return x * x; }, x0, opts);
      break;
    case ScenarioKind::kStubbornExtremists:
      tr = detail::integrate_dispatch_n(
          sys, [](double x) { return 1.0 - x * x; }, x0, opts);
      break;
    case ScenarioKind::kCustom:
      tr = detail::integrate_dispatch_n(
          sys, [&sc](double x) { return sc.a(x); }, x0, opts);
      break;
  }

  if (tr.terminated_by != Termination::kDiverged &&
      sys.cert.v_right.size() == sys.n()) {
    ConvergenceReport rep;
    rep.limit_estimate = tr.final_state();
    rep.residual_field =
        vector_field(sys, sc, tr.final_state()).cwiseAbs().maxCoeff();
    const auto [alpha, dist] =
        span_projection(sys.cert.v_right, tr.final_state());
    rep.distance_to_span = dist;
    if (dist <= 10.0 * opts.convergence_tol) rep.alpha = alpha;
    tr.convergence = std::move(rep);
  }
  return tr;
}

/// Flow Jacobian M(t_end) = d x(t_end) / d x(0): co-integrates the
/// variational system dM/dt = DF(x(t)) M, M(0) = I, along the state.
inline Eigen::MatrixXd flow_jacobian(const SystemMatrix& sys,
                                     const Scenario& sc,
                                     const Eigen::VectorXd& x0, double t_end,
                                     double step) {
  if (x0.size() != sys.n()) {
    throw std::invalid_argument("flow_jacobian: x0 dimension mismatch");
  }
  detail::require_in_box(x0, "flow_jacobian");
  if (!(step > 0.0) || t_end < 0.0) {
    throw std::invalid_argument("flow_jacobian: bad step or t_end");
  }
  const Eigen::Index n = sys.n();
  Eigen::VectorXd x = x0;
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  const long long n_steps = static_cast<long long>(std::llround(t_end / step));

  auto f = [&](const Eigen::VectorXd& v) { return vector_field(sys, sc, v); };
  auto df = [&](const Eigen::VectorXd& v) { return field_jacobian(sys, sc, v); };

  for (long long k = 0; k < n_steps; ++k) {
    const Eigen::VectorXd k1x = f(x);
    const Eigen::MatrixXd k1m = df(x) * m;
    const Eigen::VectorXd x2 = x + 0.5 * step * k1x;
    const Eigen::VectorXd k2x = f(x2);
    const Eigen::MatrixXd k2m = df(x2) * (m + 0.5 * step * k1m);
    const Eigen::VectorXd x3 = x + 0.5 * step * k2x;
    const Eigen::VectorXd k3x = f(x3);
    const Eigen::MatrixXd k3m = df(x3) * (m + 0.5 * step * k2m);
    const Eigen::VectorXd x4 = x + step * k3x;
    const Eigen::VectorXd k4x = f(x4);
    const Eigen::MatrixXd k4m = df(x4) * (m + step * k3m);
    x += (step / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    x = x.cwiseMax(-1.0).cwiseMin(1.0);
    m += (step / 6.0) * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
    if (!x.allFinite() || !m.allFinite()) {
      throw std::runtime_error("flow_jacobian: non-finite state at t=" +
                               std::to_string((k + 1) * step));
    }
  }
  return m;
}

}  // namespace odyn

#endif  // ODYN_DYNAMICS_HPP
