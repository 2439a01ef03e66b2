#ifndef ODYN_EQUILIBRIA_HPP
#define ODYN_EQUILIBRIA_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "odyn/dynamics.hpp"
#include "odyn/signed_graph.hpp"

namespace odyn {

/// Partition of agents by whether the susceptibility vanishes at their
/// current value. `perm[k]` is the original index of the k-th coordinate
/// after reordering (I_a0 block first, ascending within each block).
struct IndexPartition {
  std::vector<int> i_a0;
  std::vector<int> i_aplus;
  std::vector<int> perm;

  Eigen::Index n() const { return static_cast<Eigen::Index>(perm.size()); }
  Eigen::Index n0() const { return static_cast<Eigen::Index>(i_a0.size()); }
};

inline IndexPartition partition_indices(const Scenario& sc,
                                        const Eigen::VectorXd& x,
                                        double tol = 1e-12) {
  detail::require_in_box(x, "partition_indices");
  IndexPartition p;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (sc.a(x(i)) <= tol) {
      p.i_a0.push_back(static_cast<int>(i));
    } else {
      p.i_aplus.push_back(static_cast<int>(i));
    }
  }
  p.perm = p.i_a0;
  p.perm.insert(p.perm.end(), p.i_aplus.begin(), p.i_aplus.end());
  return p;
}

/// Blocks of the permuted system matrix P E P^T, split after |I_a0| rows.
struct BlockSystem {
  Eigen::MatrixXd e11, e12, e21, e22;
  IndexPartition part;
};

inline BlockSystem block_decompose(const SignedMatrix& e,
                                   const IndexPartition& part) {
  const Eigen::Index n = e.n();
  if (part.n() != n) {
    throw std::invalid_argument("block_decompose: partition size mismatch");
  }
  const Eigen::Index n0 = part.n0();
  Eigen::MatrixXd permuted(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      permuted(r, c) = e.mat()(part.perm[static_cast<size_t>(r)],
                               part.perm[static_cast<size_t>(c)]);
    }
  }
  BlockSystem b;
  b.e11 = permuted.topLeftCorner(n0, n0);
  b.e12 = permuted.topRightCorner(n0, n - n0);
  b.e21 = permuted.bottomLeftCorner(n - n0, n0);
  b.e22 = permuted.bottomRightCorner(n - n0, n - n0);
  b.part = part;
  return b;
}

/// Reassembles a full state from pinned values y1 and free values y2.
inline Eigen::VectorXd embed_blocks(const IndexPartition& part,
                                    const Eigen::VectorXd& y1,
                                    const Eigen::VectorXd& y2) {
  if (y1.size() != part.n0() || y2.size() != part.n() - part.n0()) {
    throw std::invalid_argument("embed_blocks: block size mismatch");
  }
  Eigen::VectorXd x(part.n());
  for (Eigen::Index k = 0; k < y1.size(); ++k) {
    x(part.perm[static_cast<size_t>(k)]) = y1(k);
  }
  for (Eigen::Index k = 0; k < y2.size(); ++k) {
    x(part.perm[static_cast<size_t>(part.n0() + k)]) = y2(k);
  }
  return x;
}

struct BoundaryEquilibrium {
  Eigen::VectorXd y2_star;
  bool strictly_interior = false;   // every |y2*_i| < 1
  bool half_open_interior = false;  // every y2*_i in [-1, 1)
  double min_singular_value = 0.0;
};

/// Solves E22 y2* = -E21 y1* for the unique free-block equilibrium given the
/// pinned face values. Absent when E22 is singular (condition-number guard);
/// the interior flags report which theorem hypothesis the solution meets.
inline std::optional<BoundaryEquilibrium> boundary_equilibrium(
    const BlockSystem& blocks, const Eigen::VectorXd& y1_star,
    double rank_tol = 1e-9) {
  if (y1_star.size() != blocks.e21.cols()) {
    throw std::invalid_argument("boundary_equilibrium: y1 size mismatch");
  }
  BoundaryEquilibrium out;
  if (blocks.e22.rows() == 0) {
    out.y2_star = Eigen::VectorXd(0);
    out.strictly_interior = true;
    out.half_open_interior = true;
    return out;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      blocks.e22, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd sv = svd.singularValues();
  out.min_singular_value = sv(sv.size() - 1);
  if (out.min_singular_value <= rank_tol * sv(0)) {
    return std::nullopt;  // singular within tolerance
  }
  out.y2_star = svd.solve(-blocks.e21 * y1_star);
  out.strictly_interior = (out.y2_star.cwiseAbs().array() < 1.0).all();
  out.half_open_interior = (out.y2_star.array() >= -1.0).all() &&
                           (out.y2_star.array() < 1.0).all();
  return out;
}

// ---------------------------------------------------------------------------
// Lyapunov evaluators from the three convergence proofs.
// ---------------------------------------------------------------------------

enum class LyapunovKind { kP1, kP2, kN1, kN2, kN3, kX1, kX2 };

inline const char* to_string(LyapunovKind k) {
  switch (k) {
    case LyapunovKind::kP1: return "P1";
    case LyapunovKind::kP2: return "P2";
    case LyapunovKind::kN1: return "N1";
    case LyapunovKind::kN2: return "N2";
    case LyapunovKind::kN3: return "N3";
    case LyapunovKind::kX1: return "X1";
    case LyapunovKind::kX2: return "X2";
  }
  return "?";
}

/// Parameters shared by the evaluators: the full diagonal Gamma, the margin
/// epsilon, and for the reduced-face kinds the partition plus the face
/// equilibrium y2*. N3 carries the sign pattern of x(0); its two sums split
/// nonnegative-started from negative-started coordinates.
struct LyapunovParams {
  Eigen::VectorXd gamma;
  double epsilon = 1e-3;
  std::optional<IndexPartition> partition;
  Eigen::VectorXd y2_star;
  Eigen::VectorXd sign_pattern;
};

inline LyapunovParams make_n3_params(const Eigen::VectorXd& gamma,
                                     const Eigen::VectorXd& x0,
                                     double epsilon = 1e-3) {
  LyapunovParams p;
  p.gamma = gamma;
  p.epsilon = epsilon;
  p.sign_pattern = Eigen::VectorXd(x0.size());
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    p.sign_pattern(i) = x0(i) > 0 ? 1.0 : (x0(i) < 0 ? -1.0 : 0.0);
  }
  return p;
}

namespace detail {

[[noreturn]] inline void domain_violation(LyapunovKind kind, Eigen::Index i,
                                          double value) {
  throw std::domain_error(std::string("lyapunov ") + to_string(kind) +
                          ": log argument nonpositive at component " +
                          std::to_string(i) + " (value " +
                          std::to_string(value) + ")");
}

inline double checked_log(LyapunovKind kind, Eigen::Index i, double arg) {
  if (!(arg > 0.0)) domain_violation(kind, i, arg);
  return std::log(arg);
}

}  // namespace detail

/// Evaluates the proof Lyapunov function `kind` at a full state x.
inline double lyapunov_value(LyapunovKind kind, const LyapunovParams& p,
                             const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  if (p.gamma.size() != n) {
    throw std::invalid_argument("lyapunov_value: gamma size mismatch");
  }
  using detail::checked_log;
  double v = 0.0;
  switch (kind) {
    case LyapunovKind::kP1:
      for (Eigen::Index i = 0; i < n; ++i) {
        v += p.gamma(i) * (-2.0 * x(i) - 2.0 * checked_log(kind, i, 1.0 - x(i)));
      }
      return v;
    case LyapunovKind::kN1:
      for (Eigen::Index i = 0; i < n; ++i) {
        v += 2.0 * p.gamma(i) * checked_log(kind, i, 1.0 + x(i));
      }
      return v;
    case LyapunovKind::kN2:
      for (Eigen::Index i = 0; i < n; ++i) {
        v += 2.0 * p.gamma(i) * checked_log(kind, i, p.epsilon - x(i));
      }
      return v;
    case LyapunovKind::kN3: {
      if (p.sign_pattern.size() != n) {
        throw std::invalid_argument("lyapunov N3: sign pattern missing");
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        if (p.sign_pattern(i) >= 0.0) {
          v += 2.0 * p.gamma(i) * checked_log(kind, i, x(i) + 1.0);
        } else {
          v += 2.0 * p.gamma(i) * checked_log(kind, i, p.epsilon - x(i));
        }
      }
      return v;
    }
    case LyapunovKind::kX1:
      for (Eigen::Index i = 0; i < n; ++i) {
        v += -0.5 * p.gamma(i) * checked_log(kind, i, 1.0 - x(i) * x(i));
      }
      return v;
    case LyapunovKind::kP2:
    case LyapunovKind::kX2: {
      if (!p.partition || p.y2_star.size() != n - p.partition->n0()) {
        throw std::invalid_argument(
            "lyapunov P2/X2: partition and y2_star required");
      }
      const IndexPartition& part = *p.partition;
      const Eigen::Index n0 = part.n0();
      for (Eigen::Index k = 0; k < n - n0; ++k) {
        const int orig = part.perm[static_cast<size_t>(n0 + k)];
        const double gbar = p.gamma(orig);
        const double s = x(orig) - p.y2_star(k);
        if (kind == LyapunovKind::kP2) {
          v += -gbar * (2.0 * s + 2.0 * (1.0 - p.y2_star(k)) *
                                      checked_log(kind, orig,
                                                  1.0 - p.y2_star(k) - s));
        } else {
          // Antiderivative of gbar * s / (1 - (s + y*)^2), the face analogue
          // of the interior evaluator (and equal to it at y* = 0).
          const double phi1 = 1.0 + (s + p.y2_star(k));
          const double phi2 = 1.0 - (s + p.y2_star(k));
          const double l1 = checked_log(kind, orig, phi1);
          const double l2 = checked_log(kind, orig, phi2);
          v += -0.5 * gbar * (p.y2_star(k) * (l1 - l2) + (l1 + l2));
        }
      }
      return v;
    }
  }
  throw std::logic_error("lyapunov_value: unknown kind");
}

struct MonotoneReport {
  double max_increase = 0.0;
  int violations = 0;
  int evaluated = 0;                 // samples with a defined value
  std::optional<int> exit_index;     // first sample outside the domain
};

/// Walks the stored trajectory samples and counts increases of V beyond
/// 1e-8 * (1 + |V|). A domain exit truncates the report at the exit index.
inline MonotoneReport lyapunov_monotone_check(const Trajectory& traj,
                                              LyapunovKind kind,
                                              const LyapunovParams& p) {
  MonotoneReport rep;
  double prev = 0.0;
  bool have_prev = false;
  for (size_t k = 0; k < traj.states.size(); ++k) {
    double v = 0.0;
    try {
      v = lyapunov_value(kind, p, traj.states[k]);
    } catch (const std::domain_error&) {
      rep.exit_index = static_cast<int>(k);
      break;
    }
    ++rep.evaluated;
    if (have_prev) {
      const double inc = v - prev;
      rep.max_increase = std::max(rep.max_increase, inc);
      if (inc > 1e-8 * (1.0 + std::abs(prev))) ++rep.violations;
    }
    prev = v;
    have_prev = true;
  }
  return rep;
}

}  // namespace odyn

#endif  // ODYN_EQUILIBRIA_HPP
