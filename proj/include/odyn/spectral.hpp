#ifndef ODYN_SPECTRAL_HPP
#define ODYN_SPECTRAL_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "odyn/signed_graph.hpp"

namespace odyn {

/// Dominant-eigenstructure certificate. `v_right`/`v_left` are normalized to
/// unit infinity norm with the largest-magnitude entry positive. When
/// `eventually_positive` holds, rho is a simple positive strictly dominant
/// eigenvalue and both Perron vectors are entrywise positive.
struct SpectralCertificate {
  double rho = 0.0;
  double dominant_eig = std::numeric_limits<double>::quiet_NaN();
  bool simple = false;
  Eigen::VectorXd v_right;
  Eigen::VectorXd v_left;
  bool eventually_positive = false;
  std::optional<int> k0;  // set only when the power oracle ran
};

namespace detail {

struct EigData {
  Eigen::VectorXcd values;
  Eigen::MatrixXcd vectors;
};

inline EigData eig(const Eigen::MatrixXd& a) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, /*computeEigenvectors=*/true);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("eigen decomposition did not converge (n=" +
                             std::to_string(a.rows()) + ")");
  }
  return {es.eigenvalues(), es.eigenvectors()};
}

// Real eigenvector of eigenvalue `idx`, scaled so ||v||_inf = 1 and the
// largest-magnitude entry is positive.
inline Eigen::VectorXd real_eigenvector(const EigData& ed, Eigen::Index idx) {
  Eigen::VectorXcd vc = ed.vectors.col(idx);
  Eigen::Index imax = 0;
  vc.cwiseAbs().maxCoeff(&imax);
  // Rotate out the arbitrary complex phase before taking the real part.
  const std::complex<double> piv = vc(imax);
  if (std::abs(piv) == 0.0) {
    throw std::runtime_error("degenerate eigenvector");
  }
  vc *= std::conj(piv) / std::abs(piv);
  Eigen::VectorXd v = vc.real();
  const double m = v.cwiseAbs().maxCoeff();
  return v / m;
}

struct DominantRealEig {
  Eigen::Index index = -1;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  bool simple = false;
};

// Finds a real eigenvalue attaining the spectral radius (within tol scaling)
// and decides its simplicity by the minimum gap to every other eigenvalue.
inline std::optional<DominantRealEig> dominant_real_eigenvalue(
    const Eigen::VectorXcd& values, double tol) {
  const double rho = values.cwiseAbs().maxCoeff();
  const double scale = tol * std::max(1.0, rho);
  DominantRealEig best;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (std::abs(values(i).imag()) > scale) continue;
    const double lam = values(i).real();
    if (std::abs(lam) < rho - scale) continue;
    if (best.index < 0 || lam > best.lambda) {
      best.index = i;
      best.lambda = lam;
    }
  }
  if (best.index < 0) return std::nullopt;
  double min_gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < values.size(); ++j) {
    if (j == best.index) continue;
    min_gap = std::min(min_gap, std::abs(values(j) - values(best.index)));
  }
  best.simple = min_gap > scale;
  return best;
}

}  // namespace detail

/// Spectral radius via a full eigen decomposition.
inline double spectral_radius(const SignedMatrix& a) {
  if (a.n() == 0) return 0.0;
  return detail::eig(a.mat()).values.cwiseAbs().maxCoeff();
}

/// Strong Perron-Frobenius property: rho(A) is a simple positive eigenvalue
/// whose right eigenvector can be scaled strictly positive. Note this does
/// not demand strict modulus dominance over complex pairs; eventual
/// positivity adds that on top.
inline bool has_strong_pf_property(const SignedMatrix& a, double tol = 1e-9) {
  if (a.n() == 0) return false;
  const detail::EigData ed = detail::eig(a.mat());
  const double rho = ed.values.cwiseAbs().maxCoeff();
  if (rho <= tol) return false;
  const auto dom = detail::dominant_real_eigenvalue(ed.values, tol);
  if (!dom || dom->lambda <= tol || !dom->simple) return false;
  const Eigen::VectorXd v = detail::real_eigenvector(ed, dom->index);
  return v.minCoeff() > tol;
}

/// Eventual positivity test per the strong-PF equivalence: both A and A^T
/// must have the strong PF property and rho(A) must strictly dominate every
/// other eigenvalue modulus. The returned certificate carries both Perron
/// vectors whenever a dominant real eigenpair exists.
inline SpectralCertificate is_eventually_positive(const SignedMatrix& a,
                                                  double tol = 1e-9) {
  SpectralCertificate cert;
  if (a.n() == 0) return cert;

  const detail::EigData ed = detail::eig(a.mat());
  cert.rho = ed.values.cwiseAbs().maxCoeff();
  const double scale = tol * std::max(1.0, cert.rho);

  const auto dom = detail::dominant_real_eigenvalue(ed.values, tol);
  if (!dom) return cert;
  cert.dominant_eig = dom->lambda;
  cert.simple = dom->simple;
  cert.v_right = detail::real_eigenvector(ed, dom->index);

  const detail::EigData edt = detail::eig(a.mat().transpose());
  const auto domt = detail::dominant_real_eigenvalue(edt.values, tol);
  if (domt) cert.v_left = detail::real_eigenvector(edt, domt->index);

  bool strictly_dominant = dom->lambda > tol && dom->simple;
  for (Eigen::Index j = 0; j < ed.values.size() && strictly_dominant; ++j) {
    if (j == dom->index) continue;
    if (std::abs(ed.values(j)) > cert.rho - scale) strictly_dominant = false;
  }
  cert.eventually_positive = strictly_dominant &&
                             cert.v_right.minCoeff() > tol && domt &&
                             domt->simple && cert.v_left.minCoeff() > tol;
  return cert;
}

/// Brute-force eventual-positivity oracle: smallest k0 <= k_max with A^k > 0
/// for every k in [k0, k_max]. Powers are renormalized by the max-abs entry
/// each step, which preserves the sign pattern.
inline std::optional<int> eventual_positivity_oracle(const SignedMatrix& a,
                                                     int k_max) {
  if (k_max < 1) throw std::invalid_argument("oracle: k_max must be >= 1");
  if (a.n() == 0) return std::nullopt;
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(a.n(), a.n());
  int last_fail = 0;
  for (int k = 1; k <= k_max; ++k) {
    p = p * a.mat();
    const double m = p.cwiseAbs().maxCoeff();
    if (m == 0.0 || !std::isfinite(m)) return std::nullopt;
    p /= m;
    if (!(p.array() > 0.0).all()) last_fail = k;
  }
  if (last_fail == k_max) return std::nullopt;
  return last_fail + 1;
}

enum class Regime { kCriticalA1, kStrictA1, kCriticalA2, kStrictA2 };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::kCriticalA1: return "critical_a1";
    case Regime::kStrictA1: return "strict_a1";
    case Regime::kCriticalA2: return "critical_a2";
    case Regime::kStrictA2: return "strict_a2";
  }
  return "?";
}

/// Diagonal shift used on the non-eventually-positive path: C = B + diag(D)
/// is eventually positive and E = C - d I.
struct Shift {
  Eigen::VectorXd d_diag;
  SignedMatrix c;
  double d = 0.0;
};

/// Coupled system E together with its provenance: the adjacency B, the
/// forgetting factors, the optional shift, the critical/strict regime, and
/// the spectral certificate of B (or C) that supplies the Perron vector.
struct SystemMatrix {
  SignedMatrix e;
  SignedMatrix b;
  Eigen::VectorXd sigma;
  std::optional<Shift> shift;
  Regime regime = Regime::kCriticalA1;
  SpectralCertificate cert;

  Eigen::Index n() const { return e.n(); }
  bool critical() const {
    return regime == Regime::kCriticalA1 || regime == Regime::kCriticalA2;
  }
};

/// E = B - sigma I with B eventually positive and sigma >= rho(B).
inline SystemMatrix build_system_a1(const SignedMatrix& b, double sigma,
                                    double tol = 1e-9) {
  SpectralCertificate cert = is_eventually_positive(b);
  if (!cert.eventually_positive) {
    std::string why;
    if (!std::isfinite(cert.dominant_eig)) {
      why = "no real eigenvalue attains the spectral radius";
    } else if (!cert.simple) {
      why = "dominant eigenvalue is not simple";
    } else if (cert.v_right.size() && cert.v_right.minCoeff() <= 0) {
      why = "right Perron candidate is not strictly positive";
    } else if (cert.v_left.size() && cert.v_left.minCoeff() <= 0) {
      why = "left Perron candidate is not strictly positive";
    } else {
      why = "spectral radius is not strictly dominant";
    }
    throw std::invalid_argument("build_system_a1: B is not eventually positive (" +
                                why + ")");
  }
  const double scale = tol * std::max(1.0, cert.rho);
  if (sigma < cert.rho - scale) {
    throw std::invalid_argument("build_system_a1: sigma < rho(B)");
  }
  SystemMatrix sys;
  sys.b = b;
  Eigen::MatrixXd e = b.mat();
  e.diagonal().array() -= sigma;
  sys.e = SignedMatrix(std::move(e));
  sys.sigma = Eigen::VectorXd::Constant(b.n(), sigma);
  sys.regime = std::abs(sigma - cert.rho) <= scale ? Regime::kCriticalA1
                                                   : Regime::kStrictA1;
  sys.cert = std::move(cert);
  return sys;
}

/// E = C - d I with C = B + diag(D) eventually positive and d >= rho(C).
/// The forgetting factors Sigma = d I - diag(D) must come out positive.
inline SystemMatrix build_system_a2(const SignedMatrix& b,
                                    const Eigen::VectorXd& d_diag, double d,
                                    double tol = 1e-9) {
  if (d_diag.size() != b.n()) {
    throw std::invalid_argument("build_system_a2: diagonal size mismatch");
  }
  Eigen::MatrixXd cm = b.mat();
  cm.diagonal() += d_diag;
  SignedMatrix c(std::move(cm));
  SpectralCertificate cert = is_eventually_positive(c);
  if (!cert.eventually_positive) {
    throw std::invalid_argument("build_system_a2: C = B + D is not eventually positive");
  }
  const double scale = tol * std::max(1.0, cert.rho);
  if (d < cert.rho - scale) {
    throw std::invalid_argument("build_system_a2: d < rho(C)");
  }
  Eigen::VectorXd sigma = Eigen::VectorXd::Constant(b.n(), d) - d_diag;
  if (sigma.minCoeff() <= 0.0) {
    throw std::invalid_argument(
        "build_system_a2: sigma_i = d - D_ii must be positive for every agent");
  }
  SystemMatrix sys;
  sys.b = b;
  Eigen::MatrixXd e = c.mat();
  e.diagonal().array() -= d;
  sys.e = SignedMatrix(std::move(e));
  sys.sigma = std::move(sigma);
  sys.shift = Shift{d_diag, std::move(c), d};
  sys.regime = std::abs(d - cert.rho) <= scale ? Regime::kCriticalA2
                                               : Regime::kStrictA2;
  sys.cert = std::move(cert);
  return sys;
}

struct ShiftSearchResult {
  Eigen::VectorXd d_diag;
  SignedMatrix c;
  double d = 0.0;
  SpectralCertificate cert;
  int evaluations = 0;
};

/// Searches for a nonnegative diagonal D making C = B + diag(D) eventually
/// positive, returning d = rho(C) alongside. Strategy: seeds first, then
/// D = 0, then delta*I on a geometric grid, then a per-coordinate greedy
/// increase on the coordinates where the candidate Perron vectors fail to be
/// positive. The budget counts eventual-positivity evaluations; absence is a
/// value, not an error.
inline std::optional<ShiftSearchResult> find_shift_d(
    const SignedMatrix& b, int budget,
    const std::vector<Eigen::VectorXd>& seeds = {}) {
  const Eigen::Index n = b.n();
  int used = 0;

  auto try_candidate =
      [&](const Eigen::VectorXd& d_diag) -> std::optional<ShiftSearchResult> {
    if (used >= budget) return std::nullopt;
    ++used;
    Eigen::MatrixXd cm = b.mat();
    cm.diagonal() += d_diag;
    SignedMatrix c(std::move(cm));
    SpectralCertificate cert = is_eventually_positive(c);
    if (cert.eventually_positive) {
      return ShiftSearchResult{d_diag, std::move(c), cert.rho, std::move(cert),
                               used};
    }
    return std::nullopt;
  };

  for (const auto& s : seeds) {
    if (s.size() != n || s.minCoeff() < 0.0) continue;
    if (auto r = try_candidate(s)) return r;
  }

  if (auto r = try_candidate(Eigen::VectorXd::Zero(n))) return r;

  const double base = std::max(1.0, b.mat().cwiseAbs().maxCoeff());
  for (double delta = 0.125 * base; delta <= 64.0 * base && used < budget;
       delta *= 2.0) {
    if (auto r = try_candidate(Eigen::VectorXd::Constant(n, delta))) return r;
  }

  // Greedy stage: bump the diagonal where the candidate Perron vectors are
  // not positive, starting from a small uniform shift.
  Eigen::VectorXd d_diag = Eigen::VectorXd::Constant(n, 0.25 * base);
  Eigen::VectorXd step = Eigen::VectorXd::Constant(n, 0.25 * base);
  while (used < budget) {
    Eigen::MatrixXd cm = b.mat();
    cm.diagonal() += d_diag;
    SignedMatrix c(std::move(cm));
    ++used;
    SpectralCertificate cert = is_eventually_positive(c);
    if (cert.eventually_positive) {
      return ShiftSearchResult{d_diag, std::move(c), cert.rho, std::move(cert),
                               used};
    }
    bool bumped = false;
    if (cert.v_right.size() == n && cert.v_left.size() == n) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (cert.v_right(i) <= 0.0 || cert.v_left(i) <= 0.0) {
          d_diag(i) += step(i);
          step(i) *= 1.5;
          bumped = true;
        }
      }
    }
    if (!bumped) {
      // Dominance is complex or marginal; push the whole diagonal up.
      d_diag.array() += 0.25 * base;
    }
  }
  return std::nullopt;
}

}  // namespace odyn

#endif  // ODYN_SPECTRAL_HPP
