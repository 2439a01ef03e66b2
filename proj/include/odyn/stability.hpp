#ifndef ODYN_STABILITY_HPP
#define ODYN_STABILITY_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "odyn/signed_graph.hpp"
#include "odyn/spectral.hpp"

namespace odyn {

enum class GammaMethod { kUserSupplied, kIdentity, kMMatrixPath, kSearch };

inline const char* to_string(GammaMethod m) {
  switch (m) {
    case GammaMethod::kUserSupplied: return "user_supplied";
    case GammaMethod::kIdentity: return "identity";
    case GammaMethod::kMMatrixPath: return "m_matrix";
    case GammaMethod::kSearch: return "search";
  }
  return "?";
}

/// Diagonal stability certificate for H(Gamma E) = (Gamma E + E^T Gamma)/2.
/// `valid` requires lambda_max(H) <= tol * ||H||_2 together with
/// rank H = rank E; in the critical regime H has an exact zero eigenvalue,
/// so strict negativity must not be demanded.
struct StabilityCertificate {
  Eigen::VectorXd gamma;
  double lambda_max_h = 0.0;
  int rank_h = 0;
  int rank_e = 0;
  bool valid = false;
  GammaMethod method = GammaMethod::kUserSupplied;
  double tol = 1e-8;
};

namespace detail {

inline Eigen::MatrixXd symmetric_part(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

// Rank by singular-value thresholding at rel_tol * s_max. The same relative
// rule is applied to both E and H so the rank-equality test is consistent.
inline int svd_rank(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.size() == 0) return 0;
  const Eigen::VectorXd sv =
      Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
  const double cut = rel_tol * sv(0);
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) ++r;
  }
  return r;
}

inline Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("symmetric eigen decomposition failed");
  }
  return es.eigenvalues();
}

}  // namespace detail

/// Evaluates the Theorem-1 hypothesis pair for a given positive diagonal:
/// H(Gamma E) negative semidefinite (relative tolerance) and
/// rank H(Gamma E) == rank E.
inline StabilityCertificate check_gamma(const SignedMatrix& e,
                                        const Eigen::VectorXd& gamma,
                                        double tol = 1e-8) {
  if (gamma.size() != e.n()) {
    throw std::invalid_argument("check_gamma: gamma size mismatch");
  }
  if (e.n() > 0 && gamma.minCoeff() <= 0.0) {
    throw std::invalid_argument("check_gamma: gamma entries must be positive");
  }
  StabilityCertificate cert;
  cert.gamma = gamma;
  cert.tol = tol;
  const Eigen::MatrixXd h =
      detail::symmetric_part(gamma.asDiagonal() * e.mat());
  const Eigen::VectorXd eigs = detail::symmetric_eigenvalues(h);
  cert.lambda_max_h = eigs.size() ? eigs(eigs.size() - 1) : 0.0;
  const double h_norm =
      eigs.size() ? std::max(std::abs(eigs(0)), std::abs(eigs(eigs.size() - 1)))
                  : 0.0;
  cert.rank_h = detail::svd_rank(h, tol);
  cert.rank_e = detail::svd_rank(e.mat(), tol);
  cert.valid =
      cert.lambda_max_h <= tol * h_norm && cert.rank_h == cert.rank_e;
  return cert;
}

/// Real orthogonal diagonalizability: E normal (E E^T = E^T E) with a real
/// spectrum, both within tol relative to the matrix scale.
inline bool is_orthogonally_diagonalizable(const SignedMatrix& e,
                                           double tol = 1e-9) {
  if (e.n() == 0) return true;
  const Eigen::MatrixXd& m = e.mat();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double commutator =
      (m * m.transpose() - m.transpose() * m).cwiseAbs().maxCoeff();
  if (commutator > tol * scale * scale) return false;
  const Eigen::VectorXcd vals = detail::eig(m).values;
  return (vals.imag().cwiseAbs().maxCoeff() <= tol * scale);
}

struct NullSpaceReport {
  int rank_a = 0;
  int rank_ha = 0;
  bool same_null_space = false;
  double worst_containment_residual = 0.0;  // max ||H v|| over null basis of A
};

/// Rank and null-space comparison of A against H(A), valid when H(A) is
/// negative semidefinite (hypothesis checked, violation is an error). The
/// containment nullspace(A) subset-of nullspace(H(A)) is verified directly
/// on an SVD null basis of A.
inline NullSpaceReport null_space_lemma_check(const SignedMatrix& a,
                                              double tol = 1e-8) {
  const Eigen::MatrixXd h = detail::symmetric_part(a.mat());
  const Eigen::VectorXd eigs = detail::symmetric_eigenvalues(h);
  const double h_norm =
      eigs.size() ? std::max(std::abs(eigs(0)), std::abs(eigs(eigs.size() - 1)))
                  : 0.0;
  if (eigs.size() && eigs(eigs.size() - 1) > tol * std::max(1.0, h_norm)) {
    throw std::invalid_argument(
        "null_space_lemma_check: H(A) is not negative semidefinite");
  }
  NullSpaceReport rep;
  rep.rank_a = detail::svd_rank(a.mat(), tol);
  rep.rank_ha = detail::svd_rank(h, tol);
  rep.same_null_space = rep.rank_a == rep.rank_ha;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.mat(), Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  const double cut = sv.size() ? tol * sv(0) : 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) continue;
    const double res = (h * svd.matrixV().col(i)).norm();
    rep.worst_containment_residual =
        std::max(rep.worst_containment_residual, res);
    if (res > tol * std::max(1.0, h_norm)) {
      throw std::runtime_error(
          "null_space_lemma_check: null vector of A escapes nullspace(H(A))");
    }
  }
  return rep;
}

struct SemidefiniteResult {
  bool is_nsd = false;
  double lambda_max = 0.0;
};

/// Largest eigenvalue of a symmetric matrix plus the NSD verdict
/// lambda_max <= tol. Asymmetry beyond tol (relative) is rejected.
inline SemidefiniteResult semidefinite_check(const Eigen::MatrixXd& m,
                                             double tol = 1e-8) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("semidefinite_check: matrix must be square");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale) {
    throw std::invalid_argument("semidefinite_check: matrix is not symmetric");
  }
  const Eigen::VectorXd eigs =
      detail::symmetric_eigenvalues(detail::symmetric_part(m));
  SemidefiniteResult r;
  r.lambda_max = eigs.size() ? eigs(eigs.size() - 1) : 0.0;
  r.is_nsd = r.lambda_max <= tol;
  return r;
}

/// Probe of the zero-form identity for NSD matrices: whenever x^T M x
/// vanishes (relative to ||x||^2), M x must vanish as well.
inline bool semidefinite_zero_form_probe(const Eigen::MatrixXd& m,
                                         const Eigen::VectorXd& x,
                                         double tol = 1e-8) {
  const double nx2 = x.squaredNorm();
  if (nx2 == 0.0) return true;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (std::abs(x.dot(m * x)) > tol * scale * nx2) return true;  // not a witness
  return (m * x).norm() <= std::sqrt(tol * scale) * std::sqrt(nx2);
}

/// Derivative-free Gamma search: gamma = exp(theta) keeps positivity
/// unconstrained; lambda_max(H(Gamma E)) is minimized by coordinate-wise
/// golden-section sweeps with restarts. The first iterate whose check_gamma
/// is valid wins; the budget counts objective evaluations. When E carries a
/// near-null eigenpair with positive left/right vectors, theta is seeded at
/// log(v_left / v_right), which is the only admissible direction in the
/// critical regime.
inline std::optional<StabilityCertificate> search_gamma(const SignedMatrix& e,
                                                        int budget = 5000,
                                                        double tol = 1e-8) {
  const Eigen::Index n = e.n();
  if (n == 0) return std::nullopt;
  int used = 0;

  auto objective = [&](const Eigen::VectorXd& theta) {
    ++used;
    const Eigen::VectorXd gamma = theta.array().exp();
    const Eigen::MatrixXd h =
        detail::symmetric_part(gamma.asDiagonal() * e.mat());
    const Eigen::VectorXd eigs = detail::symmetric_eigenvalues(h);
    const double h_norm =
        std::max(std::abs(eigs(0)), std::abs(eigs(eigs.size() - 1)));
    return h_norm > 0 ? eigs(eigs.size() - 1) / h_norm : 0.0;
  };
  auto validate =
      [&](const Eigen::VectorXd& theta) -> std::optional<StabilityCertificate> {
    StabilityCertificate c = check_gamma(e, theta.array().exp(), tol);
    if (c.valid) return c;
    return std::nullopt;
  };

  std::vector<Eigen::VectorXd> starts;
  starts.push_back(Eigen::VectorXd::Zero(n));
  {
    // Critical-regime seed from the near-null eigenpair of E.
    const detail::EigData ed = detail::eig(e.mat());
    Eigen::Index zi = -1;
    double best = std::numeric_limits<double>::infinity();
    const double scale = std::max(1.0, e.mat().cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < ed.values.size(); ++i) {
      const double mag = std::abs(ed.values(i));
      if (std::abs(ed.values(i).imag()) <= 1e-9 * scale && mag < best) {
        best = mag;
        zi = i;
      }
    }
    if (zi >= 0 && best <= 1e-6 * scale) {
      try {
        const Eigen::VectorXd vr = detail::real_eigenvector(ed, zi);
        const detail::EigData edt = detail::eig(e.mat().transpose());
        Eigen::Index zt = -1;
        double bt = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < edt.values.size(); ++i) {
          const double mag = std::abs(edt.values(i));
          if (std::abs(edt.values(i).imag()) <= 1e-9 * scale && mag < bt) {
            bt = mag;
            zt = i;
          }
        }
        if (zt >= 0) {
          const Eigen::VectorXd vl = detail::real_eigenvector(edt, zt);
          if (vr.minCoeff() > 0 && vl.minCoeff() > 0) {
            starts.push_back((vl.array() / vr.array()).log());
          }
        }
      } catch (const std::runtime_error&) {
        // degenerate eigenvector; skip the seed
      }
    }
  }

  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const int restarts = 3;
  for (int r = 0; r < restarts && used < budget; ++r) {
    Eigen::VectorXd theta;
    if (r < static_cast<int>(starts.size())) {
      theta = starts[static_cast<size_t>(r)];
    } else {
      theta = starts[0];
      for (Eigen::Index i = 0; i < n; ++i) theta(i) += unif(rng);
    }
    if (auto c = validate(theta)) {
      if (r == 0) c->method = GammaMethod::kIdentity;
      else c->method = GammaMethod::kSearch;
      return c;
    }

    constexpr double kInvPhi = 0.6180339887498949;
    double width = 2.0;
    for (int sweep = 0; sweep < 40 && used < budget; ++sweep) {
      for (Eigen::Index i = 0; i < n && used < budget; ++i) {
        double lo = theta(i) - width, hi = theta(i) + width;
        double x1 = hi - kInvPhi * (hi - lo), x2 = lo + kInvPhi * (hi - lo);
        auto eval_at = [&](double t) {
          Eigen::VectorXd th = theta;
          th(i) = t;
          return objective(th);
        };
        double f1 = eval_at(x1), f2 = eval_at(x2);
        for (int it = 0; it < 14 && used < budget; ++it) {
          if (f1 < f2) {
            hi = x2; x2 = x1; f2 = f1;
            x1 = hi - kInvPhi * (hi - lo);
            f1 = eval_at(x1);
          } else {
            lo = x1; x1 = x2; f1 = f2;
            x2 = lo + kInvPhi * (hi - lo);
            f2 = eval_at(x2);
          }
        }
        theta(i) = f1 < f2 ? x1 : x2;
        theta.array() -= theta.mean();  // fix the overall-scale gauge
        if (auto c = validate(theta)) {
          c->method = GammaMethod::kSearch;
          return c;
        }
      }
      width = std::max(0.25, width * 0.7);
    }
  }
  return std::nullopt;
}

/// Gamma construction on the M-matrix fast path: for B >= 0 entrywise and
/// sigma > rho(B), -E = sigma I - B is a nonsingular M-matrix; solving
/// (-E)^T z = 1 gives a positive z whose diagonal usually certifies strict
/// diagonal stability. Falls back to search_gamma when the construction
/// degenerates.
inline StabilityCertificate m_matrix_gamma(const SignedMatrix& b,
                                           double sigma, double tol = 1e-8) {
  if (b.n() == 0) throw std::invalid_argument("m_matrix_gamma: empty matrix");
  if (b.mat().minCoeff() < 0.0) {
    throw std::invalid_argument("m_matrix_gamma: B has a negative entry");
  }
  const double rho = spectral_radius(b);
  if (sigma <= rho * (1.0 + 1e-12)) {
    throw std::invalid_argument("m_matrix_gamma: sigma must exceed rho(B)");
  }
  Eigen::MatrixXd e = b.mat();
  e.diagonal().array() -= sigma;
  const SignedMatrix es(e);

  const Eigen::VectorXd z = (-e).transpose().partialPivLu().solve(
      Eigen::VectorXd::Ones(b.n()));
  if (z.minCoeff() > 0.0) {
    StabilityCertificate cert = check_gamma(es, z, tol);
    if (cert.valid && cert.lambda_max_h < 0.0) {
      cert.method = GammaMethod::kMMatrixPath;
      return cert;
    }
  }
  if (auto found = search_gamma(es, 5000, tol)) return *found;
  throw std::runtime_error("m_matrix_gamma: no certificate found");
}

}  // namespace odyn

#endif  // ODYN_STABILITY_HPP
