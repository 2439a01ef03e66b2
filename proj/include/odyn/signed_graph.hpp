#ifndef ODYN_SIGNED_GRAPH_HPP
#define ODYN_SIGNED_GRAPH_HPP

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace odyn {

/// Dense adjacency / system matrix of a weighted signed digraph.
/// Entry (i,j) is the weight of the directed edge i -> j; positive weights
/// are friendly interactions, negative ones antagonistic. When `zero_diag`
/// is set the matrix additionally asserts b_ii = 0.
class SignedMatrix {
 public:
  SignedMatrix() = default;

  explicit SignedMatrix(Eigen::MatrixXd entries, bool zero_diag = false)
      : mat_(std::move(entries)), zero_diag_(zero_diag) {
    if (mat_.rows() != mat_.cols()) {
      throw std::invalid_argument("SignedMatrix: matrix must be square, got " +
                                  std::to_string(mat_.rows()) + "x" +
                                  std::to_string(mat_.cols()));
    }
    if (!mat_.allFinite()) {
      throw std::invalid_argument("SignedMatrix: entries must be finite");
    }
    if (zero_diag_) {
      for (Eigen::Index i = 0; i < mat_.rows(); ++i) {
        if (mat_(i, i) != 0.0) {
          throw std::invalid_argument(
              "SignedMatrix: zero_diag set but diagonal entry " +
              std::to_string(i) + " is nonzero");
        }
      }
    }
  }

  static SignedMatrix Zero(Eigen::Index n) {
    return SignedMatrix(Eigen::MatrixXd::Zero(n, n), true);
  }

  Eigen::Index n() const { return mat_.rows(); }
  const Eigen::MatrixXd& mat() const { return mat_; }
  bool zero_diag() const { return zero_diag_; }

 private:
  Eigen::MatrixXd mat_;
  bool zero_diag_ = false;
};

/// Row/column absolute-degree diagonals C_r and C_c.
struct DegreeMatrices {
  Eigen::VectorXd row_degrees;
  Eigen::VectorXd col_degrees;
};

inline DegreeMatrices degree_matrices(const SignedMatrix& b) {
  DegreeMatrices d;
  d.row_degrees = b.mat().cwiseAbs().rowwise().sum();
  d.col_degrees = b.mat().cwiseAbs().colwise().sum().transpose();
  return d;
}

/// Parses the line-oriented edge-list format:
///
///   # comment
///   n 4
///   1 2 1.5
///   2 1 -0.5
///
/// Node ids are 1-based; every listed edge is directed. Duplicate edges,
/// self-loops and malformed tokens are rejected with the offending line
/// number.
inline SignedMatrix load_edge_list(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  Eigen::Index n = -1;
  Eigen::MatrixXd mat;
  std::set<std::pair<int, int>> seen;

  auto fail = [&](const std::string& what) {
    throw std::invalid_argument("edge list line " + std::to_string(line_no) +
                                ": " + what);
  };

  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;

    std::istringstream ls(line);
    if (n < 0) {
      std::string tag;
      long long count = 0;
      if (!(ls >> tag >> count) || tag != "n" || count <= 0) {
        fail("expected header 'n N' before any edge");
      }
      n = static_cast<Eigen::Index>(count);
      mat = Eigen::MatrixXd::Zero(n, n);
      continue;
    }

    long long i = 0, j = 0;
    double w = 0.0;
    if (!(ls >> i >> j >> w)) fail("expected 'i j w'");
    std::string rest;
    if (ls >> rest) fail("trailing token '" + rest + "'");
    if (i < 1 || i > n || j < 1 || j > n) fail("node id out of range [1, n]");
    if (i == j) fail("self-loop on node " + std::to_string(i));
    if (!std::isfinite(w) || w == 0.0) fail("weight must be finite and nonzero");
    if (!seen.insert({static_cast<int>(i), static_cast<int>(j)}).second) {
      fail("duplicate edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
    mat(i - 1, j - 1) = w;
  }
  if (n < 0) {
    throw std::invalid_argument("edge list: missing 'n N' header");
  }
  return SignedMatrix(std::move(mat), /*zero_diag=*/true);
}

inline SignedMatrix load_edge_list_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open edge list: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return load_edge_list(ss.str());
}

/// Laplacian L = C_r - B with C_r the diagonal of absolute row sums.
inline SignedMatrix laplacian(const SignedMatrix& b) {
  Eigen::MatrixXd l = -b.mat();
  l.diagonal() += b.mat().cwiseAbs().rowwise().sum();
  return SignedMatrix(std::move(l));
}

/// Weight balance: C_r == C_c up to `tol` on the diagonals.
inline bool is_weight_balanced(const SignedMatrix& b, double tol = 1e-12) {
  const DegreeMatrices d = degree_matrices(b);
  return (d.row_degrees - d.col_degrees).cwiseAbs().maxCoeff() <= tol;
}

/// Strong connectivity of the support digraph (edge i->j iff b_ij != 0),
/// sign-agnostic. Two-pass reachability from node 0 on the pattern and its
/// transpose.
inline bool is_irreducible(const SignedMatrix& b) {
  const Eigen::Index n = b.n();
  if (n == 0) return false;
  if (n == 1) return true;

  auto reach_all = [&](bool transpose) {
    std::vector<char> vis(static_cast<size_t>(n), 0);
    std::vector<Eigen::Index> stack{0};
    vis[0] = 1;
    Eigen::Index count = 1;
    while (!stack.empty()) {
      const Eigen::Index u = stack.back();
      stack.pop_back();
      for (Eigen::Index v = 0; v < n; ++v) {
        const double w = transpose ? b.mat()(v, u) : b.mat()(u, v);
        if (w != 0.0 && !vis[static_cast<size_t>(v)]) {
          vis[static_cast<size_t>(v)] = 1;
          ++count;
          stack.push_back(v);
        }
      }
    }
    return count == n;
  };
  return reach_all(false) && reach_all(true);
}

/// Undirected companion B_u = (B + B^T) / 2.
inline SignedMatrix symmetrize(const SignedMatrix& b) {
  Eigen::MatrixXd s = 0.5 * (b.mat() + b.mat().transpose());
  return SignedMatrix(std::move(s), b.zero_diag());
}

}  // namespace odyn

#endif  // ODYN_SIGNED_GRAPH_HPP
