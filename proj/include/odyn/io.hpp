#ifndef ODYN_IO_HPP
#define ODYN_IO_HPP

#include <Eigen/Dense>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "odyn/dynamics.hpp"
#include "odyn/equilibria.hpp"
#include "odyn/spectral.hpp"
#include "odyn/stability.hpp"
#include "odyn/verify.hpp"

namespace odyn {

using nlohmann::json;

inline json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json(const SpectralCertificate& c) {
  json j;
  j["rho"] = c.rho;
  j["dominant_eig"] = c.dominant_eig;
  j["simple"] = c.simple;
  j["v_right"] = to_json(c.v_right);
  j["v_left"] = to_json(c.v_left);
  j["eventually_positive"] = c.eventually_positive;
  if (c.k0) j["k0"] = *c.k0;
  return j;
}

inline json to_json(const StabilityCertificate& c) {
  json j;
  j["gamma"] = to_json(c.gamma);
  j["lambda_max_H"] = c.lambda_max_h;
  j["rank_H"] = c.rank_h;
  j["rank_E"] = c.rank_e;
  j["valid"] = c.valid;
  j["method"] = to_string(c.method);
  j["tol"] = c.tol;
  return j;
}

inline json to_json(const ConvergenceReport& r) {
  json j;
  j["limit_estimate"] = to_json(r.limit_estimate);
  if (r.alpha) j["alpha"] = *r.alpha;
  j["residual_field"] = r.residual_field;
  j["distance_to_span"] = r.distance_to_span;
  return j;
}

inline json to_json(const MonotoneReport& r) {
  json j;
  j["max_increase"] = r.max_increase;
  j["violations"] = r.violations;
  j["evaluated"] = r.evaluated;
  if (r.exit_index) j["exit_index"] = *r.exit_index;
  return j;
}

inline json to_json(const SampleResult& r) {
  json j;
  j["x0"] = to_json(r.x0);
  j["x_final"] = to_json(r.x_final);
  j["alpha"] = r.alpha;
  j["distance_to_span"] = r.distance_to_span;
  j["limit_error"] = r.limit_error;
  j["pass"] = r.pass;
  j["pinning_ok"] = r.pinning_ok;
  j["sign_ok"] = r.sign_ok;
  j["termination"] = to_string(r.termination);
  j["t_end"] = r.t_end;
  if (!r.reason.empty()) j["reason"] = r.reason;
  return j;
}

inline json to_json(const TheoremPrediction& p) {
  json j;
  j["theorem"] = to_string(p.id);
  j["corollary_variant"] = p.corollary;
  if (p.supported()) {
    j["limit"] = to_string(p.limit.kind);
    if (p.limit.kind == LimitKind::kSpanOfVr) {
      j["alpha_lo"] = p.limit.alpha_lo;
      j["alpha_hi"] = p.limit.alpha_hi;
      j["lo_closed"] = p.limit.lo_closed;
      j["hi_closed"] = p.limit.hi_closed;
    } else if (p.limit.kind != LimitKind::kZero) {
      j["point"] = to_json(p.limit.point);
    }
  }
  j["region"] = p.region.description;
  if (!p.j_set.empty()) j["j_set"] = p.j_set;
  return j;
}

inline json to_json(const VerificationReport& r, bool with_samples = true) {
  json j;
  j["prediction"] = to_json(r.prediction);
  j["passed"] = r.passed;
  j["failed"] = r.failed;
  j["worst_distance"] = r.worst_distance;
  j["worst_alpha_excess"] = r.worst_alpha_excess;
  if (with_samples) {
    json s = json::array();
    for (const auto& x : r.samples) s.push_back(to_json(x));
    j["samples"] = std::move(s);
  }
  return j;
}

/// CSV with header `t,x1,...,xN`, one row per stored sample.
inline void write_trajectory_csv(const Trajectory& tr, std::ostream& out,
                                 int stride = 1) {
  if (tr.states.empty()) return;
  const Eigen::Index n = tr.states.front().size();
  out << "t";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x" << (i + 1);
  out << "\n";
  char buf[32];
  const size_t last = tr.states.size() - 1;
  for (size_t k = 0; k < tr.states.size(); ++k) {
    if (k % static_cast<size_t>(stride) != 0 && k != last) continue;
    std::snprintf(buf, sizeof buf, "%.12g", tr.times[k]);
    out << buf;
    for (Eigen::Index i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, "%.12g", tr.states[k](i));
      out << ',' << buf;
    }
    out << "\n";
  }
}

inline void write_trajectory_csv_file(const Trajectory& tr,
                                      const std::string& path,
                                      int stride = 1) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  write_trajectory_csv(tr, f, stride);
}

/// Self-contained SVG line chart: time on the x axis, one polyline per
/// agent. Lines are downsampled to at most ~1500 points each.
inline void write_trajectory_svg_file(const Trajectory& tr,
                                      const std::string& path,
                                      const std::string& title) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  const int w = 860, h = 520, ml = 60, mr = 20, mt = 40, mb = 40;
  const double t0 = tr.times.front(), t1 = std::max(tr.times.back(), t0 + 1e-12);
  const Eigen::Index n = tr.states.front().size();

  auto px = [&](double t) {
    return ml + (t - t0) / (t1 - t0) * (w - ml - mr);
  };
  auto py = [&](double x) {
    return mt + (1.0 - x) / 2.0 * (h - mt - mb);
  };

  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
    << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  f << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" "
       "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";
  for (double y : {-1.0, 0.0, 1.0}) {
    f << "<line x1=\"" << ml << "\" y1=\"" << py(y) << "\" x2=\"" << w - mr
      << "\" y2=\"" << py(y) << "\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n";
    f << "<text x=\"" << ml - 8 << "\" y=\"" << py(y) + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
      << y << "</text>\n";
  }
  char num[32];
  std::snprintf(num, sizeof num, "%.6g", t1);
  f << "<text x=\"" << w - mr << "\" y=\"" << h - 12
    << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">t = "
    << num << "</text>\n";

  const size_t stride = std::max<size_t>(1, tr.states.size() / 1500);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int hue = static_cast<int>(360.0 * static_cast<double>(i) /
                                     static_cast<double>(n));
    f << "<polyline fill=\"none\" stroke=\"hsl(" << hue
      << ",70%,42%)\" stroke-width=\"1.2\" points=\"";
    for (size_t k = 0; k < tr.states.size(); ++k) {
      if (k % stride != 0 && k != tr.states.size() - 1) continue;
      std::snprintf(num, sizeof num, "%.2f", px(tr.times[k]));
      f << num << ',';
      std::snprintf(num, sizeof num, "%.2f", py(tr.states[k](i)));
      f << num << ' ';
    }
    f << "\"/>\n";
  }
  f << "</svg>\n";
}

/// Plain CSV matrix (no header), rejecting ragged or non-numeric input.
inline SignedMatrix load_csv_matrix(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r,") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        size_t used = 0;
        row.push_back(std::stod(cell, &used));
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw std::invalid_argument("csv line " + std::to_string(line_no) +
                                    ": bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::invalid_argument("csv line " + std::to_string(line_no) +
                                  ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("csv: empty input");
  if (rows.size() != rows.front().size()) {
    throw std::invalid_argument("csv: matrix is not square (" +
                                std::to_string(rows.size()) + " rows x " +
                                std::to_string(rows.front().size()) +
                                " cols)");
  }
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][c];
    }
  }
  return SignedMatrix(std::move(m));
}

inline SignedMatrix load_csv_matrix_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open csv: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return load_csv_matrix(ss.str());
}

}  // namespace odyn

#endif  // ODYN_IO_HPP
