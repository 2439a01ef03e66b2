// Command-line front end: analyze matrices, simulate the opinion dynamics,
// run theorem-verification suites, and reproduce the two demonstration
// systems end to end.
//
// Exit codes: 0 success, 2 parse/config error, 3 certificate infeasible,
// 4 verification failures present.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "odyn/config.hpp"
#include "odyn/io.hpp"
#include "odyn/reproduce.hpp"
#include "odyn/signed_graph.hpp"
#include "odyn/spectral.hpp"
#include "odyn/stability.hpp"
#include "odyn/verify.hpp"

#ifndef ODYN_FIXTURES_DEFAULT
#define ODYN_FIXTURES_DEFAULT "fixtures"
#endif

namespace {

namespace fs = std::filesystem;
using odyn::json;

constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitVerifyFailed = 4;

std::string resolve_fixtures(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (fs::exists("fixtures/karate.edges")) return "fixtures";
  return ODYN_FIXTURES_DEFAULT;
}

odyn::SignedMatrix load_input(const odyn::ExperimentConfig& cfg,
                              const std::string& fixtures) {
  if (!cfg.fixture.empty()) {
    if (cfg.fixture == "example2") {
      return odyn::load_csv_matrix_file(fixtures + "/example2_B.csv");
    }
    if (cfg.fixture == "karate") {
      return odyn::load_edge_list_file(fixtures + "/karate.edges");
    }
    throw std::invalid_argument("unknown fixture '" + cfg.fixture + "'");
  }
  if (!cfg.edge_list.empty()) return odyn::load_edge_list_file(cfg.edge_list);
  if (!cfg.csv.empty()) return odyn::load_csv_matrix_file(cfg.csv);
  return odyn::load_csv_matrix(cfg.inline_csv);
}

odyn::SystemMatrix build_system(const odyn::ExperimentConfig& cfg,
                                const odyn::SignedMatrix& b,
                                std::string* note) {
  if (cfg.sigma_mode == "sigma") {
    const double sigma =
        cfg.sigma ? *cfg.sigma : odyn::spectral_radius(b);
    *note = cfg.sigma ? "assumption-1 route, explicit sigma"
                      : "assumption-1 route, sigma = rho(B)";
    return odyn::build_system_a1(b, sigma);
  }
  if (cfg.sigma_mode == "shift") {
    if (cfg.shift_d_diag.empty()) {
      throw std::invalid_argument("system.mode = \"shift\" requires system.D");
    }
    Eigen::VectorXd d_diag = Eigen::Map<const Eigen::VectorXd>(
        cfg.shift_d_diag.data(),
        static_cast<Eigen::Index>(cfg.shift_d_diag.size()));
    Eigen::MatrixXd cm = b.mat();
    cm.diagonal() += d_diag;
    const double d =
        cfg.shift_d ? *cfg.shift_d
                    : odyn::spectral_radius(odyn::SignedMatrix(cm));
    *note = "assumption-2 route, explicit D";
    return odyn::build_system_a2(b, d_diag, d);
  }
  if (cfg.sigma_mode == "auto") {
    const odyn::SpectralCertificate probe = odyn::is_eventually_positive(b);
    if (probe.eventually_positive) {
      const double sigma = cfg.sigma ? *cfg.sigma : probe.rho;
      *note = "auto: B eventually positive, assumption-1 route";
      return odyn::build_system_a1(b, sigma);
    }
    const auto shift = odyn::find_shift_d(b, 500);
    if (!shift) {
      throw std::runtime_error(
          "auto: B not eventually positive and no shift D found");
    }
    *note = "auto: assumption-2 route via find_shift_d";
    return odyn::build_system_a2(b, shift->d_diag, shift->d);
  }
  throw std::invalid_argument("unknown system.mode '" + cfg.sigma_mode + "'");
}

std::optional<odyn::StabilityCertificate> build_gamma(
    const odyn::ExperimentConfig& cfg, const odyn::SystemMatrix& sys) {
  if (cfg.gamma_mode == "explicit") {
    Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(
        cfg.gamma.data(), static_cast<Eigen::Index>(cfg.gamma.size()));
    auto cert = odyn::check_gamma(sys.e, g);
    return cert;
  }
  return odyn::search_gamma(sys.e, cfg.gamma_budget);
}

odyn::Scenario scenario_from_name(const std::string& name) {
  if (name == "positives") return odyn::Scenario::positives();
  if (name == "neutrals") return odyn::Scenario::neutrals();
  if (name == "extremists") return odyn::Scenario::extremists();
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

Eigen::VectorXd representative_x0(const odyn::ExperimentConfig& cfg,
                                  Eigen::Index n) {
  if (!cfg.x0.empty()) {
    if (static_cast<Eigen::Index>(cfg.x0.size()) != n) {
      throw std::invalid_argument("run.x0 has wrong dimension");
    }
    return Eigen::Map<const Eigen::VectorXd>(cfg.x0.data(), n);
  }
  Eigen::VectorXd x0 = Eigen::VectorXd::Constant(n, 0.5);
  if (cfg.sampler == "negative") {
    x0.setConstant(-0.5);
  } else if (cfg.sampler == "mixed") {
    for (Eigen::Index i = 0; i < n; ++i) x0(i) = (i % 2 == 0) ? 0.5 : -0.5;
  } else if (cfg.sampler.empty() || cfg.sampler == "interior" ||
             cfg.sampler == "below_one" || cfg.sampler == "positive" ||
             cfg.sampler == "pinned_face") {
    // keep 0.5 everywhere
  } else {
    throw std::invalid_argument("unknown sampler '" + cfg.sampler + "'");
  }
  for (const auto& [agent, value] : cfg.pinned) {
    if (agent < 1 || agent > n) {
      throw std::invalid_argument("pinned agent id out of range");
    }
    x0(agent - 1) = value;
  }
  return x0;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(2) << "\n";
}

json analysis_json(const odyn::SignedMatrix& b, const odyn::SystemMatrix& sys,
                   const std::string& note) {
  json j;
  j["system"] = note;
  j["regime"] = to_string(sys.regime);
  j["spectral"] = odyn::to_json(sys.cert);
  j["sigma"] = odyn::to_json(sys.sigma);
  if (sys.shift) {
    j["shift"]["D"] = odyn::to_json(sys.shift->d_diag);
    j["shift"]["d"] = sys.shift->d;
    j["shift"]["rho_C"] = sys.cert.rho;
  }
  j["weight_balanced"] = odyn::is_weight_balanced(b, 1e-9);
  j["irreducible"] = odyn::is_irreducible(b);
  const odyn::DegreeMatrices deg = odyn::degree_matrices(b);
  j["laplacian"]["max_row_degree"] = deg.row_degrees.maxCoeff();
  j["laplacian"]["min_row_degree"] = deg.row_degrees.minCoeff();
  j["laplacian"]["spectral_radius"] =
      odyn::spectral_radius(odyn::laplacian(b));
  return j;
}

int cmd_analyze(const odyn::ExperimentConfig& cfg,
                const std::string& fixtures, const std::string& out_dir,
                const std::string& format) {
  const odyn::SignedMatrix b = load_input(cfg, fixtures);
  std::string note;
  odyn::SystemMatrix sys = build_system(cfg, b, &note);
  // Attach the brute-force power oracle's first all-positive exponent for
  // the eventually positive matrix (B or C).
  sys.cert.k0 = odyn::eventual_positivity_oracle(
      sys.shift ? sys.shift->c : sys.b, 500);
  json j = analysis_json(b, sys, note);
  const auto gamma = build_gamma(cfg, sys);
  int rc = 0;
  if (gamma && gamma->valid) {
    j["stability"] = odyn::to_json(*gamma);
  } else {
    if (gamma) j["stability"] = odyn::to_json(*gamma);
    j["stability_error"] =
        gamma ? "supplied gamma does not certify H(Gamma E) <= 0 with rank match"
              : "gamma search exhausted its budget without a valid certificate";
    rc = kExitInfeasible;
  }
  const std::string path =
      cfg.summary_json.empty() ? out_dir + "/analysis.json" : cfg.summary_json;
  write_json_file(j, path);
  if (format == "csv") {
    std::cout << "key,value\n";
    std::cout << "regime," << j["regime"].get<std::string>() << "\n";
    std::cout << "rho," << sys.cert.rho << "\n";
    std::cout << "eventually_positive," << sys.cert.eventually_positive << "\n";
    if (sys.cert.k0) std::cout << "k0," << *sys.cert.k0 << "\n";
    std::cout << "gamma_valid," << (gamma && gamma->valid) << "\n";
    std::cout << "weight_balanced," << j["weight_balanced"].get<bool>() << "\n";
    std::cout << "irreducible," << j["irreducible"].get<bool>() << "\n";
  } else {
    std::cout << j.dump(2) << "\n";
  }
  return rc;
}

int cmd_simulate(const odyn::ExperimentConfig& cfg,
                 const std::string& fixtures, const std::string& out_dir,
                 const std::string& format) {
  const odyn::SignedMatrix b = load_input(cfg, fixtures);
  std::string note;
  const odyn::SystemMatrix sys = build_system(cfg, b, &note);
  const auto gamma = build_gamma(cfg, sys);
  if (!gamma || !gamma->valid) {
    std::cerr << "simulate: no valid gamma certificate\n";
    return kExitInfeasible;
  }
  const odyn::Scenario sc = scenario_from_name(cfg.scenario);
  const Eigen::VectorXd x0 = representative_x0(cfg, sys.n());

  odyn::IntegrateOptions opts;
  opts.step = cfg.step;
  opts.t_max = cfg.t_max;
  opts.convergence_tol = cfg.convergence_tol;
  const odyn::Trajectory traj = odyn::integrate(sys, sc, x0, opts);

  json j;
  j["system"] = note;
  j["regime"] = to_string(sys.regime);
  j["scenario"] = sc.name();
  j["x0"] = odyn::to_json(x0);
  j["termination"] = to_string(traj.terminated_by);
  j["t_end"] = traj.final_time();
  if (traj.convergence) j["convergence"] = odyn::to_json(*traj.convergence);
  const odyn::TheoremPrediction pred = odyn::predict(sys, sc, x0, *gamma);
  j["prediction"] = odyn::to_json(pred);
  if (pred.supported() && traj.terminated_by != odyn::Termination::kDiverged) {
    double err = 0.0;
    const Eigen::VectorXd& xf = traj.final_state();
    switch (pred.limit.kind) {
      case odyn::LimitKind::kSpanOfVr:
        err = odyn::span_projection(sys.cert.v_right, xf).second;
        break;
      case odyn::LimitKind::kZero: err = xf.cwiseAbs().maxCoeff(); break;
      default: err = (xf - pred.limit.point).cwiseAbs().maxCoeff(); break;
    }
    j["limit_error"] = err;
    j["prediction_pass"] = err <= cfg.tol;
  }

  const std::string csv_path = cfg.trajectory_csv.empty()
                                   ? out_dir + "/trajectory.csv"
                                   : cfg.trajectory_csv;
  odyn::write_trajectory_csv_file(traj, csv_path);
  if (!cfg.plot_svg.empty()) {
    odyn::write_trajectory_svg_file(traj, cfg.plot_svg,
                                    sc.name() + std::string(" scenario"));
  }
  const std::string sum_path =
      cfg.summary_json.empty() ? out_dir + "/summary.json" : cfg.summary_json;
  write_json_file(j, sum_path);
  if (format == "csv") {
    odyn::write_trajectory_csv(traj, std::cout);
  } else {
    std::cout << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_verify(const odyn::ExperimentConfig& cfg, const std::string& fixtures,
               const std::string& out_dir, const std::string& format) {
  const odyn::SignedMatrix b = load_input(cfg, fixtures);
  std::string note;
  const odyn::SystemMatrix sys = build_system(cfg, b, &note);
  const auto gamma = build_gamma(cfg, sys);
  if (!gamma || !gamma->valid) {
    std::cerr << "verify: no valid gamma certificate\n";
    return kExitInfeasible;
  }
  const odyn::Scenario sc = scenario_from_name(cfg.scenario);
  const Eigen::VectorXd x0 = representative_x0(cfg, sys.n());
  const odyn::TheoremPrediction pred = odyn::predict(sys, sc, x0, *gamma);
  if (!pred.supported()) {
    std::cerr << "verify: no theorem clause applies to this configuration\n";
    json j;
    j["prediction"] = odyn::to_json(pred);
    write_json_file(j, cfg.summary_json.empty() ? out_dir + "/verify.json"
                                                : cfg.summary_json);
    return kExitConfig;
  }
  odyn::VerifyOptions vopts;
  vopts.samples = cfg.samples;
  vopts.seed = cfg.seed;
  vopts.tol = cfg.tol;
  vopts.eps = cfg.eps;
  vopts.threads = cfg.threads;
  vopts.integrate.step = cfg.step;
  vopts.integrate.t_max = cfg.t_max;
  vopts.integrate.convergence_tol = cfg.convergence_tol;
  const odyn::VerificationReport rep =
      odyn::verify_theorem(pred, sys, sc, vopts);
  json j = odyn::to_json(rep);
  j["system"] = note;
  write_json_file(j, cfg.summary_json.empty() ? out_dir + "/verify.json"
                                              : cfg.summary_json);
  if (format == "csv") {
    std::cout << "sample,pass,alpha,distance_to_span,limit_error,t_end\n";
    for (size_t k = 0; k < rep.samples.size(); ++k) {
      const auto& s = rep.samples[k];
      std::printf("%zu,%d,%.12g,%.12g,%.12g,%.12g\n", k, s.pass ? 1 : 0,
                  s.alpha, s.distance_to_span, s.limit_error, s.t_end);
    }
  } else {
    std::cout << "theorem " << to_string(pred.id) << ": " << rep.passed
              << " passed, " << rep.failed << " failed (worst distance "
              << rep.worst_distance << ")\n";
  }
  return rep.all_passed() ? 0 : kExitVerifyFailed;
}

int cmd_reproduce(int example, const std::string& fixtures,
                  const std::string& out_dir, std::uint64_t seed) {
  const odyn::ReproduceResult res =
      odyn::run_reproduce(example, fixtures, seed);
  fs::create_directories(out_dir);
  for (const auto& panel : res.panels) {
    odyn::write_trajectory_csv_file(panel.traj,
                                    out_dir + "/" + panel.name + ".csv");
    odyn::write_trajectory_svg_file(
        panel.traj, out_dir + "/" + panel.name + ".svg",
        panel.name + " - " + panel.scenario + " (" +
            to_string(panel.classification) + ")");
  }
  const json j = odyn::to_json(res);
  write_json_file(j, out_dir + "/summary.json");
  std::cout << j.dump(2) << "\n";
  for (const auto& panel : res.panels) {
    if (!panel.classified_pass) return kExitVerifyFailed;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generalized opinion dynamics on signed digraphs"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir = ".", fixtures_flag, format = "json";
  std::optional<std::uint64_t> seed_flag;
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--fixtures", fixtures_flag, "fixtures directory");
  app.add_option("--seed", seed_flag, "seed override");
  app.add_option("--format", format, "output format")
      ->check(CLI::IsMember({"json", "csv"}));

  auto* analyze = app.add_subcommand("analyze", "matrix certificates");
  analyze->add_option("--config", config_path, "experiment config")->required();
  auto* simulate = app.add_subcommand("simulate", "integrate one trajectory");
  simulate->add_option("--config", config_path, "experiment config")->required();
  auto* verify = app.add_subcommand("verify", "run a theorem verification suite");
  verify->add_option("--config", config_path, "experiment config")->required();
  int example = 0;
  auto* reproduce =
      app.add_subcommand("reproduce", "rebuild a demonstration example");
  reproduce->add_option("example", example, "example number (1 or 2)")
      ->required()
      ->check(CLI::Range(1, 2));

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string fixtures = resolve_fixtures(fixtures_flag);
    if (reproduce->parsed()) {
      return cmd_reproduce(example, fixtures, out_dir,
                           seed_flag.value_or(20240001u));
    }
    odyn::ExperimentConfig cfg = odyn::load_config(config_path);
    if (seed_flag) cfg.seed = *seed_flag;
    fs::create_directories(out_dir);
    if (analyze->parsed()) return cmd_analyze(cfg, fixtures, out_dir);
    if (simulate->parsed()) return cmd_simulate(cfg, fixtures, out_dir);
    if (verify->parsed()) return cmd_verify(cfg, fixtures, out_dir);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  }
  return 0;
}
