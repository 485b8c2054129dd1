#include "cli.hpp"

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "defhom/config.hpp"
#include "defhom/errors.hpp"
#include "defhom/harness.hpp"
#include "defhom/report_io.hpp"

namespace defhom::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string out_dir;
  std::vector<double> epsilons;
  std::size_t refine = 0;
  std::optional<std::uint64_t> seed;
  std::string dump_operator;
};

struct Context {
  Config cfg;
  ReportMeta meta;
  fs::path out;
  const Options& opts;

  void write(const std::string& file, const std::string& content) const {
    fs::path p = out / file;
    write_text(p, content);
    std::cout << "wrote " << p.string() << "\n";
  }

  std::vector<double> epsilons() const { return opts.epsilons.empty() ? cfg.epsilons : opts.epsilons; }

  double single_eps() const {
    std::vector<double> e = epsilons();
    if (e.empty()) throw ConfigError("no epsilon given (use --epsilon or the config's epsilons)");
    return e.front();
  }
};

std::string eps_tag(double eps) { return fmt::format("{:.6g}", eps); }

SolveReport homogenized_solution(const Context& ctx, const MeshPtr& mesh) {
  return solve_homogenized(ctx.cfg.instance(0.0), mesh, ctx.cfg.study.solver);
}

int cmd_homogenize(const Context& ctx) {
  ProblemInstance inst = ctx.cfg.instance(0.0);
  Matrix A0 = homogenized_matrix_A0(inst.A);
  std::cout << "A0 =";
  for (Eigen::Index i = 0; i < A0.rows(); ++i) {
    std::cout << (i ? " ;" : "");
    for (Eigen::Index j = 0; j < A0.cols(); ++j) std::cout << fmt::format(" {:.17g}", A0(i, j));
  }
  std::cout << "\n";
  SolveReport u0 = homogenized_solution(ctx, instance_mesh(inst, ctx.cfg.study.n_target, ctx.cfg.study.mesh_cap));
  std::cout << fmt::format("newton iterations {} residual {:.3e}\n", u0.iterations,
                           u0.fixed_point_residuals.back());
  ctx.write("u0.csv", grid_csv(u0.solution, ctx.meta));
  return kOk;
}

int cmd_check(const Context& ctx) {
  ProblemInstance inst = ctx.cfg.instance(0.0);
  MembershipReport m = check_Mr_membership(inst.A, inst.B, inst.r);
  EllipticityReport e = ellipticity(inst.A, inst.B);
  Matrix A0 = homogenized_matrix_A0(inst.A);
  SolveReport u0 = homogenized_solution(ctx, instance_mesh(inst, ctx.cfg.study.n_target, ctx.cfg.study.mesh_cap));
  NondegeneracyReport nd = check_nondegeneracy(inst, u0.solution, ctx.cfg.degeneracy_threshold);
  SufficientConditionReport sc = sufficient_nondegeneracy(inst, u0.solution);
  std::cout << fmt::format("ellipticity m_A={:.6g} m_AB={:.6g}\n", e.m_A, e.m_AB);
  std::cout << fmt::format("membership r={} {}\n", m.r, m.member ? "ok" : "violated: " + m.violated);
  std::cout << fmt::format("alpha={:.6g} alpha_refined={:.6g} {}\n", nd.alpha, nd.alpha_refined,
                           nd.degenerate ? "DEGENERATE (" + nd.reason + ")" : "non-degenerate");
  std::cout << fmt::format("sufficient condition {} (d_floor={:.6g} c_norm={:.6g} bound={:.6g})\n",
                           sc.holds ? "holds" : "not established", sc.d_floor, sc.c_norm, sc.c_bound);
  ctx.write("check.json", check_json(e, m, A0, nd, sc, ctx.meta));
  if (!m.member) {
    std::cerr << "defhom: defect outside M_r: " << m.violated << "\n";
    return kConfigError;
  }
  if (nd.degenerate) {
    std::cerr << "defhom: degenerate linearization: " << nd.reason << "\n";
    return kNumericalFailure;
  }
  return kOk;
}

int cmd_solve(const Context& ctx) {
  double eps = ctx.single_eps();
  ProblemInstance inst = ctx.cfg.instance(eps);
  validate_instance(inst);
  MeshPtr mesh = instance_mesh(inst, ctx.cfg.study.n_target, ctx.cfg.study.mesh_cap);
  SolveReport u0 = homogenized_solution(ctx, mesh);
  std::string tag = eps_tag(eps);
  if (!ctx.opts.dump_operator.empty()) {
    assemble_Fprime(inst, u0.solution, false, false).dump(ctx.opts.dump_operator);
    std::cout << "wrote " << ctx.opts.dump_operator << "\n";
  }
  try {
    SolveReport rep = solve_eps(inst, u0.solution, ctx.cfg.study.solver);
    std::cout << fmt::format("eps={} iterations={} alpha={:.6g} discrepancy={:.6g} error={:.6g} bound {}\n",
                             tag, rep.iterations, rep.alpha, rep.discrepancy, rep.error_vs_u0,
                             rep.bound_satisfied ? "holds" : "VIOLATED");
    ctx.write(fmt::format("solve_eps_{}.json", tag), solve_report_json(rep, ctx.meta));
    ctx.write(fmt::format("solution_eps_{}.csv", tag), grid_csv(rep.solution, ctx.meta));
    ctx.write("u0.csv", grid_csv(u0.solution, ctx.meta));
  } catch (const NoConvergence& e) {
    fs::path p = ctx.out / fmt::format("no_convergence_eps_{}.json", tag);
    write_text(p, no_convergence_json(e, eps, ctx.meta));
    std::cerr << "defhom: " << e.what() << "; q_k trace in " << p.string() << "\n";
    return kNumericalFailure;
  }
  return kOk;
}

int write_sweep(const Context& ctx, const SweepResult& s, const std::string& stem) {
  for (const auto& t : s.tables) {
    std::cout << fmt::format("defect {} slope {:.4f}\n", t.defect_id, t.fitted_slope);
    ctx.write(fmt::format("{}_{}.csv", stem, t.defect_id), rate_table_csv(t, ctx.meta));
  }
  ctx.write(stem + ".json", sweep_json(s, ctx.meta));
  return kOk;
}

int cmd_rates(const Context& ctx) {
  SweepResult s = defect_sweep(ctx.cfg.instance(0.0), ctx.epsilons(), {{"B", ctx.cfg.B}}, ctx.cfg.study);
  return write_sweep(ctx, s, "rates");
}

int cmd_sweep(const Context& ctx) {
  if (ctx.cfg.defects.empty()) throw ConfigError("sweep-defects needs a non-empty 'defects' list");
  SweepResult s = defect_sweep(ctx.cfg.instance(0.0), ctx.epsilons(), ctx.cfg.defects, ctx.cfg.study);
  return write_sweep(ctx, s, "sweep");
}

int cmd_averaging(const Context& ctx) {
  std::vector<Expr> us;
  for (const auto& s : ctx.cfg.averaging_u) us.push_back(parse_expression(s, 0));
  auto mesh = std::make_shared<const Mesh>(Mesh::uniform(ctx.cfg.study.n_target));
  GridFunction u = GridFunction::sample(mesh, ctx.cfg.n, [&](double x) {
    Vector v(static_cast<Eigen::Index>(us.size()));
    for (std::size_t j = 0; j < us.size(); ++j) v(static_cast<Eigen::Index>(j)) = us[j].eval(x, {});
    return v;
  });
  AveragingTable t = averaging_check(ctx.cfg.A, ctx.cfg.B, ctx.epsilons(), u, ctx.cfg.averaging_samples,
                                     ctx.cfg.seed);
  std::cout << fmt::format("slope {:.4f} gamma_hat {:.6g} spread {:.4f}\n", t.slope, t.gamma_hat,
                           t.gamma_spread);
  ctx.write("averaging.csv", averaging_csv(t, ctx.meta));
  ctx.write("averaging.json", averaging_json(t, ctx.meta));
  return kOk;
}

int cmd_oracle(const Context& ctx) {
  double eps = ctx.single_eps();
  ProblemInstance inst = ctx.cfg.instance(eps);
  validate_instance(inst);
  std::vector<std::size_t> factors = ctx.cfg.refine;
  if (ctx.opts.refine > 0) factors = {ctx.opts.refine, 2 * ctx.opts.refine};
  std::vector<OracleCompareRow> rows = oracle_compare(inst, factors, ctx.cfg.study);
  for (const auto& r : rows) {
    std::cout << fmt::format("s={} h={:.4g} matched_diff={:.4g} tolerance={:.4g} base_diff={:.4g}\n", r.s,
                             r.h, r.matched_diff, r.tolerance, r.base_diff);
  }
  std::string tag = eps_tag(eps);
  ctx.write(fmt::format("oracle_compare_eps_{}.csv", tag), oracle_compare_csv(rows, ctx.meta));
  ctx.write(fmt::format("oracle_compare_eps_{}.json", tag), oracle_compare_json(rows, ctx.meta));
  MeshPtr base = instance_mesh(inst, ctx.cfg.study.n_target, ctx.cfg.study.mesh_cap);
  OracleSolution fem = solve_fem(inst, base, factors.back(), ctx.cfg.fem);
  ctx.write(fmt::format("oracle_eps_{}_s{}.csv", tag, factors.back()), grid_csv(fem.solution, ctx.meta));
  return kOk;
}

int cmd_opnorm(const Context& ctx) {
  OperatorDemo d = operator_convergence_demo(ctx.cfg.instance(0.0), ctx.epsilons(), ctx.cfg.test_vectors,
                                             ctx.cfg.seed, ctx.cfg.study);
  std::cout << fmt::format("spectral slope {:.4f} inf slope {:.4f}\n", d.spectral_slope, d.inf_slope);
  ctx.write("opnorm.csv", opnorm_csv(d, ctx.meta));
  ctx.write("opnorm.json", opnorm_json(d, ctx.meta));
  return kOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Semilinear two-point problems with oscillating, locally perturbed coefficients"};
  app.require_subcommand(1);
  Options opts;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "JSON configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out-dir", opts.out_dir, "Output directory (default: config output_dir)");
    sub->add_option("--seed", opts.seed, "Override the configured seed");
    sub->add_option("--epsilon", opts.epsilons, "Scale parameter; repeatable")->take_all();
    return sub;
  };
  using Handler = int (*)(const Context&);
  std::vector<std::pair<CLI::App*, Handler>> commands = {
      {add_common(app.add_subcommand("homogenize", "Print A0 and write u0")), cmd_homogenize},
      {add_common(app.add_subcommand("check", "Ellipticity, membership and non-degeneracy")), cmd_check},
      {add_common(app.add_subcommand("solve", "Frozen iteration for one epsilon")), cmd_solve},
      {add_common(app.add_subcommand("rates", "Rate study for the configured defect")), cmd_rates},
      {add_common(app.add_subcommand("sweep-defects", "Rate studies over the configured defects")), cmd_sweep},
      {add_common(app.add_subcommand("averaging", "Averaging integrals over subintervals")), cmd_averaging},
      {add_common(app.add_subcommand("oracle-compare", "Compare against the FEM oracle")), cmd_oracle},
      {add_common(app.add_subcommand("opnorm-demo", "Strong vs operator-norm convergence")), cmd_opnorm},
  };
  commands[2].first->add_option("--dump-operator", opts.dump_operator,
                                "Write F' at u0 as binary (n, N, row-major float64)");
  commands[6].first->add_option("--refine", opts.refine, "Oracle refinement factor s (runs s and 2s)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "defhom: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    Config cfg = load_config(opts.config);
    if (opts.seed) cfg.seed = *opts.seed;
    Context ctx{cfg, meta_for(cfg), fs::path(opts.out_dir.empty() ? cfg.output_dir : opts.out_dir), opts};
    for (const auto& [sub, handler] : commands) {
      if (sub->parsed()) return handler(ctx);
    }
    return kConfigError;
  } catch (const ParseError& e) {
    std::cerr << fmt::format("defhom: parse error at offset {}: {}\n", e.offset(), e.what());
    return kConfigError;
  } catch (const MembershipViolation& e) {
    std::cerr << fmt::format("defhom: defect '{}' violates membership: {}\n", e.defect_id(), e.what());
    return kConfigError;
  } catch (const ConfigError& e) {
    std::cerr << "defhom: config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ModelError& e) {
    std::cerr << "defhom: model error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InsufficientPoints& e) {
    std::cerr << "defhom: " << e.what() << "\n";
    return kConfigError;
  } catch (const NonElliptic& e) {
    std::cerr << "defhom: " << e.what() << "\n";
    return kConfigError;
  } catch (const MeshTooFine& e) {
    std::cerr << "defhom: " << e.what() << "\n";
    return kCapExceeded;
  } catch (const NoConvergence& e) {
    std::cerr << "defhom: no convergence: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const Error& e) {
    std::cerr << "defhom: numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  }
}

}  // namespace defhom::cli
