#include "defhom/report_io.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "json.hpp"

namespace defhom {

using json = nlohmann::json;

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::string header(const ReportMeta& m) {
  return fmt::format("# instance={} config_hash={} seed={} tol={}\n", m.instance, m.config_hash, m.seed,
                     num(m.tol));
}

json meta_json(const ReportMeta& m) {
  return {{"instance", m.instance}, {"config_hash", m.config_hash}, {"seed", m.seed}, {"tol", m.tol}};
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json rate_table_json(const RateTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"eps", r.eps},
                    {"converged", r.converged},
                    {"sup_error", r.sup_error},
                    {"discrepancy", r.discrepancy},
                    {"alpha", r.alpha},
                    {"iterations", r.iterations},
                    {"bound_ok", r.bound_ok},
                    {"max_late_q", r.max_late_q},
                    {"nodes", r.nodes},
                    {"contraction_factors", r.contraction_factors},
                    {"failure", r.failure}});
  }
  return {{"defect_id", t.defect_id}, {"fitted_slope", finite_or_null(t.fitted_slope)},
          {"rows_in_fit", t.rows_in_fit}, {"rows", rows}};
}

}  // namespace

ReportMeta meta_for(const Config& cfg) {
  return {cfg.name, cfg.hash, cfg.seed, cfg.study.solver.tol};
}

std::string grid_csv(const GridFunction& u, const ReportMeta& meta) {
  std::string out = header(meta);
  out += "x";
  for (std::size_t j = 0; j < u.dim(); ++j) out += fmt::format(",u{}", j + 1);
  out += "\n";
  for (std::size_t i = 0; i < u.node_count(); ++i) {
    out += num(u.mesh().x(i));
    for (std::size_t j = 0; j < u.dim(); ++j) {
      out += "," + num(u.values()(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)));
    }
    out += "\n";
  }
  return out;
}

std::string rate_table_csv(const RateTable& t, const ReportMeta& meta) {
  std::string out = header(meta);
  out += fmt::format("# defect={} fitted_slope={}\n", t.defect_id, num(t.fitted_slope));
  out += "eps,converged,sup_error,discrepancy,alpha,iterations,bound_ok,max_late_q,nodes\n";
  for (const auto& r : t.rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", num(r.eps), r.converged ? 1 : 0, num(r.sup_error),
                       num(r.discrepancy), num(r.alpha), r.iterations, r.bound_ok ? 1 : 0,
                       num(r.max_late_q), r.nodes);
  }
  return out;
}

std::string averaging_csv(const AveragingTable& t, const ReportMeta& meta) {
  std::string out = header(meta);
  out += "eps,value,scaled,alpha,beta\n";
  for (const auto& r : t.rows) {
    out += fmt::format("{},{},{},{},{}\n", num(r.eps), num(r.value), num(r.scaled), num(r.worst_alpha),
                       num(r.worst_beta));
  }
  return out;
}

std::string opnorm_csv(const OperatorDemo& d, const ReportMeta& meta) {
  std::string out = header(meta);
  out += "eps";
  std::size_t nv = d.rows.empty() ? 0 : d.rows.front().vector_norms.size();
  for (std::size_t t = 0; t < nv; ++t) out += fmt::format(",v{}", t + 1);
  out += ",spectral_norm,inf_norm\n";
  for (const auto& r : d.rows) {
    out += num(r.eps);
    for (double v : r.vector_norms) out += "," + num(v);
    out += fmt::format(",{},{}\n", num(r.spectral_norm), num(r.inf_norm));
  }
  return out;
}

std::string oracle_compare_csv(const std::vector<OracleCompareRow>& rows, const ReportMeta& meta) {
  std::string out = header(meta);
  out += "s,h,matched_diff,base_diff,scale,tolerance,fem_residual\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{}\n", r.s, num(r.h), num(r.matched_diff), num(r.base_diff),
                       num(r.scale), num(r.tolerance), num(r.fem_residual));
  }
  return out;
}

std::string solve_report_json(const SolveReport& r, const ReportMeta& meta) {
  json j = {{"meta", meta_json(meta)},
            {"eps", r.eps},
            {"converged", r.converged},
            {"iterations", r.iterations},
            {"residual_history", r.residual_history},
            {"contraction_factors", r.contraction_factors},
            {"fixed_point_residuals", r.fixed_point_residuals},
            {"alpha", r.alpha},
            {"rho", r.alpha > 0.0 ? json(2.0 / r.alpha) : json(nullptr)},
            {"discrepancy", r.discrepancy},
            {"error_vs_u0", r.error_vs_u0},
            {"bound_satisfied", r.bound_satisfied}};
  return dump(j);
}

std::string sweep_json(const SweepResult& s, const ReportMeta& meta) {
  json tables = json::array();
  bool slopes_ok = true;
  bool bounds_ok = true;
  bool q_ok = true;
  for (const auto& t : s.tables) {
    tables.push_back(rate_table_json(t));
    slopes_ok = slopes_ok && std::isfinite(t.fitted_slope) && t.fitted_slope >= 0.9 && t.fitted_slope <= 1.1;
    for (const auto& r : t.rows) {
      if (!r.converged) continue;
      bounds_ok = bounds_ok && r.bound_ok;
      if (r.eps <= 0.0625) q_ok = q_ok && r.max_late_q <= 0.55;
    }
  }
  bool spread_ok = true;
  for (double v : s.spread) spread_ok = spread_ok && std::isfinite(v) && v <= 5.0;
  json spread = json::array();
  for (double v : s.spread) spread.push_back(finite_or_null(v));
  json j = {{"meta", meta_json(meta)},
            {"eps", s.eps},
            {"max_scaled_error", s.max_scaled_error},
            {"spread", spread},
            {"tables", tables},
            {"invariants",
             {{"slope_in_0.9_1.1", slopes_ok},
              {"spread_at_most_5", spread_ok},
              {"error_bound_holds", bounds_ok},
              {"late_q_at_most_0.55", q_ok}}}};
  return dump(j);
}

std::string averaging_json(const AveragingTable& t, const ReportMeta& meta) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"eps", r.eps}, {"value", r.value}, {"scaled", r.scaled},
                    {"alpha", r.worst_alpha}, {"beta", r.worst_beta}});
  }
  json j = {{"meta", meta_json(meta)},
            {"rows", rows},
            {"slope", finite_or_null(t.slope)},
            {"gamma_hat", t.gamma_hat},
            {"gamma_spread", finite_or_null(t.gamma_spread)},
            {"invariants",
             {{"slope_in_0.9_1.1", std::isfinite(t.slope) && t.slope >= 0.9 && t.slope <= 1.1},
              {"gamma_spread_below_2", std::isfinite(t.gamma_spread) && t.gamma_spread < 2.0}}}};
  return dump(j);
}

std::string opnorm_json(const OperatorDemo& d, const ReportMeta& meta) {
  json rows = json::array();
  for (const auto& r : d.rows) {
    rows.push_back({{"eps", r.eps}, {"vector_norms", r.vector_norms},
                    {"spectral_norm", r.spectral_norm}, {"inf_norm", r.inf_norm}});
  }
  json slopes = json::array();
  for (double v : d.vector_slopes) slopes.push_back(finite_or_null(v));
  json j = {{"meta", meta_json(meta)},
            {"rows", rows},
            {"vector_slopes", slopes},
            {"spectral_slope", finite_or_null(d.spectral_slope)},
            {"inf_slope", finite_or_null(d.inf_slope)}};
  return dump(j);
}

std::string oracle_compare_json(const std::vector<OracleCompareRow>& rows, const ReportMeta& meta) {
  json arr = json::array();
  bool within = true;
  for (const auto& r : rows) {
    arr.push_back({{"s", r.s}, {"h", r.h}, {"matched_diff", r.matched_diff}, {"base_diff", r.base_diff},
                   {"scale", r.scale}, {"tolerance", r.tolerance}, {"fem_residual", r.fem_residual}});
    within = within && r.matched_diff <= r.tolerance;
  }
  json ratios = json::array();
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ratios.push_back(rows[i].matched_diff > 0.0 ? json(rows[i - 1].matched_diff / rows[i].matched_diff)
                                                : json(nullptr));
  }
  json j = {{"meta", meta_json(meta)}, {"rows", arr}, {"reduction_ratios", ratios},
            {"invariants", {{"within_tolerance", within}}}};
  return dump(j);
}

std::string check_json(const EllipticityReport& e, const MembershipReport& m, const Matrix& A0,
                       const NondegeneracyReport& nd, const SufficientConditionReport& sc,
                       const ReportMeta& meta) {
  std::vector<double> a0(static_cast<std::size_t>(A0.size()));
  for (Eigen::Index i = 0; i < A0.rows(); ++i) {
    for (Eigen::Index k = 0; k < A0.cols(); ++k) a0[static_cast<std::size_t>(i * A0.cols() + k)] = A0(i, k);
  }
  json j = {{"meta", meta_json(meta)},
            {"A0", a0},
            {"ellipticity",
             {{"m_A", e.m_A}, {"m_AB", e.m_AB}, {"sup_inv_A", e.sup_inv_A}, {"sup_inv_AB", e.sup_inv_AB},
              {"norm_B_inf", e.norm_B_inf}, {"norm_B_1", e.norm_B_1}}},
            {"membership",
             {{"member", m.member}, {"violated", m.violated}, {"r", m.r}, {"norm_sum", m.norm_sum},
              {"form_lower_bound", m.form_lower_bound}}},
            {"nondegeneracy",
             {{"alpha", nd.alpha}, {"alpha_refined", finite_or_null(nd.alpha_refined)},
              {"degenerate", nd.degenerate}, {"reason", nd.reason}}},
            {"sufficient_condition",
             {{"holds", sc.holds}, {"d_floor", sc.d_floor}, {"c_norm", sc.c_norm}, {"c_bound", sc.c_bound}}}};
  return dump(j);
}

std::string no_convergence_json(const NoConvergence& e, double eps, const ReportMeta& meta) {
  json j = {{"meta", meta_json(meta)}, {"eps", eps}, {"message", e.what()},
            {"residual_history", e.residuals()}, {"contraction_factors", e.factors()}};
  return dump(j);
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << content;
}

}  // namespace defhom
