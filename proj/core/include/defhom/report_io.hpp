#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "defhom/config.hpp"
#include "defhom/errors.hpp"

namespace defhom {

/// Provenance stamped into every output file.
struct ReportMeta {
  std::string instance;
  std::string config_hash;
  std::uint64_t seed = 0;
  double tol = 1e-11;
};

ReportMeta meta_for(const Config& cfg);

// CSV tables start with a '#' comment line carrying the metadata.
std::string grid_csv(const GridFunction& u, const ReportMeta& meta);
std::string rate_table_csv(const RateTable& t, const ReportMeta& meta);
std::string averaging_csv(const AveragingTable& t, const ReportMeta& meta);
std::string opnorm_csv(const OperatorDemo& d, const ReportMeta& meta);
std::string oracle_compare_csv(const std::vector<OracleCompareRow>& rows, const ReportMeta& meta);

std::string solve_report_json(const SolveReport& r, const ReportMeta& meta);
std::string sweep_json(const SweepResult& s, const ReportMeta& meta);
std::string averaging_json(const AveragingTable& t, const ReportMeta& meta);
std::string opnorm_json(const OperatorDemo& d, const ReportMeta& meta);
std::string oracle_compare_json(const std::vector<OracleCompareRow>& rows, const ReportMeta& meta);
std::string check_json(const EllipticityReport& e, const MembershipReport& m, const Matrix& A0,
                       const NondegeneracyReport& nd, const SufficientConditionReport& sc,
                       const ReportMeta& meta);
std::string no_convergence_json(const NoConvergence& e, double eps, const ReportMeta& meta);

/// Writes `content` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace defhom
