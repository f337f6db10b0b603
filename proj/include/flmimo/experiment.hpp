/**
 * @file experiment.hpp
 * @brief Seeded Monte-Carlo sweeps over drops and schemes with CSV output.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flmimo/sca.hpp"
#include "flmimo/types.hpp"

namespace flmimo::experiment {

enum class Scheme { kOptSb, kOptAsyn, kOptSyn, kHeuSb, kHeuAsyn, kHeuSyn };

const char* scheme_name(Scheme s);
std::optional<Scheme> scheme_from_name(const std::string& name);

enum class SweepKind { kNone, kAntennas, kQos };

struct ExperimentPlan {
  NetworkConfig scenario;
  SweepKind sweep = SweepKind::kNone;
  std::vector<double> values;  // M or t_qos values; ignored for kNone
  std::vector<Scheme> schemes;
  int n_drops = 1;
  std::uint64_t seed = 0;
  sca::ScaOptions sca_opts;
  sca::PenaltyConfig penalty;

  // Throws std::invalid_argument on empty schemes, n_drops < 1, or sweep
  // values that break the scenario invariants (e.g. M <= K).
  void validate() const;
};

struct ResultRow {
  std::string sweep_param;  // "m", "qos", or "none"
  double value = 0;
  Scheme scheme = Scheme::kOptSb;
  int drop = 0;
  EnergyBreakdown energy;
  int iters = 0;
  bool feasible = false;
  std::string note;  // failure reason, not serialized
};

struct RunResult {
  std::vector<ResultRow> rows;  // ordered by (value, scheme, drop)
  int failures = 0;

  // Schema: sweep_param,value,scheme,drop,e_dl,e_comp,e_ul,total,iters,feasible
  std::string csv() const;
};

/**
 * Executes the plan. Drops share UE placements across schemes and sweep
 * values (placement seed = plan.seed + drop), so comparisons are paired.
 * Tasks run on a small thread pool; row order is deterministic regardless of
 * scheduling. Per-drop failures become feasible=0 rows.
 */
RunResult run_plan(const ExperimentPlan& plan);

// Variable/constraint counts of the convexified subproblems plus the
// resulting interior-point complexity estimates.
struct SizeReport {
  int K = 0;
  long v_sb = 0, l_sb = 0, q_sb = 0;
  long v_asyn = 0, l_asyn = 0, q_asyn = 0;
  long v_syn = 0, l_syn = 0, q_syn = 0;
  double cx_sb = 0, cx_asyn = 0, cx_syn = 0;  // sqrt(L+Q) (V+L+Q) V^2
  std::string text() const;
};

SizeReport report_problem_sizes(int K);

}  // namespace flmimo::experiment
