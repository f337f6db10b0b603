// Command-line harness: seeded benchmark sweeps (run), subproblem size
// reports (sizes), and per-iteration convergence traces (trace).

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "flmimo/config_io.hpp"
#include "flmimo/experiment.hpp"
#include "flmimo/models.hpp"
#include "flmimo/netgen.hpp"
#include "flmimo/sca.hpp"

using namespace flmimo;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadConfig = 2;
constexpr int kExitAllInfeasible = 3;

NetworkConfig load_or_default(const std::string& path) {
  if (path.empty()) return NetworkConfig::reference();
  return load_config_file(path);
}

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

int cmd_run(const std::string& config_path, const std::string& sweep,
            const std::string& values_csv, const std::string& schemes_csv, int drops,
            std::uint64_t seed, const std::string& out_path) {
  experiment::ExperimentPlan plan;
  plan.scenario = load_or_default(config_path);
  if (sweep == "m") {
    plan.sweep = experiment::SweepKind::kAntennas;
  } else if (sweep == "qos") {
    plan.sweep = experiment::SweepKind::kQos;
  } else if (sweep == "none") {
    plan.sweep = experiment::SweepKind::kNone;
  } else {
    std::cerr << "run: unknown sweep '" << sweep << "'\n";
    return kExitBadConfig;
  }
  plan.values = parse_values(values_csv);
  std::stringstream ss(schemes_csv);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name.empty()) continue;
    const auto s = experiment::scheme_from_name(name);
    if (!s) {
      std::cerr << "run: unknown scheme '" << name << "'\n";
      return kExitBadConfig;
    }
    plan.schemes.push_back(*s);
  }
  plan.n_drops = drops;
  plan.seed = seed;
  plan.validate();

  const auto result = experiment::run_plan(plan);
  const std::string csv = result.csv();
  if (out_path.empty() || out_path == "-") {
    std::cout << csv;
  } else {
    std::ofstream f(out_path);
    if (!f) {
      std::cerr << "run: cannot write '" << out_path << "'\n";
      return kExitBadConfig;
    }
    f << csv;
  }
  for (const auto& r : result.rows) {
    if (!r.feasible && !r.note.empty()) {
      std::cerr << "note: " << scheme_name(r.scheme) << " drop " << r.drop << " value "
                << r.value << ": " << r.note << "\n";
    }
  }
  if (result.failures == static_cast<int>(result.rows.size())) return kExitAllInfeasible;
  return kExitOk;
}

int cmd_trace(const std::string& config_path, const std::string& scheme_name_str,
              std::uint64_t seed, const std::string& out_path) {
  const NetworkConfig config = load_or_default(config_path);
  const auto scheme = experiment::scheme_from_name(scheme_name_str);
  if (!scheme) {
    std::cerr << "trace: unknown scheme '" << scheme_name_str << "'\n";
    return kExitBadConfig;
  }
  const auto placement = netgen::place_ues(config, seed);
  const auto state = netgen::build_channel_state(config, placement);
  sca::ScaOptions opts;
  opts.seed = seed;

  sca::ScaTrace trace;
  switch (*scheme) {
    case experiment::Scheme::kOptSb: {
      opts.max_iter = 100;
      trace = sca::run_algorithm1(state, config, sca::PenaltyConfig{}, opts).trace;
      break;
    }
    case experiment::Scheme::kOptAsyn:
    case experiment::Scheme::kOptSyn: {
      opts.max_iter = 60;
      const auto design = *scheme == experiment::Scheme::kOptAsyn
                              ? SingleDesign::kAsynchronous
                              : SingleDesign::kSynchronous;
      trace = sca::run_algorithm2(state, config, design, opts).trace;
      break;
    }
    default:
      std::cerr << "trace: heuristic schemes have no iteration trace\n";
      return kExitBadConfig;
  }

  if (out_path.empty() || out_path == "-") {
    trace.write_csv(std::cout);
  } else {
    std::ofstream f(out_path);
    if (!f) {
      std::cerr << "trace: cannot write '" << out_path << "'\n";
      return kExitBadConfig;
    }
    trace.write_csv(f);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-minimizing resource allocation for federated learning over massive MIMO"};
  app.require_subcommand(1);

  std::string config_path, sweep = "none", values_csv, schemes_csv = "HEU_Asyn";
  std::string out_path;
  int drops = 1, size_k = 10;
  std::uint64_t seed = 1;
  std::string trace_scheme = "OPT_Asyn";

  auto* run = app.add_subcommand("run", "Run a benchmark plan and write CSV results");
  run->add_option("--config", config_path, "Scenario file (key = value)");
  run->add_option("--sweep", sweep, "Sweep kind: m | qos | none")->capture_default_str();
  run->add_option("--values", values_csv, "Comma-separated sweep values");
  run->add_option("--schemes", schemes_csv,
                  "Comma-separated subset of "
                  "OPT_SB,OPT_Asyn,OPT_Syn,HEU_SB,HEU_Asyn,HEU_Syn")
      ->capture_default_str();
  run->add_option("--drops", drops, "Monte-Carlo drops per sweep point")->capture_default_str();
  run->add_option("--seed", seed, "Base placement seed")->capture_default_str();
  run->add_option("--out", out_path, "Output CSV path ('-' for stdout)");

  auto* sizes = app.add_subcommand("sizes", "Print subproblem size and complexity counts");
  sizes->add_option("--k", size_k, "Number of UEs")->capture_default_str();

  auto* trace = app.add_subcommand("trace", "Write one optimizer run's iteration trace");
  trace->add_option("--config", config_path, "Scenario file (key = value)");
  trace->add_option("--scheme", trace_scheme, "OPT_SB | OPT_Asyn | OPT_Syn")
      ->capture_default_str();
  trace->add_option("--seed", seed, "Placement seed")->capture_default_str();
  trace->add_option("--out", out_path, "Output CSV path ('-' for stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(config_path, sweep, values_csv, schemes_csv, drops, seed, out_path);
    }
    if (sizes->parsed()) {
      std::cout << experiment::report_problem_sizes(size_k).text();
      return kExitOk;
    }
    if (trace->parsed()) {
      return cmd_trace(config_path, trace_scheme, seed, out_path);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAllInfeasible;
  }
  return kExitOk;
}
