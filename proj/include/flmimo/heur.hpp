/**
 * @file heur.hpp
 * @brief Baseline allocation schemes: inverse-beta power weighting, rate-led
 *        session ordering, and just-in-time computing frequencies.
 *
 * The heuristics follow their defining formulas exactly; when a scenario
 * leaves them infeasible (negative time budget, frequency above f_max,
 * singular session system) they report the reason instead of repairing.
 */
#pragma once

#include <optional>
#include <string>

#include "flmimo/types.hpp"

namespace flmimo::heur {

struct SbOutcome {
  std::optional<SbVariables> vars;
  std::string reason;  // set when vars is empty
  bool feasible() const { return vars.has_value(); }
};

struct SingleOutcome {
  std::optional<SingleSessionVariables> vars;
  std::string reason;
  bool feasible() const { return vars.has_value(); }
};

// Session-based baseline: everyone starts in downlink session 1 and finishes
// in uplink session K; each session sheds (downlink) or adds (uplink) the
// highest-rate UE; power within a session is proportional to 1/beta over the
// active set; session lengths solve the payload system; frequencies spend
// exactly the remaining QoS budget.
SbOutcome heu_sb(const ChannelState& state, const NetworkConfig& config);

// Single-session baselines with inverse-beta power weights. The asynchronous
// variant sizes f_k from the per-UE leftover budget, the synchronous one from
// the worst-case transmission times.
SingleOutcome heu_asyn(const ChannelState& state, const NetworkConfig& config);
SingleOutcome heu_syn(const ChannelState& state, const NetworkConfig& config);

}  // namespace flmimo::heur
