#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "ccopf/detail/csv.hpp"
#include "ccopf/errors.hpp"
#include "ccopf/grid_model.hpp"
#include "ccopf/powerflow.hpp"
#include "ccopf/scenario.hpp"
#include "ccopf/socp_opf.hpp"

namespace ccopf {

struct CcConfig {
  double threshold_p_kw = 200.0;
  std::optional<double> threshold_q_kvar;  // OR-ed into the violation test when set
  double epsilon = 0.05;
  std::size_t n_scenarios = 1000;
  std::uint64_t seed = 7;
  double tau_step = 0.01;
  std::size_t max_iterations = 10000;
  unsigned workers = 0;  // 0 = hardware concurrency
  ToleranceConfig tolerances = opf_tolerances();
  PfOptions pf;

  void validate() const {
    if (!(threshold_p_kw > 0.0)) throw ValidationError("threshold_p must be positive");
    if (threshold_q_kvar && !(*threshold_q_kvar > 0.0)) throw ValidationError("threshold_q must be positive");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ValidationError("epsilon must lie in (0, 1)");
    if (!(tau_step > 0.0)) throw ValidationError("tau_step must be positive");
    if (n_scenarios < 1) throw ValidationError("at least one scenario is required");
    if (max_iterations < 1) throw ValidationError("max_iterations must be at least 1");
  }
};

enum class CcStatus { Satisfied, Exhausted };

inline const char* to_string(CcStatus s) { return s == CcStatus::Satisfied ? "satisfied" : "exhausted"; }

struct TraceRow {
  std::size_t iter = 0;
  double tau = 0.0;
  double i_p = 0.0;  // of the dispatch evaluated in this iteration
  double i_q = 0.0;
  double z_vio = 0.0;
  double cost_usd = 0.0;
};

struct CcResult {
  CcStatus status = CcStatus::Exhausted;
  double final_tau = 0.0;
  ParticipationRatios ratios_initial;
  ParticipationRatios ratios_final;
  double z_vio_final = 0.0;
  double cost_final = 0.0;
  Dispatch dispatch_stage1;
  Dispatch dispatch_final;
  std::vector<TraceRow> trace;
  std::vector<CompensationRecord> compensation_final;  // scenario-id order
};

/// Share of records whose |delta_p| exceeds the threshold (or |delta_q| when a
/// reactive threshold is given), counting non-converged scenarios as violations.
inline double violation_index(const std::vector<CompensationRecord>& records, double threshold_p_kw,
                              std::optional<double> threshold_q_kvar = std::nullopt) {
  if (records.empty()) throw DomainError("violation index of an empty record set");
  std::size_t violating = 0;
  for (const auto& r : records) {
    const bool bad = !r.converged || std::abs(r.delta_p_kw) > threshold_p_kw ||
                     (threshold_q_kvar && std::abs(r.delta_q_kvar) > *threshold_q_kvar);
    if (bad) ++violating;
  }
  return static_cast<double>(violating) / static_cast<double>(records.size());
}

/// Power flow of every scenario against `dispatch`, evaluated on `workers`
/// threads; output is in scenario order regardless of the thread count.
inline std::vector<CompensationRecord> evaluate_scenarios(const Network& net, const Dispatch& dispatch,
                                                          const std::vector<Scenario>& scenarios,
                                                          unsigned workers = 0, const PfOptions& pf = {}) {
  std::vector<CompensationRecord> out(scenarios.size());
  const auto eval = [&](std::size_t k) {
    const auto sol = solve_pf(net, scenario_injections(dispatch, scenarios[k], net), pf);
    if (sol.converged) {
      out[k] = compensation(sol, dispatch, scenarios[k].id);
    } else {
      out[k] = {scenarios[k].id, sol.slack_p_kw - dispatch.grid_p_kw, sol.slack_q_kvar - dispatch.grid_q_kvar,
                false};
    }
  };
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, scenarios.size()));
  if (workers <= 1) {
    for (std::size_t k = 0; k < scenarios.size(); ++k) eval(k);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < scenarios.size(); k = next++) {
        try {
          eval(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

/// Largest |delta_p| and |delta_q| over a record set.
struct CompensationPeak {
  double max_abs_p_kw = 0.0;
  double max_abs_q_kvar = 0.0;
};

inline CompensationPeak compensation_peak(const std::vector<CompensationRecord>& records) {
  CompensationPeak peak;
  for (const auto& r : records) {
    peak.max_abs_p_kw = std::max(peak.max_abs_p_kw, std::abs(r.delta_p_kw));
    peak.max_abs_q_kvar = std::max(peak.max_abs_q_kvar, std::abs(r.delta_q_kvar));
  }
  return peak;
}

/// Two-stage chance-constrained scheduling loop. Solves the first-stage OPF,
/// samples the scenario set once, then raises tau in steps of tau_step until
/// the violation index of the second-stage dispatch is at most epsilon.
inline CcResult run(const Network& net, const Prices& prices, const UncertaintyModel& model,
                    const CcConfig& config) {
  config.validate();
  model.validate();
  CcResult result;

  {
    auto [program, map] = build_stage1(net, prices);
    try {
      result.dispatch_stage1 = solve_dispatch(net, program, map, config.tolerances);
    } catch (const Error& e) {
      throw SolverError(std::string("stage 1: ") + e.what());
    }
  }
  result.ratios_initial = participation_ratios(result.dispatch_stage1, net);
  const double ip = result.ratios_initial.i_p;
  const auto scenarios = sample_scenarios(net, model, config.n_scenarios, config.seed);

  for (std::size_t k = 0;; ++k) {
    const double tau = std::min(static_cast<double>(k) * config.tau_step, ip);
    Dispatch dispatch;
    try {
      auto [program, map] = build_modified(net, prices, result.ratios_initial, tau);
      dispatch = solve_dispatch(net, program, map, config.tolerances);
    } catch (const Error& e) {
      throw SolverError("iteration " + std::to_string(k) + " (tau=" + detail::format_number(tau) + "): " +
                        e.what());
    }
    auto records = evaluate_scenarios(net, dispatch, scenarios, config.workers, config.pf);
    const double z = violation_index(records, config.threshold_p_kw, config.threshold_q_kvar);
    const auto ratios = participation_ratios(dispatch, net);
    result.trace.push_back({k, tau, ratios.i_p, ratios.i_q, z, dispatch.objective_usd});

    const bool satisfied = z <= config.epsilon;
    const bool exhausted = tau >= ip || k + 1 >= config.max_iterations;
    if (satisfied || exhausted) {
      result.status = satisfied ? CcStatus::Satisfied : CcStatus::Exhausted;
      result.final_tau = tau;
      result.ratios_final = ratios;
      result.z_vio_final = z;
      result.cost_final = dispatch.objective_usd;
      result.dispatch_final = std::move(dispatch);
      result.compensation_final = std::move(records);
      return result;
    }
  }
}

// ---------------------------------------------------------------------------
// CSV reports

inline void write_trace(std::ostream& out, const CcResult& r) {
  using detail::format_number;
  detail::write_row(out, {"iter", "tau", "i_p", "i_q", "z_vio", "cost_usd"});
  for (const auto& t : r.trace) {
    detail::write_row(out, {std::to_string(t.iter), format_number(t.tau), format_number(t.i_p),
                            format_number(t.i_q), format_number(t.z_vio), format_number(t.cost_usd)});
  }
}

inline void write_compensation(std::ostream& out, const std::vector<CompensationRecord>& records) {
  using detail::format_number;
  detail::write_row(out, {"scenario_id", "delta_p_kw", "delta_q_kvar", "converged"});
  for (const auto& c : records) {
    detail::write_row(out, {std::to_string(c.scenario_id), format_number(c.delta_p_kw),
                            format_number(c.delta_q_kvar), c.converged ? "1" : "0"});
  }
}

inline void write_result(std::ostream& out, const CcResult& r) {
  using detail::format_number;
  detail::write_row(out, {"status", "iterations", "final_tau", "i_p_initial", "i_q_initial", "i_p_final",
                          "i_q_final", "z_vio_final", "cost_usd", "grid_p_kw", "grid_q_kvar"});
  detail::write_row(out, {to_string(r.status), std::to_string(r.trace.size()), format_number(r.final_tau),
                          format_number(r.ratios_initial.i_p), format_number(r.ratios_initial.i_q),
                          format_number(r.ratios_final.i_p), format_number(r.ratios_final.i_q),
                          format_number(r.z_vio_final), format_number(r.cost_final),
                          format_number(r.dispatch_final.grid_p_kw), format_number(r.dispatch_final.grid_q_kvar)});
}

}  // namespace ccopf
