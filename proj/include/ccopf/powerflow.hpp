#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "ccopf/errors.hpp"
#include "ccopf/grid_model.hpp"
#include "ccopf/scenario.hpp"
#include "ccopf/socp_opf.hpp"

namespace ccopf {

/// Net DER injection per bus (aligned with Network::buses). Loads come from the
/// network; the substation entry must stay zero.
struct InjectionSet {
  std::vector<double> p_kw;
  std::vector<double> q_kvar;

  static InjectionSet zeros(const Network& net) {
    return {std::vector<double>(net.buses.size(), 0.0), std::vector<double>(net.buses.size(), 0.0)};
  }
};

struct BranchFlow {
  double p_from_kw = 0.0;  // entering the line at from_bus
  double q_from_kvar = 0.0;
  double p_to_kw = 0.0;  // entering the line at to_bus
  double q_to_kvar = 0.0;
  double p_loss_kw = 0.0;
  double q_loss_kvar = 0.0;
};

struct PfSolution {
  std::vector<double> v_pu;
  std::vector<double> angle_rad;
  double slack_p_kw = 0.0;
  double slack_q_kvar = 0.0;
  std::vector<BranchFlow> flows;
  double loss_p_kw = 0.0;
  double loss_q_kvar = 0.0;
  double max_mismatch_pu = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct PfOptions {
  double tolerance_pu = 1e-8;
  int max_iterations = 100;
};

/// Backward/forward sweep with constant-power loads and the substation held at
/// 1.0 pu angle 0. Returns the last iterate with converged = false when the
/// mismatch does not reach tolerance within max_iterations.
inline PfSolution solve_pf(const Network& net, const InjectionSet& inj, const PfOptions& opt = {}) {
  using cd = std::complex<double>;
  const std::size_t n = net.buses.size();
  if (net.lines.size() + 1 != n || net.bfs_order().size() != n) {
    throw TopologyError("power flow requires a radial network");
  }
  if (inj.p_kw.size() != n || inj.q_kvar.size() != n) {
    throw DomainError("injection set does not match the network bus count");
  }
  const auto root = net.substation();
  if (inj.p_kw[root] != 0.0 || inj.q_kvar[root] != 0.0) {
    throw DomainError("injections at the substation bus are not allowed");
  }
  const double sb = net.s_base_kw();
  const auto& order = net.bfs_order();
  const auto& parent = net.parent();
  const auto& pline = net.parent_line();

  std::vector<cd> load(n);
  for (std::size_t k = 0; k < n; ++k) {
    load[k] = cd(net.buses[k].p_demand_kw - inj.p_kw[k], net.buses[k].q_demand_kvar - inj.q_kvar[k]) / sb;
  }
  std::vector<cd> z(n, cd(0.0, 0.0));
  for (std::size_t k = 0; k < n; ++k) {
    if (k != root) z[k] = net.line_impedance_pu(net.lines[pline[k]]);
  }

  std::vector<cd> v(n, cd(1.0, 0.0));
  std::vector<cd> branch(n, cd(0.0, 0.0));  // current parent -> k, from voltages
  PfSolution out;

  const auto mismatch = [&]() {
    for (std::size_t k = 0; k < n; ++k) {
      if (k != root) branch[k] = (v[parent[k]] - v[k]) / z[k];
    }
    std::vector<cd> into(n, cd(0.0, 0.0));
    for (std::size_t k = 0; k < n; ++k) {
      if (k == root) continue;
      into[k] += branch[k];
      into[parent[k]] -= branch[k];
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == root) continue;
      worst = std::max(worst, std::abs(v[k] * std::conj(into[k]) - load[k]));
    }
    return worst;
  };

  std::vector<cd> j(n);
  const auto sweep = [&]() {
    for (std::size_t k = 0; k < n; ++k) j[k] = std::conj(load[k] / v[k]);  // backward: branch currents
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      if (*it != root) j[parent[*it]] += j[*it];
    }
    for (auto k : order) {  // forward: voltage drops
      if (k != root) v[k] = v[parent[k]] - z[k] * j[k];
    }
  };
  out.max_mismatch_pu = mismatch();
  out.converged = out.max_mismatch_pu <= opt.tolerance_pu;
  while (!out.converged && out.iterations < opt.max_iterations) {
    sweep();
    ++out.iterations;
    out.max_mismatch_pu = mismatch();
    out.converged = out.max_mismatch_pu <= opt.tolerance_pu;
    if (!std::isfinite(out.max_mismatch_pu)) break;
  }
  // A few extra sweeps past tolerance so nodal errors do not pile up in the
  // slack balance; stops as soon as a sweep stops helping.
  for (int extra = 0; out.converged && extra < 5 && out.max_mismatch_pu > 1e-14; ++extra) {
    const auto v_prev = v;
    const double prev = out.max_mismatch_pu;
    sweep();
    out.max_mismatch_pu = mismatch();
    if (!(out.max_mismatch_pu < prev)) {
      v = v_prev;
      out.max_mismatch_pu = mismatch();
      break;
    }
  }

  out.v_pu.resize(n);
  out.angle_rad.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.v_pu[k] = std::abs(v[k]);
    out.angle_rad[k] = std::arg(v[k]);
  }
  cd slack = net.buses[root].p_demand_kw / sb + cd(0.0, net.buses[root].q_demand_kvar / sb);
  out.flows.resize(net.lines.size());
  for (std::size_t k = 0; k < n; ++k) {
    if (k == root) continue;
    const auto p = parent[k];
    const cd send = v[p] * std::conj(branch[k]);
    const cd recv = v[k] * std::conj(branch[k]);
    const cd loss = send - recv;
    if (p == root) slack += send;
    auto& f = out.flows[pline[k]];
    const bool forward = net.bus_index(net.lines[pline[k]].from_bus) == p;
    const cd at_from = forward ? send : -recv;
    const cd at_to = forward ? -recv : send;
    f = {at_from.real() * sb, at_from.imag() * sb, at_to.real() * sb, at_to.imag() * sb,
         loss.real() * sb, loss.imag() * sb};
    out.loss_p_kw += f.p_loss_kw;
    out.loss_q_kvar += f.q_loss_kvar;
  }
  out.slack_p_kw = slack.real() * sb;
  out.slack_q_kvar = slack.imag() * sb;
  return out;
}

/// Injections implied by a dispatch under one scenario realization.
/// DR curtailment (P and Q), PV1/PV3 apparent power (P and Q together) and PV2
/// active power scale by the realized fraction; storage and capacitors stay at
/// their scheduled setpoints.
inline InjectionSet scenario_injections(const Dispatch& d, const Scenario& s, const Network& net) {
  if (d.assets.size() != net.assets.size() || s.fraction.size() != net.assets.size()) {
    throw DomainError("dispatch, scenario and network disagree on asset count");
  }
  auto inj = InjectionSet::zeros(net);
  for (std::size_t a = 0; a < net.assets.size(); ++a) {
    const auto k = net.bus_index(net.assets[a].bus);
    const double f = is_uncertain(net.assets[a].kind()) ? s.fraction[a] : 1.0;
    inj.p_kw[k] += f * d.assets[a].p_kw;
    inj.q_kvar[k] += f * d.assets[a].q_kvar;
  }
  return inj;
}

/// Injections of the dispatch exactly as scheduled.
inline InjectionSet scheduled_injections(const Dispatch& d, const Network& net) {
  Scenario ones;
  ones.fraction.assign(net.assets.size(), 1.0);
  return scenario_injections(d, ones, net);
}

struct CompensationRecord {
  std::size_t scenario_id = 0;
  double delta_p_kw = 0.0;
  double delta_q_kvar = 0.0;
  bool converged = true;
};

/// Real-time slack injection minus the scheduled grid purchase.
inline CompensationRecord compensation(const PfSolution& pf, const Dispatch& d, std::size_t scenario_id = 0) {
  if (!pf.converged) throw DomainError("compensation requires a converged power flow");
  return {scenario_id, pf.slack_p_kw - d.grid_p_kw, pf.slack_q_kvar - d.grid_q_kvar, true};
}

}  // namespace ccopf
