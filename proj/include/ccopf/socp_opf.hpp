#pragma once

// Branch-flow ACOPF with DERs, relaxed to a second-order cone program.
//
// Per line (n, i) with series admittance y = g + jb (b = -x/(r^2+x^2)):
//   U_n = V_n^2 / sqrt(2)
//   R   = V_n V_i cos(theta_n - theta_i)   (symmetric in direction)
//   I   = V_n V_i sin(theta_n - theta_i)   (antisymmetric in direction)
//   P_ni = sqrt(2) g U_n - g R - b I       P_in = sqrt(2) g U_i - g R + b I
//   Q_ni = -sqrt(2) b U_n + b R - g I      Q_in = -sqrt(2) b U_i + b R + g I
//   2 U_n U_i >= R^2 + I^2
// All powers are per-unit on Network::base_mva; costs are $ per per-unit-hour.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ccopf/conic.hpp"
#include "ccopf/conic_solver.hpp"
#include "ccopf/grid_model.hpp"

namespace ccopf {

inline constexpr std::size_t kNoVar = std::numeric_limits<std::size_t>::max();
inline constexpr double kSqrt2 = 1.41421356237309504880;

struct LineVars {
  std::size_t r = kNoVar;
  std::size_t i = kNoVar;
  std::size_t p_fwd = kNoVar;  // from_bus -> to_bus
  std::size_t p_bwd = kNoVar;  // to_bus -> from_bus
  std::size_t q_fwd = kNoVar;
  std::size_t q_bwd = kNoVar;
};

/// Decision variables of one asset; unused slots hold kNoVar.
struct AssetVars {
  std::size_t p = kNoVar;    // P^S, P^DR, P^pv1, P^pv2, P^pv3
  std::size_t q = kNoVar;    // Q^DR, Q^CC, Q^pv1, Q^pv3
  std::size_t soc = kNoVar;  // SE
  std::size_t cap = kNoVar;  // apparent-power cap helper, fixed at S/sqrt(2)
};

struct VariableMap {
  std::vector<std::size_t> u;  // per bus
  std::size_t grid_p = kNoVar;
  std::size_t grid_q = kNoVar;
  std::vector<LineVars> lines;
  std::vector<AssetVars> assets;
  std::vector<std::size_t> line_cone;  // index into soc_cones per line
  std::optional<std::size_t> cap_p_row;  // index into linear_ineq
  std::optional<std::size_t> cap_q_row;
};

struct ParticipationRatios {
  double i_p = 0.0;
  double i_q = 0.0;

  /// DER output above total load; allowed but worth reporting.
  [[nodiscard]] bool exceeds_load() const { return i_p > 1.0 || i_q > 1.0; }
};

/// Second-stage settings: PV1 output scaled by (I^p - tau)/I^p and system-wide
/// DER caps (I^p - tau)*sum(D^P) and ((I^p - tau)/I^p)*I^q*sum(D^Q).
struct ParticipationCaps {
  ParticipationRatios ratios;
  double tau = 0.0;
};

namespace detail {

inline std::pair<ConicProgram, VariableMap> build_opf(const Network& net, const Prices& prices,
                                                      const std::optional<ParticipationCaps>& caps) {
  validate_prices(prices);
  ConicProgram prog;
  VariableMap map;
  const double sb = net.s_base_kw();
  const std::size_t nb = net.buses.size();

  double pv1_factor = 1.0;
  if (caps) {
    const auto& r = caps->ratios;
    if (caps->tau < 0.0 || caps->tau > r.i_p || (r.i_p == 0.0 && caps->tau > 0.0)) {
      throw DomainError("tau must lie in [0, I^p]");
    }
    pv1_factor = r.i_p > 0.0 ? (r.i_p - caps->tau) / r.i_p : 1.0;
  }

  map.u.resize(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    const auto& b = net.buses[k];
    const std::string name = "U_" + std::to_string(b.id);
    if (k == net.substation()) {
      map.u[k] = prog.add_variable(name, 1.0 / kSqrt2, 1.0 / kSqrt2);
    } else {
      map.u[k] = prog.add_variable(name, b.v_min_pu * b.v_min_pu / kSqrt2, b.v_max_pu * b.v_max_pu / kSqrt2);
    }
  }
  const int sub_id = net.buses[net.substation()].id;
  map.grid_p = prog.add_variable("Pg_" + std::to_string(sub_id), -kInf, kInf, prices.wholesale * sb);
  map.grid_q = prog.add_variable("Qg_" + std::to_string(sub_id));

  // Nodal balance terms collected per bus: generation - outgoing flows = demand.
  std::vector<std::vector<Term>> p_bal(nb);
  std::vector<std::vector<Term>> q_bal(nb);
  p_bal[net.substation()].push_back({map.grid_p, 1.0});
  q_bal[net.substation()].push_back({map.grid_q, 1.0});

  map.lines.resize(net.lines.size());
  for (std::size_t k = 0; k < net.lines.size(); ++k) {
    const auto& l = net.lines[k];
    const std::string tag = std::to_string(l.from_bus) + "_" + std::to_string(l.to_bus);
    const auto y = net.admittance_pu(l);
    const double cap = l.capacity_kw / sb;
    const auto n = net.bus_index(l.from_bus);
    const auto i = net.bus_index(l.to_bus);
    auto& v = map.lines[k];
    v.r = prog.add_variable("R_" + tag);
    v.i = prog.add_variable("I_" + tag);
    v.p_fwd = prog.add_variable("Pl_" + tag, -cap, cap);
    v.p_bwd = prog.add_variable("Pl_" + std::to_string(l.to_bus) + "_" + std::to_string(l.from_bus), -cap, cap);
    v.q_fwd = prog.add_variable("Ql_" + tag);
    v.q_bwd = prog.add_variable("Ql_" + std::to_string(l.to_bus) + "_" + std::to_string(l.from_bus));

    prog.add_equality({{v.p_fwd, 1.0}, {map.u[n], -kSqrt2 * y.g}, {v.r, y.g}, {v.i, y.b}}, 0.0, "pflow_" + tag);
    prog.add_equality({{v.p_bwd, 1.0}, {map.u[i], -kSqrt2 * y.g}, {v.r, y.g}, {v.i, -y.b}}, 0.0, "pflow_rev_" + tag);
    prog.add_equality({{v.q_fwd, 1.0}, {map.u[n], kSqrt2 * y.b}, {v.r, -y.b}, {v.i, y.g}}, 0.0, "qflow_" + tag);
    prog.add_equality({{v.q_bwd, 1.0}, {map.u[i], kSqrt2 * y.b}, {v.r, -y.b}, {v.i, -y.g}}, 0.0, "qflow_rev_" + tag);
    map.line_cone.push_back(prog.soc_cones.size());
    prog.add_rotated_cone(map.u[n], map.u[i], {v.r, v.i}, "cone_" + tag);

    p_bal[n].push_back({v.p_fwd, -1.0});
    p_bal[i].push_back({v.p_bwd, -1.0});
    q_bal[n].push_back({v.q_fwd, -1.0});
    q_bal[i].push_back({v.q_bwd, -1.0});
  }

  std::vector<Term> der_p;  // DR + PV active power
  std::vector<Term> der_q;  // DR + PV1 + PV3 reactive power
  map.assets.resize(net.assets.size());
  for (std::size_t a = 0; a < net.assets.size(); ++a) {
    const auto& asset = net.assets[a];
    if (!net.has_bus(asset.bus)) {
      throw ModelError("asset references missing bus " + std::to_string(asset.bus));
    }
    const auto k = net.bus_index(asset.bus);
    const auto& bus = net.buses[k];
    const std::string tag = std::string(to_string(asset.kind())) + "_" + std::to_string(a) + "_b" +
                            std::to_string(asset.bus);
    auto& v = map.assets[a];
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, StorageParams>) {
            v.p = prog.add_variable("PS_" + tag, p.r_min_kw / sb, p.r_max_kw / sb);
            v.soc = prog.add_variable("SE_" + tag, p.soc_min_kwh / sb, p.soc_max_kwh / sb);
            prog.add_equality({{v.soc, 1.0}, {v.p, 1.0}}, p.available_energy_kwh / sb, "soc_" + tag);
            p_bal[k].push_back({v.p, 1.0});
          } else if constexpr (std::is_same_v<T, DemandResponseParams>) {
            v.p = prog.add_variable("PDR_" + tag, 0.0, p.dr_max * bus.p_demand_kw / sb, prices.dr * sb);
            v.q = prog.add_variable("QDR_" + tag);
            const double ratio = bus.p_demand_kw > 0.0 ? bus.q_demand_kvar / bus.p_demand_kw : 0.0;
            prog.add_equality({{v.q, 1.0}, {v.p, -ratio}}, 0.0, "drpf_" + tag);
            p_bal[k].push_back({v.p, 1.0});
            q_bal[k].push_back({v.q, 1.0});
            der_p.push_back({v.p, 1.0});
            der_q.push_back({v.q, 1.0});
          } else if constexpr (std::is_same_v<T, CapacitorParams>) {
            v.q = prog.add_variable("QCC_" + tag, 0.0, p.q_max_kvar / sb);
            q_bal[k].push_back({v.q, 1.0});
          } else if constexpr (std::is_same_v<T, Pv1Params>) {
            const double fixed = pv1_factor * p.p_cap_kw / sb;
            v.p = prog.add_variable("Ppv1_" + tag, fixed, fixed, prices.pv * sb);
            v.q = prog.add_variable("Qpv1_" + tag);
            v.cap = prog.add_variable("S_" + tag, p.s_cap_kva / sb / kSqrt2, p.s_cap_kva / sb / kSqrt2);
            prog.add_rotated_cone(v.cap, v.cap, {v.p, v.q}, "pv1_" + tag);
            p_bal[k].push_back({v.p, 1.0});
            q_bal[k].push_back({v.q, 1.0});
            der_p.push_back({v.p, 1.0});
            der_q.push_back({v.q, 1.0});
          } else if constexpr (std::is_same_v<T, Pv2Params>) {
            v.p = prog.add_variable("Ppv2_" + tag, 0.0, p.p_cap_kw / sb, prices.pv * sb);
            p_bal[k].push_back({v.p, 1.0});
            der_p.push_back({v.p, 1.0});
          } else {
            v.p = prog.add_variable("Ppv3_" + tag, 0.0, p.p_cap_kw / sb, prices.pv * sb);
            v.q = prog.add_variable("Qpv3_" + tag);
            v.cap = prog.add_variable("S_" + tag, p.s_cap_kva / sb / kSqrt2, p.s_cap_kva / sb / kSqrt2);
            prog.add_rotated_cone(v.cap, v.cap, {v.p, v.q}, "pv3_" + tag);
            p_bal[k].push_back({v.p, 1.0});
            q_bal[k].push_back({v.q, 1.0});
            der_p.push_back({v.p, 1.0});
            der_q.push_back({v.q, 1.0});
          }
        },
        asset.params);
  }

  for (std::size_t k = 0; k < nb; ++k) {
    const auto& b = net.buses[k];
    prog.add_equality(p_bal[k], b.p_demand_kw / sb, "pbal_" + std::to_string(b.id));
    prog.add_equality(q_bal[k], b.q_demand_kvar / sb, "qbal_" + std::to_string(b.id));
  }

  if (caps) {
    const auto& r = caps->ratios;
    const double p_cap = (r.i_p - caps->tau) * net.total_p_demand_kw() / sb;
    const double q_cap = pv1_factor * r.i_q * net.total_q_demand_kvar() / sb;
    map.cap_p_row = prog.linear_ineq.size();
    prog.add_range(der_p, -kInf, p_cap, "der_p_cap");
    map.cap_q_row = prog.linear_ineq.size();
    prog.add_range(der_q, -kInf, q_cap, "der_q_cap");
  }
  return {std::move(prog), std::move(map)};
}

}  // namespace detail

/// First-stage program: cost-minimizing dispatch with PV1 at full available power.
inline std::pair<ConicProgram, VariableMap> build_stage1(const Network& net, const Prices& prices) {
  return detail::build_opf(net, prices, std::nullopt);
}

/// Second-stage program with participation reduced by tau.
/// Throws DomainError unless 0 <= tau <= ratios.i_p.
inline std::pair<ConicProgram, VariableMap> build_modified(const Network& net, const Prices& prices,
                                                           const ParticipationRatios& ratios, double tau) {
  return detail::build_opf(net, prices, ParticipationCaps{ratios, tau});
}

struct AssetSetpoint {
  double p_kw = 0.0;
  double q_kvar = 0.0;
  double soc_kwh = 0.0;  // storage only
};

/// Sending-end flows in both directions of a line.
struct LineFlow {
  double p_from_kw = 0.0;
  double q_from_kvar = 0.0;
  double p_to_kw = 0.0;  // injected into the line at to_bus
  double q_to_kvar = 0.0;
};

struct Dispatch {
  double grid_p_kw = 0.0;
  double grid_q_kvar = 0.0;
  std::vector<AssetSetpoint> assets;  // aligned with Network::assets
  std::vector<double> voltage_pu;     // aligned with Network::buses
  std::vector<double> angle_rad;      // recovered along the tree, substation at 0
  std::vector<LineFlow> flows;        // aligned with Network::lines
  double objective_usd = 0.0;
};

/// Maps an optimal solution back to physical units. Throws ExtractionError if a
/// squared-voltage variable is negative beyond tolerance.
inline Dispatch extract_dispatch(const Network& net, const VariableMap& map, const Solution& solution,
                                 double tolerance = 1e-8) {
  if (solution.status != SolveStatus::Optimal) throw ExtractionError("solution is not optimal");
  const auto& x = solution.x;
  const double sb = net.s_base_kw();
  Dispatch d;
  d.grid_p_kw = x[map.grid_p] * sb;
  d.grid_q_kvar = x[map.grid_q] * sb;
  d.objective_usd = solution.objective_value;

  d.voltage_pu.resize(net.buses.size());
  for (std::size_t k = 0; k < net.buses.size(); ++k) {
    const double u = x[map.u[k]];
    if (u < -tolerance) {
      throw ExtractionError("negative squared voltage at bus " + std::to_string(net.buses[k].id));
    }
    d.voltage_pu[k] = std::sqrt(kSqrt2 * std::max(0.0, u));
  }

  d.flows.resize(net.lines.size());
  for (std::size_t k = 0; k < net.lines.size(); ++k) {
    const auto& v = map.lines[k];
    d.flows[k] = {x[v.p_fwd] * sb, x[v.q_fwd] * sb, x[v.p_bwd] * sb, x[v.q_bwd] * sb};
  }

  d.angle_rad.assign(net.buses.size(), 0.0);
  for (auto k : net.bfs_order()) {
    if (k == net.substation()) continue;
    const auto li = net.parent_line()[k];
    const auto& v = map.lines[li];
    const double delta = std::atan2(x[v.i], x[v.r]);  // theta_from - theta_to
    const auto parent = net.parent()[k];
    const bool forward = net.bus_index(net.lines[li].from_bus) == parent;
    d.angle_rad[k] = forward ? d.angle_rad[parent] - delta : d.angle_rad[parent] + delta;
  }

  d.assets.resize(net.assets.size());
  for (std::size_t a = 0; a < net.assets.size(); ++a) {
    const auto& v = map.assets[a];
    auto& s = d.assets[a];
    if (v.p != kNoVar) s.p_kw = x[v.p] * sb;
    if (v.q != kNoVar) s.q_kvar = x[v.q] * sb;
    if (v.soc != kNoVar) s.soc_kwh = x[v.soc] * sb;
  }
  return d;
}

/// Dispatched DER power over total load. Storage counts only when discharging;
/// capacitors count toward the reactive ratio.
inline ParticipationRatios participation_ratios(const Dispatch& d, const Network& net) {
  const double load_p = net.total_p_demand_kw();
  const double load_q = net.total_q_demand_kvar();
  if (load_p == 0.0) throw DomainError("participation ratio undefined for zero active load");
  double p = 0.0;
  double q = 0.0;
  for (std::size_t a = 0; a < net.assets.size(); ++a) {
    const auto& s = d.assets.at(a);
    switch (net.assets[a].kind()) {
      case DerKind::Storage: p += std::max(s.p_kw, 0.0); break;
      case DerKind::Capacitor: q += s.q_kvar; break;
      case DerKind::Pv2: p += s.p_kw; break;
      case DerKind::DemandResponse:
      case DerKind::Pv1:
      case DerKind::Pv3:
        p += s.p_kw;
        q += s.q_kvar;
        break;
    }
  }
  return {p / load_p, load_q != 0.0 ? q / load_q : 0.0};
}

struct ExactnessReport {
  std::vector<double> gap;  // 2 U_n U_i - R^2 - I^2 per line, per-unit
  double max_gap = 0.0;  // largest |gap|
  std::size_t worst_line = 0;

  [[nodiscard]] bool exact(double tolerance = 1e-6) const { return max_gap <= tolerance; }
};

inline ExactnessReport exactness_report(const ConicProgram& program, const VariableMap& map,
                                        const std::vector<double>& x) {
  ExactnessReport r;
  r.gap.reserve(map.line_cone.size());
  for (std::size_t k = 0; k < map.line_cone.size(); ++k) {
    const double g = cone_gap(program.soc_cones[map.line_cone[k]], x);
    r.gap.push_back(g);
    if (std::abs(g) > r.max_gap) {
      r.max_gap = std::abs(g);
      r.worst_line = k;
    }
  }
  return r;
}

inline ExactnessReport exactness_report(const ConicProgram& program, const VariableMap& map,
                                        const Solution& solution) {
  return exactness_report(program, map, solution.x);
}

/// Tolerances used for OPF solves: the default feasibility and cone limits with a
/// gap tight enough that line cones close to within the exactness tolerance.
inline ToleranceConfig opf_tolerances() {
  ToleranceConfig tol;
  tol.gap = 1e-8;
  return tol;
}

/// Builds, solves and extracts in one call. Throws SolverError if the solve is
/// not optimal.
inline Dispatch solve_dispatch(const Network& net, const ConicProgram& program, const VariableMap& map,
                               const ToleranceConfig& tol, Solution* solution_out = nullptr) {
  auto sol = solve(program, tol);
  if (sol.status != SolveStatus::Optimal) {
    throw SolverError(std::string("OPF solve ended with status ") + to_string(sol.status) +
                      " (primal residual " + detail::format_number(sol.primal_residual) + ")");
  }
  auto d = extract_dispatch(net, map, sol);
  if (solution_out != nullptr) *solution_out = std::move(sol);
  return d;
}

}  // namespace ccopf
