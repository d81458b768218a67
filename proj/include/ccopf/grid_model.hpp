#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "ccopf/detail/csv.hpp"
#include "ccopf/errors.hpp"

namespace ccopf {

// Data model for a balanced radial feeder and the DER assets connected to it.
// All file quantities are physical (kW, kVAR, kWh, ohm); per-unit conversion
// happens through Network::base_mva / Network::base_kv.

struct Bus {
  int id = 0;
  double p_demand_kw = 0.0;
  double q_demand_kvar = 0.0;
  double v_min_pu = 0.95;
  double v_max_pu = 1.05;
  bool is_substation = false;
};

struct Line {
  int from_bus = 0;
  int to_bus = 0;
  double r_ohm = 0.0;
  double x_ohm = 0.0;
  double capacity_kw = 0.0;
};

enum class DerKind { Storage, DemandResponse, Capacitor, Pv1, Pv2, Pv3 };

struct StorageParams {
  double r_min_kw = 0.0;
  double r_max_kw = 0.0;
  double soc_min_kwh = 0.0;
  double soc_max_kwh = 0.0;
  double available_energy_kwh = 0.0;  // stored energy before dispatch
};

struct DemandResponseParams {
  double dr_max = 0.0;  // fraction of bus active demand that may be curtailed
};

struct CapacitorParams {
  double q_max_kvar = 0.0;
};

/// Inverter-controlled reactive power, active power at available maximum.
struct Pv1Params {
  double p_cap_kw = 0.0;
  double s_cap_kva = 0.0;
};

/// Curtailable active power only.
struct Pv2Params {
  double p_cap_kw = 0.0;
};

/// Smart inverter controlling both active and reactive power.
struct Pv3Params {
  double p_cap_kw = 0.0;
  double s_cap_kva = 0.0;
};

// Alternative order matches DerKind.
using DerParams = std::variant<StorageParams, DemandResponseParams, CapacitorParams, Pv1Params,
                               Pv2Params, Pv3Params>;

struct DerAsset {
  int bus = 0;
  DerParams params;

  [[nodiscard]] DerKind kind() const { return static_cast<DerKind>(params.index()); }
};

/// Energy prices in $/kWh.
struct Prices {
  double wholesale = 0.050;
  double pv = 0.030;
  double dr = 0.035;
};

inline void validate_prices(const Prices& p) {
  if (!(p.wholesale >= 0.0) || !(p.pv >= 0.0) || !(p.dr >= 0.0)) {
    throw ValidationError("prices must be nonnegative");
  }
}

inline std::string_view to_string(DerKind kind) {
  switch (kind) {
    case DerKind::Storage: return "storage";
    case DerKind::DemandResponse: return "dr";
    case DerKind::Capacitor: return "capacitor";
    case DerKind::Pv1: return "pv1";
    case DerKind::Pv2: return "pv2";
    case DerKind::Pv3: return "pv3";
  }
  return "unknown";
}

inline DerKind parse_der_kind(std::string_view text) {
  for (auto k : {DerKind::Storage, DerKind::DemandResponse, DerKind::Capacitor, DerKind::Pv1,
                 DerKind::Pv2, DerKind::Pv3}) {
    if (text == to_string(k)) return k;
  }
  throw ParseError("unknown DER kind '" + std::string(text) + "'");
}

inline bool is_uncertain(DerKind kind) {
  return kind == DerKind::DemandResponse || kind == DerKind::Pv1 || kind == DerKind::Pv2 ||
         kind == DerKind::Pv3;
}

/// Series admittance of a branch, y = g + jb with b = -x / (r^2 + x^2).
struct Admittance {
  double g = 0.0;
  double b = 0.0;
};

inline Admittance line_admittance(double resistance, double reactance) {
  const double denom = resistance * resistance + reactance * reactance;
  if (!(denom > 0.0)) throw DegenerateLine("line has zero series impedance");
  return {resistance / denom, -reactance / denom};
}

/// Validated radial network. Construct through make_network() or the loaders;
/// the bus index and the tree orientation are computed once at construction.
class Network {
 public:
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<DerAsset> assets;
  double base_mva = 1.0;
  double base_kv = 12.66;

  [[nodiscard]] double z_base_ohm() const { return base_kv * base_kv / base_mva; }
  [[nodiscard]] double s_base_kw() const { return base_mva * 1000.0; }

  [[nodiscard]] std::size_t bus_index(int id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) throw ValidationError("unknown bus id " + std::to_string(id));
    return it->second;
  }
  [[nodiscard]] bool has_bus(int id) const { return index_.count(id) != 0; }
  [[nodiscard]] std::size_t substation() const { return substation_; }

  [[nodiscard]] std::complex<double> line_impedance_pu(const Line& line) const {
    return {line.r_ohm / z_base_ohm(), line.x_ohm / z_base_ohm()};
  }
  [[nodiscard]] Admittance admittance_pu(const Line& line) const {
    const auto z = line_impedance_pu(line);
    return line_admittance(z.real(), z.imag());
  }

  /// Buses in breadth-first order from the substation.
  [[nodiscard]] const std::vector<std::size_t>& bfs_order() const { return order_; }
  /// Parent bus position of every bus (substation maps to itself).
  [[nodiscard]] const std::vector<std::size_t>& parent() const { return parent_; }
  /// Line index connecting each bus to its parent (unused for the substation).
  [[nodiscard]] const std::vector<std::size_t>& parent_line() const { return parent_line_; }

  [[nodiscard]] double total_p_demand_kw() const {
    double sum = 0.0;
    for (const auto& b : buses) sum += b.p_demand_kw;
    return sum;
  }
  [[nodiscard]] double total_q_demand_kvar() const {
    double sum = 0.0;
    for (const auto& b : buses) sum += b.q_demand_kvar;
    return sum;
  }

  /// Stable identity of an asset independent of its position in `assets`:
  /// kind, bus, and ordinal among assets of the same kind on the same bus.
  [[nodiscard]] std::string asset_key(std::size_t asset) const {
    const auto& a = assets.at(asset);
    int ordinal = 0;
    for (std::size_t k = 0; k < asset; ++k) {
      if (assets[k].bus == a.bus && assets[k].kind() == a.kind()) ++ordinal;
    }
    return std::string(to_string(a.kind())) + "@" + std::to_string(a.bus) + "#" +
           std::to_string(ordinal);
  }

  friend Network make_network(std::vector<Bus>, std::vector<Line>, std::vector<DerAsset>, double,
                              double);

 private:
  std::unordered_map<int, std::size_t> index_;
  std::size_t substation_ = 0;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> parent_line_;
};

namespace detail {

inline void validate_asset(const DerAsset& a) {
  const auto fail = [&](const std::string& what) {
    throw ValidationError(std::string(to_string(a.kind())) + " at bus " + std::to_string(a.bus) +
                          ": " + what);
  };
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, StorageParams>) {
          if (p.r_min_kw > p.r_max_kw) fail("r_min exceeds r_max");
          if (p.soc_min_kwh < 0.0 || p.soc_min_kwh > p.soc_max_kwh) fail("invalid SOC range");
          if (p.available_energy_kwh < 0.0) fail("negative available energy");
        } else if constexpr (std::is_same_v<T, DemandResponseParams>) {
          if (p.dr_max < 0.0 || p.dr_max > 1.0) fail("dr_max must lie in [0, 1]");
        } else if constexpr (std::is_same_v<T, CapacitorParams>) {
          if (p.q_max_kvar < 0.0) fail("negative capacity");
        } else if constexpr (std::is_same_v<T, Pv2Params>) {
          if (p.p_cap_kw < 0.0) fail("negative capacity");
        } else {
          if (p.p_cap_kw < 0.0 || p.s_cap_kva < 0.0) fail("negative capacity");
          if (p.p_cap_kw > p.s_cap_kva) fail("active capacity exceeds apparent capacity");
        }
      },
      a.params);
}

}  // namespace detail

/// Validates every invariant and builds the tree orientation.
/// Throws ValidationError on duplicate ids, dangling references, bad limits,
/// a missing or repeated substation, or a non-radial topology.
inline Network make_network(std::vector<Bus> buses, std::vector<Line> lines,
                            std::vector<DerAsset> assets, double base_mva = 1.0,
                            double base_kv = 12.66) {
  Network net;
  net.buses = std::move(buses);
  net.lines = std::move(lines);
  net.assets = std::move(assets);
  net.base_mva = base_mva;
  net.base_kv = base_kv;

  if (!(base_mva > 0.0) || !(base_kv > 0.0)) throw ValidationError("bases must be positive");
  if (net.buses.empty()) throw ValidationError("network has no buses");

  std::size_t substations = 0;
  for (std::size_t i = 0; i < net.buses.size(); ++i) {
    const auto& b = net.buses[i];
    if (b.id < 1) throw ValidationError("bus id must be >= 1, got " + std::to_string(b.id));
    if (!net.index_.emplace(b.id, i).second) {
      throw ValidationError("duplicate bus id " + std::to_string(b.id));
    }
    if (b.p_demand_kw < 0.0) throw ValidationError("bus " + std::to_string(b.id) + ": negative p_demand");
    if (!(b.v_min_pu > 0.0 && b.v_min_pu < b.v_max_pu)) {
      throw ValidationError("bus " + std::to_string(b.id) + ": require 0 < v_min < v_max");
    }
    if (b.is_substation) {
      ++substations;
      net.substation_ = i;
    }
  }
  if (substations != 1) {
    throw ValidationError("exactly one substation bus required, found " + std::to_string(substations));
  }

  const std::size_t n = net.buses.size();
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacency(n);
  for (std::size_t k = 0; k < net.lines.size(); ++k) {
    const auto& l = net.lines[k];
    const std::string tag = "line " + std::to_string(l.from_bus) + "-" + std::to_string(l.to_bus);
    if (!net.has_bus(l.from_bus) || !net.has_bus(l.to_bus)) {
      throw ValidationError(tag + ": references an unknown bus");
    }
    if (l.from_bus == l.to_bus) throw ValidationError(tag + ": self loop");
    if (l.r_ohm < 0.0) throw ValidationError(tag + ": negative resistance");
    if (l.r_ohm == 0.0 && l.x_ohm == 0.0) throw ValidationError(tag + ": zero impedance");
    if (!(l.capacity_kw > 0.0)) throw ValidationError(tag + ": capacity must be positive");
    const auto a = net.index_.at(l.from_bus);
    const auto b = net.index_.at(l.to_bus);
    adjacency[a].emplace_back(b, k);
    adjacency[b].emplace_back(a, k);
  }

  if (net.lines.size() != n - 1) {
    throw ValidationError("non-radial network: " + std::to_string(net.lines.size()) + " lines for " +
                          std::to_string(n) + " buses");
  }
  constexpr auto unset = std::numeric_limits<std::size_t>::max();
  net.parent_.assign(n, unset);
  net.parent_line_.assign(n, unset);
  net.parent_[net.substation_] = net.substation_;
  std::queue<std::size_t> frontier;
  frontier.push(net.substation_);
  while (!frontier.empty()) {
    const auto u = frontier.front();
    frontier.pop();
    net.order_.push_back(u);
    for (const auto& [v, k] : adjacency[u]) {
      if (net.parent_[v] != unset) continue;
      net.parent_[v] = u;
      net.parent_line_[v] = k;
      frontier.push(v);
    }
  }
  if (net.order_.size() != n) {
    throw ValidationError("non-radial network: not every bus is reachable from the substation");
  }

  for (const auto& a : net.assets) {
    if (!net.has_bus(a.bus)) {
      throw ValidationError(std::string(to_string(a.kind())) + " references unknown bus " +
                            std::to_string(a.bus));
    }
    if (net.index_.at(a.bus) == net.substation_) {
      throw ValidationError("DER assets cannot be connected to the substation bus");
    }
    detail::validate_asset(a);
  }
  return net;
}

// ---------------------------------------------------------------------------
// CSV ingestion and output

inline std::vector<Bus> read_buses(std::istream& in, const std::string& source) {
  detail::CsvReader csv(in, source);
  csv.expect_header({"id", "p_demand_kw", "q_demand_kvar", "v_min_pu", "v_max_pu", "is_substation"});
  std::vector<Bus> out;
  std::vector<std::string> row;
  while (csv.next(row)) {
    Bus b;
    b.id = static_cast<int>(csv.to_int(row[0], "id"));
    b.p_demand_kw = csv.to_double(row[1], "p_demand_kw");
    b.q_demand_kvar = csv.to_double(row[2], "q_demand_kvar");
    b.v_min_pu = csv.to_double(row[3], "v_min_pu");
    b.v_max_pu = csv.to_double(row[4], "v_max_pu");
    b.is_substation = csv.to_bool(row[5], "is_substation");
    out.push_back(b);
  }
  return out;
}

inline std::vector<Line> read_lines(std::istream& in, const std::string& source) {
  detail::CsvReader csv(in, source);
  csv.expect_header({"from", "to", "r_ohm", "x_ohm", "capacity_kw"});
  std::vector<Line> out;
  std::vector<std::string> row;
  while (csv.next(row)) {
    Line l;
    l.from_bus = static_cast<int>(csv.to_int(row[0], "from"));
    l.to_bus = static_cast<int>(csv.to_int(row[1], "to"));
    l.r_ohm = csv.to_double(row[2], "r_ohm");
    l.x_ohm = csv.to_double(row[3], "x_ohm");
    l.capacity_kw = csv.to_double(row[4], "capacity_kw");
    out.push_back(l);
  }
  return out;
}

inline std::vector<DerAsset> read_assets(std::istream& in, const std::string& source) {
  detail::CsvReader csv(in, source);
  csv.expect_header({"bus", "kind", "param1", "param2", "param3", "param4", "param5"});
  std::vector<DerAsset> out;
  std::vector<std::string> row;
  while (csv.next(row)) {
    DerAsset a;
    a.bus = static_cast<int>(csv.to_int(row[0], "bus"));
    DerKind kind{};
    try {
      kind = parse_der_kind(row[1]);
    } catch (const ParseError& e) {
      throw ParseError(csv.where() + ": " + e.what());
    }
    const auto need = [&](int k) {
      const auto col = "param" + std::to_string(k);
      return csv.to_double(row[static_cast<std::size_t>(k) + 1], col);
    };
    switch (kind) {
      case DerKind::Storage: a.params = StorageParams{need(1), need(2), need(3), need(4), need(5)}; break;
      case DerKind::DemandResponse: a.params = DemandResponseParams{need(1)}; break;
      case DerKind::Capacitor: a.params = CapacitorParams{need(1)}; break;
      case DerKind::Pv1: a.params = Pv1Params{need(1), need(2)}; break;
      case DerKind::Pv2: a.params = Pv2Params{need(1)}; break;
      case DerKind::Pv3: a.params = Pv3Params{need(1), need(2)}; break;
    }
    out.push_back(a);
  }
  return out;
}

inline Network load_network_from_streams(std::istream& buses, std::istream& lines, std::istream& assets,
                                         const std::string& bus_source = "buses.csv",
                                         const std::string& line_source = "lines.csv",
                                         const std::string& asset_source = "assets.csv",
                                         double base_mva = 1.0, double base_kv = 12.66) {
  auto b = read_buses(buses, bus_source);
  auto l = read_lines(lines, line_source);
  auto a = read_assets(assets, asset_source);
  return make_network(std::move(b), std::move(l), std::move(a), base_mva, base_kv);
}

inline Network load_network(const std::string& bus_path, const std::string& line_path,
                            const std::string& asset_path, double base_mva = 1.0,
                            double base_kv = 12.66) {
  const auto open = [](const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open '" + path + "'");
    return f;
  };
  auto fb = open(bus_path);
  auto fl = open(line_path);
  auto fa = open(asset_path);
  return load_network_from_streams(fb, fl, fa, bus_path, line_path, asset_path, base_mva, base_kv);
}

inline void write_buses(std::ostream& out, const Network& net) {
  using detail::format_number;
  detail::write_row(out, {"id", "p_demand_kw", "q_demand_kvar", "v_min_pu", "v_max_pu", "is_substation"});
  for (const auto& b : net.buses) {
    detail::write_row(out, {std::to_string(b.id), format_number(b.p_demand_kw),
                            format_number(b.q_demand_kvar), format_number(b.v_min_pu),
                            format_number(b.v_max_pu), b.is_substation ? "1" : "0"});
  }
}

inline void write_lines(std::ostream& out, const Network& net) {
  using detail::format_number;
  detail::write_row(out, {"from", "to", "r_ohm", "x_ohm", "capacity_kw"});
  for (const auto& l : net.lines) {
    detail::write_row(out, {std::to_string(l.from_bus), std::to_string(l.to_bus),
                            format_number(l.r_ohm), format_number(l.x_ohm),
                            format_number(l.capacity_kw)});
  }
}

inline void write_assets(std::ostream& out, const Network& net) {
  using detail::format_number;
  out << "# storage: r_min_kw,r_max_kw,soc_min_kwh,soc_max_kwh,available_energy_kwh\n"
         "# dr: dr_max | capacitor: q_max_kvar | pv1/pv3: p_cap_kw,s_cap_kva | pv2: p_cap_kw\n";
  detail::write_row(out, {"bus", "kind", "param1", "param2", "param3", "param4", "param5"});
  for (const auto& a : net.assets) {
    std::vector<std::string> row{std::to_string(a.bus), std::string(to_string(a.kind()))};
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, StorageParams>) {
            for (double v : {p.r_min_kw, p.r_max_kw, p.soc_min_kwh, p.soc_max_kwh, p.available_energy_kwh}) {
              row.push_back(format_number(v));
            }
          } else if constexpr (std::is_same_v<T, DemandResponseParams>) {
            row.push_back(format_number(p.dr_max));
          } else if constexpr (std::is_same_v<T, CapacitorParams>) {
            row.push_back(format_number(p.q_max_kvar));
          } else if constexpr (std::is_same_v<T, Pv2Params>) {
            row.push_back(format_number(p.p_cap_kw));
          } else {
            row.push_back(format_number(p.p_cap_kw));
            row.push_back(format_number(p.s_cap_kva));
          }
        },
        a.params);
    row.resize(7);
    detail::write_row(out, row);
  }
}

inline void write_network(const Network& net, const std::string& bus_path,
                          const std::string& line_path, const std::string& asset_path) {
  const auto open = [](const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot write '" + path + "'");
    return f;
  };
  auto fb = open(bus_path);
  write_buses(fb, net);
  auto fl = open(line_path);
  write_lines(fl, net);
  auto fa = open(asset_path);
  write_assets(fa, net);
}

/// Counts of assets by kind, in DerKind order.
inline std::array<std::size_t, 6> asset_counts(const Network& net) {
  std::array<std::size_t, 6> counts{};
  for (const auto& a : net.assets) ++counts[static_cast<std::size_t>(a.kind())];
  return counts;
}

}  // namespace ccopf
