#pragma once

// Small network builders and independent oracles shared by the test files.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "ccopf/grid_model.hpp"

namespace ccopf::fixtures {

inline Bus bus(int id, double p = 0.0, double q = 0.0, bool substation = false) {
  Bus b;
  b.id = id;
  b.p_demand_kw = p;
  b.q_demand_kvar = q;
  b.v_min_pu = substation ? 0.95 : 0.9;
  b.v_max_pu = 1.05;
  b.is_substation = substation;
  return b;
}

inline Line line(int from, int to, double r, double x, double cap = 5000.0) { return {from, to, r, x, cap}; }

/// Two-bus feeder with impedance given in per-unit (base 1 MVA, 12.66 kV).
inline Network two_bus(double r_pu, double x_pu, double p_kw, double q_kvar, std::vector<DerAsset> assets = {}) {
  const double zb = 12.66 * 12.66;
  return make_network({bus(1, 0, 0, true), bus(2, p_kw, q_kvar)}, {line(1, 2, r_pu * zb, x_pu * zb, 1e6)},
                      std::move(assets));
}

/// Random radial tree: bus k+1 attaches to a uniformly chosen earlier bus.
inline Network random_tree(std::mt19937_64& gen, int n_bus) {
  std::uniform_real_distribution<double> r(0.05, 1.0);   // ohm
  std::uniform_real_distribution<double> x(0.05, 1.0);
  std::uniform_real_distribution<double> p(0.0, 150.0);  // kW
  std::uniform_real_distribution<double> q(-20.0, 100.0);
  std::vector<Bus> buses{bus(1, 0, 0, true)};
  std::vector<Line> lines;
  for (int k = 2; k <= n_bus; ++k) {
    buses.push_back(bus(k, p(gen), q(gen)));
    std::uniform_int_distribution<int> parent(1, k - 1);
    lines.push_back(line(parent(gen), k, r(gen), x(gen)));
  }
  return make_network(std::move(buses), std::move(lines), {});
}

/// Receiving-end voltage magnitude of a two-bus feeder fed at 1 pu, from the
/// biquadratic V^4 + (2(rP + xQ) - 1) V^2 + (r^2 + x^2)(P^2 + Q^2) = 0 (high root).
inline double two_bus_voltage(double r, double x, double p, double q) {
  const double b = 2.0 * (r * p + x * q) - 1.0;
  const double c = (r * r + x * x) * (p * p + q * q);
  return std::sqrt((-b + std::sqrt(b * b - 4.0 * c)) / 2.0);
}

/// Same magnitude found by bisection on the voltage-drop fixed point, as a
/// second, formula-free check.
inline double two_bus_voltage_bisect(double r, double x, double p, double q) {
  const auto f = [&](double v) {
    // |1 - z * conj(S / V)| with V real at the receiving end, rotated frame.
    const std::complex<double> z(r, x);
    const std::complex<double> i = std::conj(std::complex<double>(p, q) / v);
    return std::abs(v + z * i) - 1.0;  // sending-end magnitude minus 1
  };
  double lo = 0.5;
  double hi = 1.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

struct NewtonResult {
  std::vector<double> v;
  std::vector<double> theta;
  bool converged = false;
};

/// Polar Newton-Raphson on the full nodal admittance matrix. Loads are net
/// (demand minus injection) in per-unit; bus 0 of `net` ordering is not assumed
/// to be the slack, Network::substation() is.
inline NewtonResult newton_pf(const Network& net, const std::vector<double>& p_load_pu,
                              const std::vector<double>& q_load_pu) {
  using cd = std::complex<double>;
  const int n = static_cast<int>(net.buses.size());
  const int slack = static_cast<int>(net.substation());
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& l : net.lines) {
    const int a = static_cast<int>(net.bus_index(l.from_bus));
    const int b = static_cast<int>(net.bus_index(l.to_bus));
    const cd y = 1.0 / net.line_impedance_pu(l);
    Y(a, a) += y;
    Y(b, b) += y;
    Y(a, b) -= y;
    Y(b, a) -= y;
  }
  std::vector<int> pq;
  for (int k = 0; k < n; ++k) {
    if (k != slack) pq.push_back(k);
  }
  const int m = static_cast<int>(pq.size());
  NewtonResult out;
  out.v.assign(n, 1.0);
  out.theta.assign(n, 0.0);
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXcd V(n);
    for (int k = 0; k < n; ++k) V[k] = std::polar(out.v[k], out.theta[k]);
    const Eigen::VectorXcd S = V.cwiseProduct((Y * V).conjugate());
    Eigen::VectorXd f(2 * m);
    for (int a = 0; a < m; ++a) {
      f[a] = S[pq[a]].real() + p_load_pu[pq[a]];
      f[m + a] = S[pq[a]].imag() + q_load_pu[pq[a]];
    }
    if (f.cwiseAbs().maxCoeff() < 1e-12) {
      out.converged = true;
      break;
    }
    // S_i = V_i conj(sum_k Y_ik V_k), differentiated by hand per entry.
    Eigen::MatrixXd J(2 * m, 2 * m);
    const Eigen::VectorXcd I = Y * V;
    for (int a = 0; a < m; ++a) {
      const int i = pq[a];
      for (int b = 0; b < m; ++b) {
        const int k = pq[b];
        cd dth;
        cd dv;
        if (i == k) {
          dth = cd(0, 1) * V[i] * std::conj(I[i]) - cd(0, 1) * V[i] * std::conj(Y(i, i) * V[i]);
          dv = V[i] / out.v[i] * std::conj(I[i]) + V[i] * std::conj(Y(i, i) * V[i] / out.v[i]);
        } else {
          dth = -cd(0, 1) * V[i] * std::conj(Y(i, k) * V[k]);
          dv = V[i] * std::conj(Y(i, k) * V[k] / out.v[k]);
        }
        J(a, b) = dth.real();
        J(a, m + b) = dv.real();
        J(m + a, b) = dth.imag();
        J(m + a, m + b) = dv.imag();
      }
    }
    const Eigen::VectorXd dx = J.fullPivLu().solve(-f);
    for (int a = 0; a < m; ++a) {
      out.theta[pq[a]] += dx[a];
      out.v[pq[a]] += dx[m + a];
    }
  }
  return out;
}

}  // namespace ccopf::fixtures
