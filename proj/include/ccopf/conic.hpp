#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "ccopf/detail/csv.hpp"
#include "ccopf/errors.hpp"

namespace ccopf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Term {
  std::size_t var = 0;
  double coef = 0.0;
};

struct EqualityRow {
  std::vector<Term> terms;
  double rhs = 0.0;
  std::string label;
};

/// lo <= sum(terms) <= hi; either side may be infinite.
struct RangeRow {
  std::vector<Term> terms;
  double lo = -kInf;
  double hi = kInf;
  std::string label;
};

/// Rotated second-order cone 2*u*v >= ||w||^2 with u, v >= 0.
/// u == v is allowed and gives the plain cone sqrt(2)*u >= ||w||.
struct RotatedCone {
  std::size_t u = 0;
  std::size_t v = 0;
  std::vector<std::size_t> w;
  std::string label;
};

/// Solver-agnostic second-order cone program: minimize objective'x subject to
/// linear equalities, two-sided linear inequalities, variable bounds and
/// rotated cones.
struct ConicProgram {
  std::vector<double> objective;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::string> var_names;
  std::vector<EqualityRow> linear_eq;
  std::vector<RangeRow> linear_ineq;
  std::vector<RotatedCone> soc_cones;

  [[nodiscard]] std::size_t n_vars() const { return objective.size(); }

  std::size_t add_variable(std::string name, double lo = -kInf, double hi = kInf, double cost = 0.0) {
    objective.push_back(cost);
    lower.push_back(lo);
    upper.push_back(hi);
    var_names.push_back(std::move(name));
    return objective.size() - 1;
  }

  void add_equality(std::vector<Term> terms, double rhs, std::string label = {}) {
    linear_eq.push_back({std::move(terms), rhs, std::move(label)});
  }

  void add_range(std::vector<Term> terms, double lo, double hi, std::string label = {}) {
    linear_ineq.push_back({std::move(terms), lo, hi, std::move(label)});
  }

  void add_rotated_cone(std::size_t u, std::size_t v, std::vector<std::size_t> w,
                        std::string label = {}) {
    soc_cones.push_back({u, v, std::move(w), std::move(label)});
  }

  /// Throws ModelError when an index is out of range or a bound is NaN.
  void check_indices() const {
    const auto n = n_vars();
    if (lower.size() != n || upper.size() != n || var_names.size() != n) {
      throw ModelError("conic program: inconsistent variable arrays");
    }
    const auto check = [&](std::size_t j, const std::string& where) {
      if (j >= n) throw ModelError("conic program: variable index out of range in " + where);
    };
    for (const auto& row : linear_eq) {
      for (const auto& t : row.terms) check(t.var, "equality '" + row.label + "'");
    }
    for (const auto& row : linear_ineq) {
      for (const auto& t : row.terms) check(t.var, "inequality '" + row.label + "'");
    }
    for (const auto& c : soc_cones) {
      check(c.u, "cone '" + c.label + "'");
      check(c.v, "cone '" + c.label + "'");
      for (auto j : c.w) check(j, "cone '" + c.label + "'");
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (std::isnan(lower[j]) || std::isnan(upper[j]) || std::isnan(objective[j])) {
        throw ModelError("conic program: NaN data on variable " + var_names[j]);
      }
    }
  }
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

struct ToleranceConfig {
  double feasibility = 1e-8;  // absolute primal violation, program units
  double gap = 1e-6;          // relative duality gap
  double cone = 1e-8;         // max(0, ||w||^2 - 2uv)
  int max_iterations = 150;
  bool verbose = false;  // per-iteration log on stderr
};

struct Solution {
  SolveStatus status = SolveStatus::NumericalFailure;
  std::vector<double> x;
  double objective_value = 0.0;
  double primal_residual = kInf;
  double cone_residual = kInf;
  double relative_gap = kInf;
  int iterations = 0;
};

/// Residuals recomputed from (program, x) alone.
struct ResidualReport {
  double equality = 0.0;
  std::size_t worst_equality = 0;
  double inequality = 0.0;
  std::size_t worst_inequality = 0;
  double bound = 0.0;
  std::size_t worst_bound = 0;
  double cone = 0.0;
  std::size_t worst_cone = 0;

  [[nodiscard]] double primal_residual() const { return std::max({equality, inequality, bound}); }
  [[nodiscard]] double cone_residual() const { return cone; }
};

inline double row_value(const std::vector<Term>& terms, const std::vector<double>& x) {
  double sum = 0.0;
  for (const auto& t : terms) sum += t.coef * x[t.var];
  return sum;
}

/// Signed cone gap 2uv - ||w||^2 (negative when violated).
inline double cone_gap(const RotatedCone& c, const std::vector<double>& x) {
  double w2 = 0.0;
  for (auto j : c.w) w2 += x[j] * x[j];
  return 2.0 * x[c.u] * x[c.v] - w2;
}

inline ResidualReport verify(const ConicProgram& program, const std::vector<double>& x) {
  if (x.size() != program.n_vars()) throw DomainError("verify: solution length mismatch");
  ResidualReport r;
  for (std::size_t i = 0; i < program.linear_eq.size(); ++i) {
    const auto& row = program.linear_eq[i];
    const double v = std::abs(row_value(row.terms, x) - row.rhs);
    if (v > r.equality) {
      r.equality = v;
      r.worst_equality = i;
    }
  }
  for (std::size_t i = 0; i < program.linear_ineq.size(); ++i) {
    const auto& row = program.linear_ineq[i];
    const double value = row_value(row.terms, x);
    const double v = std::max({0.0, row.lo - value, value - row.hi});
    if (v > r.inequality) {
      r.inequality = v;
      r.worst_inequality = i;
    }
  }
  for (std::size_t j = 0; j < program.n_vars(); ++j) {
    const double v = std::max({0.0, program.lower[j] - x[j], x[j] - program.upper[j]});
    if (v > r.bound) {
      r.bound = v;
      r.worst_bound = j;
    }
  }
  for (std::size_t k = 0; k < program.soc_cones.size(); ++k) {
    const auto& c = program.soc_cones[k];
    double v = std::max(0.0, -cone_gap(c, x));
    v = std::max({v, -x[c.u], -x[c.v]});
    if (v > r.cone) {
      r.cone = v;
      r.worst_cone = k;
    }
  }
  return r;
}

inline ResidualReport verify(const ConicProgram& program, const Solution& solution) {
  return verify(program, solution.x);
}

inline double objective_value(const ConicProgram& program, const std::vector<double>& x) {
  double sum = 0.0;
  for (std::size_t j = 0; j < program.n_vars(); ++j) sum += program.objective[j] * x[j];
  return sum;
}

/// Plain-text dump, one item per line:
///   var <index> <name> <lo> <hi> <cost>
///   eq <label> : <coef>*x<j> ... = <rhs>
///   range <label> : <lo> <= <coef>*x<j> ... <= <hi>
///   rcone <label> : 2*x<u>*x<v> >= x<j>^2 + ...
inline void dump(std::ostream& out, const ConicProgram& program) {
  using detail::format_number;
  const auto bound = [](double v) { return std::isinf(v) ? std::string(v < 0 ? "-inf" : "inf") : format_number(v); };
  const auto terms = [&](const std::vector<Term>& ts) {
    std::string s;
    for (const auto& t : ts) s += " " + format_number(t.coef) + "*x" + std::to_string(t.var);
    return s;
  };
  for (std::size_t j = 0; j < program.n_vars(); ++j) {
    out << "var " << j << ' ' << program.var_names[j] << ' ' << bound(program.lower[j]) << ' '
        << bound(program.upper[j]) << ' ' << format_number(program.objective[j]) << '\n';
  }
  for (const auto& row : program.linear_eq) {
    out << "eq " << row.label << " :" << terms(row.terms) << " = " << format_number(row.rhs) << '\n';
  }
  for (const auto& row : program.linear_ineq) {
    out << "range " << row.label << " : " << bound(row.lo) << " <=" << terms(row.terms)
        << " <= " << bound(row.hi) << '\n';
  }
  for (const auto& c : program.soc_cones) {
    out << "rcone " << c.label << " : 2*x" << c.u << "*x" << c.v << " >=";
    for (std::size_t k = 0; k < c.w.size(); ++k) out << (k ? " + x" : " x") << c.w[k] << "^2";
    out << '\n';
  }
}

}  // namespace ccopf
