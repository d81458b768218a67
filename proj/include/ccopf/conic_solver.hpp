#pragma once

// Primal-dual interior-point method for
//
//   minimize c'x  subject to  A x = b,  h - G x in K,
//
// with K a product of a nonnegative orthant and second-order cones, solved on
// the homogeneous self-dual embedding with Nesterov-Todd scaling and a
// Mehrotra predictor-corrector step. The KKT system is factored as a
// regularized sparse LU followed by iterative refinement.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "ccopf/conic.hpp"

namespace ccopf {

namespace detail {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

/// Orthant of dimension `lp` followed by second-order cones.
struct ConeLayout {
  int lp = 0;
  std::vector<int> soc;
  std::vector<int> offset;  // start of each cone inside the slack vector
  int dim = 0;

  [[nodiscard]] int degree() const { return lp + static_cast<int>(soc.size()); }

  void finalize() {
    offset.clear();
    int at = lp;
    for (int d : soc) {
      offset.push_back(at);
      at += d;
    }
    dim = at;
  }

  [[nodiscard]] Vec identity() const {
    Vec e = Vec::Zero(dim);
    e.head(lp).setOnes();
    for (std::size_t k = 0; k < soc.size(); ++k) e[offset[k]] = 1.0;
    return e;
  }

  /// Smallest "eigenvalue": min over orthant entries and x0 - ||x1|| per cone.
  [[nodiscard]] double min_eig(const Vec& x) const {
    double m = kInf;
    for (int i = 0; i < lp; ++i) m = std::min(m, x[i]);
    for (std::size_t k = 0; k < soc.size(); ++k) {
      const auto blk = x.segment(offset[k], soc[k]);
      m = std::min(m, blk[0] - blk.tail(soc[k] - 1).norm());
    }
    return m;
  }

  /// Jordan product u o v.
  [[nodiscard]] Vec circ(const Vec& u, const Vec& v) const {
    Vec out(dim);
    out.head(lp) = u.head(lp).cwiseProduct(v.head(lp));
    for (std::size_t k = 0; k < soc.size(); ++k) {
      const int o = offset[k];
      const int d = soc[k];
      out[o] = u.segment(o, d).dot(v.segment(o, d));
      out.segment(o + 1, d - 1) = u[o] * v.segment(o + 1, d - 1) + v[o] * u.segment(o + 1, d - 1);
    }
    return out;
  }

  /// Solves lambda o out = v.
  [[nodiscard]] Vec inv_circ(const Vec& lambda, const Vec& v) const {
    Vec out(dim);
    out.head(lp) = v.head(lp).cwiseQuotient(lambda.head(lp));
    for (std::size_t k = 0; k < soc.size(); ++k) {
      const int o = offset[k];
      const int d = soc[k];
      const double l0 = lambda[o];
      const auto l1 = lambda.segment(o + 1, d - 1);
      const double det = l0 * l0 - l1.squaredNorm();
      const double u0 = (l0 * v[o] - l1.dot(v.segment(o + 1, d - 1))) / det;
      out[o] = u0;
      out.segment(o + 1, d - 1) = (v.segment(o + 1, d - 1) - u0 * l1) / l0;
    }
    return out;
  }

  /// Largest alpha with x + alpha*dx in K (capped at `cap`), x interior.
  [[nodiscard]] double max_step(const Vec& x, const Vec& dx, double cap) const {
    double alpha = cap;
    for (int i = 0; i < lp; ++i) {
      if (dx[i] < 0.0) alpha = std::min(alpha, -x[i] / dx[i]);
    }
    for (std::size_t k = 0; k < soc.size(); ++k) {
      const int o = offset[k];
      const int d = soc[k];
      const double x0 = x[o];
      const double d0 = dx[o];
      const auto x1 = x.segment(o + 1, d - 1);
      const auto d1 = dx.segment(o + 1, d - 1);
      const double qa = d0 * d0 - d1.squaredNorm();
      const double qb = 2.0 * (x0 * d0 - x1.dot(d1));
      const double qc = std::max(0.0, x0 * x0 - x1.squaredNorm());
      double root = kInf;
      if (std::abs(qa) < 1e-300) {
        if (qb < 0.0) root = -qc / qb;
      } else {
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc >= 0.0) {
          const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
          for (double r : {q / qa, q != 0.0 ? qc / q : kInf}) {
            if (r > 0.0) root = std::min(root, r);
          }
        }
      }
      alpha = std::min(alpha, root);
      if (d0 < 0.0) alpha = std::min(alpha, -x0 / d0);
    }
    return alpha;
  }
};

/// Nesterov-Todd scaling point W with W z = W^{-1} s = lambda.
struct NtScaling {
  Vec lp_w;                    // sqrt(s / z)
  std::vector<double> eta;     // (J(s) / J(z))^(1/4)
  std::vector<Vec> wbar;       // J(wbar) = 1
  Vec lambda;

  void compute(const ConeLayout& K, const Vec& s, const Vec& z) {
    lp_w = (s.head(K.lp).array() / z.head(K.lp).array()).sqrt();
    eta.assign(K.soc.size(), 1.0);
    wbar.assign(K.soc.size(), Vec());
    for (std::size_t k = 0; k < K.soc.size(); ++k) {
      const int o = K.offset[k];
      const int d = K.soc[k];
      const Vec sk = s.segment(o, d);
      const Vec zk = z.segment(o, d);
      const double js = std::max(1e-300, sk[0] * sk[0] - sk.tail(d - 1).squaredNorm());
      const double jz = std::max(1e-300, zk[0] * zk[0] - zk.tail(d - 1).squaredNorm());
      const Vec sb = sk / std::sqrt(js);
      Vec zb = zk / std::sqrt(jz);
      const double gamma = std::sqrt(std::max(1e-300, 0.5 * (1.0 + sb.dot(zb))));
      zb.tail(d - 1) *= -1.0;
      wbar[k] = (sb + zb) / (2.0 * gamma);
      eta[k] = std::pow(js / jz, 0.25);
    }
    lambda = apply(K, z, false);
  }

  /// W v (inverse = false) or W^{-1} v (inverse = true).
  [[nodiscard]] Vec apply(const ConeLayout& K, const Vec& v, bool inverse) const {
    Vec out(K.dim);
    out.head(K.lp) = inverse ? Vec(v.head(K.lp).cwiseQuotient(lp_w)) : Vec(v.head(K.lp).cwiseProduct(lp_w));
    for (std::size_t k = 0; k < K.soc.size(); ++k) {
      const int o = K.offset[k];
      const int d = K.soc[k];
      const double sign = inverse ? -1.0 : 1.0;
      const double w0 = wbar[k][0];
      const auto w1 = wbar[k].tail(d - 1);
      const double v0 = v[o];
      const auto v1 = v.segment(o + 1, d - 1);
      const double w1v1 = w1.dot(v1);
      const double scale = inverse ? 1.0 / eta[k] : eta[k];
      out[o] = scale * (w0 * v0 + sign * w1v1);
      out.segment(o + 1, d - 1) = scale * (sign * v0 * w1 + v1 + (w1v1 / (1.0 + w0)) * w1);
    }
    return out;
  }

  /// Triplets of -W^2 - reg*I placed at (row0 + i, row0 + j).
  void append_neg_w2(const ConeLayout& K, int row0, double reg, std::vector<Triplet>& t) const {
    for (int i = 0; i < K.lp; ++i) t.emplace_back(row0 + i, row0 + i, -lp_w[i] * lp_w[i] - reg);
    for (std::size_t k = 0; k < K.soc.size(); ++k) {
      const int o = K.offset[k];
      const int d = K.soc[k];
      const double e2 = eta[k] * eta[k];
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          double v = 2.0 * wbar[k][i] * wbar[k][j];
          if (i == j) v += (i == 0) ? -1.0 : 1.0;
          v *= -e2;
          if (i == j) v -= reg;
          t.emplace_back(row0 + o + i, row0 + o + j, v);
        }
      }
    }
  }

  /// W^2 v.
  [[nodiscard]] Vec apply_w2(const ConeLayout& K, const Vec& v) const { return apply(K, apply(K, v, false), false); }
};

struct StandardForm {
  SpMat A;
  Vec b;
  SpMat G;
  Vec h;
  Vec c;
  double c_scale = 1.0;
  ConeLayout cones;
};

inline StandardForm to_standard_form(const ConicProgram& prog) {
  const int n = static_cast<int>(prog.n_vars());
  std::vector<Triplet> at;
  std::vector<double> bv;
  std::vector<Triplet> gt;
  std::vector<double> hv;
  int arow = 0;
  int grow = 0;

  const auto add_eq = [&](const std::vector<Term>& terms, double rhs) {
    double scale = 0.0;
    for (const auto& t : terms) scale = std::max(scale, std::abs(t.coef));
    if (scale == 0.0) scale = 1.0;
    for (const auto& t : terms) at.emplace_back(arow, static_cast<int>(t.var), t.coef / scale);
    bv.push_back(rhs / scale);
    ++arow;
  };
  const auto add_le = [&](const std::vector<Term>& terms, double sign, double rhs) {
    double scale = 0.0;
    for (const auto& t : terms) scale = std::max(scale, std::abs(t.coef));
    if (scale == 0.0) scale = 1.0;
    for (const auto& t : terms) gt.emplace_back(grow, static_cast<int>(t.var), sign * t.coef / scale);
    hv.push_back(sign * rhs / scale);
    ++grow;
  };

  for (const auto& row : prog.linear_eq) add_eq(row.terms, row.rhs);
  for (int j = 0; j < n; ++j) {
    if (prog.lower[j] == prog.upper[j]) add_eq({{static_cast<std::size_t>(j), 1.0}}, prog.lower[j]);
  }
  for (const auto& row : prog.linear_ineq) {
    if (row.lo == row.hi) add_eq(row.terms, row.lo);
  }

  for (int j = 0; j < n; ++j) {
    if (prog.lower[j] == prog.upper[j]) continue;
    const std::vector<Term> e{{static_cast<std::size_t>(j), 1.0}};
    if (std::isfinite(prog.lower[j])) add_le(e, -1.0, prog.lower[j]);
    if (std::isfinite(prog.upper[j])) add_le(e, 1.0, prog.upper[j]);
  }
  for (const auto& row : prog.linear_ineq) {
    if (row.lo == row.hi) continue;
    if (std::isfinite(row.lo)) add_le(row.terms, -1.0, row.lo);
    if (std::isfinite(row.hi)) add_le(row.terms, 1.0, row.hi);
  }

  StandardForm sf;
  sf.cones.lp = grow;
  constexpr double r2 = 0.70710678118654752440;
  for (const auto& cone : prog.soc_cones) {
    const int u = static_cast<int>(cone.u);
    const int v = static_cast<int>(cone.v);
    if (u == v) {
      gt.emplace_back(grow, u, -2.0 * r2);
    } else {
      gt.emplace_back(grow, u, -r2);
      gt.emplace_back(grow, v, -r2);
      gt.emplace_back(grow + 1, u, -r2);
      gt.emplace_back(grow + 1, v, r2);
    }
    hv.push_back(0.0);
    hv.push_back(0.0);
    int k = 2;
    for (auto w : cone.w) {
      gt.emplace_back(grow + k, static_cast<int>(w), -1.0);
      hv.push_back(0.0);
      ++k;
    }
    sf.cones.soc.push_back(k);
    grow += k;
  }
  sf.cones.finalize();

  sf.A.resize(arow, n);
  sf.A.setFromTriplets(at.begin(), at.end());
  sf.b = Eigen::Map<const Vec>(bv.data(), static_cast<Eigen::Index>(bv.size()));
  sf.G.resize(grow, n);
  sf.G.setFromTriplets(gt.begin(), gt.end());
  sf.h = Eigen::Map<const Vec>(hv.data(), static_cast<Eigen::Index>(hv.size()));
  sf.c = Eigen::Map<const Vec>(prog.objective.data(), n);
  const double cmax = sf.c.size() ? sf.c.cwiseAbs().maxCoeff() : 0.0;
  sf.c_scale = cmax > 0.0 ? cmax : 1.0;
  sf.c /= sf.c_scale;
  return sf;
}

inline double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

/// Factorization of [0 A' G'; A 0 0; G 0 -W^2] with static regularization.
class KktSystem {
 public:
  KktSystem(const StandardForm& sf) : sf_(sf) {
    n_ = static_cast<int>(sf.A.cols());
    p_ = static_cast<int>(sf.A.rows());
    m_ = static_cast<int>(sf.G.rows());
  }

  bool factor(const NtScaling* w, double reg) {
    w_ = w;
    const int N = n_ + p_ + m_;
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(2 * (sf_.A.nonZeros() + sf_.G.nonZeros()) + N + m_ * 4));
    for (int i = 0; i < n_; ++i) t.emplace_back(i, i, reg);
    for (int k = 0; k < sf_.A.outerSize(); ++k) {
      for (SpMat::InnerIterator it(sf_.A, k); it; ++it) {
        t.emplace_back(n_ + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        t.emplace_back(static_cast<int>(it.col()), n_ + static_cast<int>(it.row()), it.value());
      }
    }
    for (int i = 0; i < p_; ++i) t.emplace_back(n_ + i, n_ + i, -reg);
    for (int k = 0; k < sf_.G.outerSize(); ++k) {
      for (SpMat::InnerIterator it(sf_.G, k); it; ++it) {
        t.emplace_back(n_ + p_ + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
        t.emplace_back(static_cast<int>(it.col()), n_ + p_ + static_cast<int>(it.row()), it.value());
      }
    }
    if (w != nullptr) {
      w->append_neg_w2(sf_.cones, n_ + p_, reg, t);
    } else {
      for (int i = 0; i < m_; ++i) t.emplace_back(n_ + p_ + i, n_ + p_ + i, -1.0 - reg);
    }
    SpMat K(N, N);
    K.setFromTriplets(t.begin(), t.end());
    K.makeCompressed();
    lu_.analyzePattern(K);
    lu_.factorize(K);
    return lu_.info() == Eigen::Success;
  }

  /// Solves the unregularized system for (dx, dy, dz).
  void solve(const Vec& r1, const Vec& r2, const Vec& r3, Vec& dx, Vec& dy, Vec& dz) const {
    Vec rhs(n_ + p_ + m_);
    rhs << r1, r2, r3;
    Vec sol = lu_.solve(rhs);
    for (int it = 0; it < 4; ++it) {
      const Vec res = rhs - multiply(sol);
      if (inf_norm(res) <= 1e-14 * (1.0 + inf_norm(rhs))) break;
      sol += lu_.solve(res);
    }
    dx = sol.head(n_);
    dy = sol.segment(n_, p_);
    dz = sol.tail(m_);
  }

 private:
  [[nodiscard]] Vec multiply(const Vec& v) const {
    const Vec x = v.head(n_);
    const Vec y = v.segment(n_, p_);
    const Vec z = v.tail(m_);
    Vec out(n_ + p_ + m_);
    out.head(n_) = sf_.A.transpose() * y + sf_.G.transpose() * z;
    out.segment(n_, p_) = sf_.A * x;
    const Vec w2z = w_ != nullptr ? w_->apply_w2(sf_.cones, z) : z;
    out.tail(m_) = sf_.G * x - w2z;
    return out;
  }

  const StandardForm& sf_;
  const NtScaling* w_ = nullptr;
  int n_ = 0;
  int p_ = 0;
  int m_ = 0;
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
};

}  // namespace detail

/// Solves a conic program. status == Optimal only when the returned x passes
/// verify() within tol.feasibility / tol.cone and the relative duality gap is
/// below tol.gap.
inline Solution solve(const ConicProgram& program, const ToleranceConfig& tol = {}) {
  using detail::Vec;
  program.check_indices();
  const auto n = program.n_vars();
  Solution out;
  out.x.assign(n, 0.0);

  for (std::size_t j = 0; j < n; ++j) {
    if (program.lower[j] > program.upper[j]) {
      out.status = SolveStatus::Infeasible;
      return out;
    }
  }
  for (const auto& row : program.linear_ineq) {
    if (row.lo > row.hi) {
      out.status = SolveStatus::Infeasible;
      return out;
    }
  }

  const auto sf = detail::to_standard_form(program);
  const auto& K = sf.cones;
  const int m = K.dim;
  const int p = static_cast<int>(sf.A.rows());
  const double reg = 1e-10;
  detail::KktSystem kkt(sf);

  // Fixed variables are reported at their exact value.
  const auto snap_fixed = [&](std::vector<double>& xv) {
    for (std::size_t j = 0; j < n; ++j) {
      if (program.lower[j] == program.upper[j]) xv[j] = program.lower[j];
    }
  };
  const auto finish = [&](const Vec& xs, SolveStatus status, int iters, double relgap) {
    out.x.assign(xs.data(), xs.data() + xs.size());
    if (status == SolveStatus::Optimal || status == SolveStatus::NumericalFailure) snap_fixed(out.x);
    const auto report = verify(program, out.x);
    out.primal_residual = report.primal_residual();
    out.cone_residual = report.cone_residual();
    out.objective_value = objective_value(program, out.x);
    out.iterations = iters;
    out.relative_gap = relgap;
    out.status = status;
    return out;
  };

  // Initial point: least-squares primal slack and dual, shifted into the cone.
  if (!kkt.factor(nullptr, reg)) return finish(Vec::Zero(static_cast<Eigen::Index>(n)), SolveStatus::NumericalFailure, 0, kInf);
  Vec x, y, z, s, tmpx, tmpy, tmpz;
  kkt.solve(Vec::Zero(static_cast<Eigen::Index>(n)), sf.b, sf.h, x, tmpy, tmpz);
  s = -tmpz;
  const Vec e = K.identity();
  if (m > 0) {
    const double ap = -K.min_eig(s);
    if (ap >= -1e-8) s += (1.0 + ap) * e;
  }
  kkt.solve(-sf.c, Vec::Zero(p), Vec::Zero(m), tmpx, y, z);
  if (m > 0) {
    const double ad = -K.min_eig(z);
    if (ad >= -1e-8) z += (1.0 + ad) * e;
  }
  double tau = 1.0;
  double kappa = 1.0;

  const double nb = 1.0 + detail::inf_norm(sf.b);
  const double nh = 1.0 + detail::inf_norm(sf.h);
  const double nc = 1.0 + detail::inf_norm(sf.c);
  const double deg = static_cast<double>(K.degree()) + 1.0;
  double feas_target = std::min(tol.feasibility, 1e-8);
  detail::NtScaling W;
  Vec best_x = x;
  double best_gap = kInf;

  for (int iter = 0; iter <= tol.max_iterations; ++iter) {
    const Vec Ax = sf.A * x;
    const Vec Gx = sf.G * x;
    const Vec rx = sf.A.transpose() * y + sf.G.transpose() * z + sf.c * tau;
    const Vec ry = -Ax + sf.b * tau;
    const Vec rz = s + Gx - sf.h * tau;
    const double cx = sf.c.dot(x);
    const double by = sf.b.dot(y);
    const double hz = sf.h.dot(z);
    const double rt = kappa + cx + by + hz;

    const double pres = std::max(detail::inf_norm(ry) / nb, detail::inf_norm(rz) / nh) / tau;
    const double dres = detail::inf_norm(rx) / nc / tau;
    const double pcost = cx / tau;
    const double dcost = -(by + hz) / tau;
    const double gap = s.dot(z) / (tau * tau);
    const double relgap = gap / std::max({std::abs(pcost), std::abs(dcost), 1e-12});
    if (tol.verbose) {
      std::fprintf(stderr, "ipm %3d pres %.2e dres %.2e gap %.2e relgap %.2e tau %.2e kappa %.2e\n", iter, pres,
                   dres, gap, relgap, tau, kappa);
    }
    if (!std::isfinite(pres) || !std::isfinite(dres) || !std::isfinite(gap)) {
      return finish(best_x, SolveStatus::NumericalFailure, iter, best_gap);
    }
    if (pres < 1e-3 && relgap < best_gap) {
      best_gap = relgap;
      best_x = x / tau;
    }

    // Primal feasibility is judged on the original program, so the internal
    // residual only has to be small enough to make the check worthwhile.
    if (pres <= 1e2 * feas_target && dres <= feas_target && (relgap <= tol.gap || gap <= 1e-2 * tol.gap)) {
      const Vec xs = x / tau;
      std::vector<double> xv(xs.data(), xs.data() + xs.size());
      snap_fixed(xv);
      const auto report = verify(program, xv);
      if (report.primal_residual() <= tol.feasibility && report.cone_residual() <= tol.cone) {
        return finish(xs, SolveStatus::Optimal, iter, relgap);
      }
      feas_target *= 0.1;
      if (feas_target < 1e-15) return finish(xs, SolveStatus::NumericalFailure, iter, relgap);
    }

    // Infeasibility certificates.
    if (by + hz < 0.0) {
      const double res = detail::inf_norm(sf.A.transpose() * y + sf.G.transpose() * z);
      if (res <= tol.feasibility * -(by + hz)) {
        return finish(Vec::Zero(static_cast<Eigen::Index>(n)), SolveStatus::Infeasible, iter, kInf);
      }
    }
    if (cx < 0.0) {
      const double res = std::max(detail::inf_norm(Ax), detail::inf_norm(Gx + s));
      if (res <= tol.feasibility * -cx) {
        return finish(x / std::max(tau, 1e-300), SolveStatus::Unbounded, iter, kInf);
      }
    }
    if (iter == tol.max_iterations) break;

    W.compute(K, s, z);
    const Vec& lambda = W.lambda;
    const double mu = (s.dot(z) + tau * kappa) / deg;
    if (!kkt.factor(&W, reg)) return finish(best_x, SolveStatus::NumericalFailure, iter, best_gap);

    Vec x1, y1, z1;
    kkt.solve(-sf.c, sf.b, sf.h, x1, y1, z1);
    const double denom = kappa / tau - sf.c.dot(x1) - sf.b.dot(y1) - sf.h.dot(z1);

    const auto direction = [&](double eta_r, const Vec& ds_target, double dk_target, Vec& dx, Vec& dy,
                               Vec& dz, Vec& ds, double& dtau, double& dkappa) {
      const Vec li = K.inv_circ(lambda, ds_target);
      Vec x2, y2, z2;
      kkt.solve(-eta_r * rx, eta_r * ry, -eta_r * rz - W.apply(K, li, false), x2, y2, z2);
      dtau = (eta_r * rt + dk_target / tau + sf.c.dot(x2) + sf.b.dot(y2) + sf.h.dot(z2)) / denom;
      dx = x2 + dtau * x1;
      dy = y2 + dtau * y1;
      dz = z2 + dtau * z1;
      ds = W.apply(K, li - W.apply(K, dz, false), false);
      dkappa = (dk_target - kappa * dtau) / tau;
    };
    const auto step_to_boundary = [&](const Vec& ds, const Vec& dz, double dtau, double dkappa) {
      double a = K.max_step(s, ds, 1.0);
      a = std::min(a, K.max_step(z, dz, 1.0));
      if (dtau < 0.0) a = std::min(a, -tau / dtau);
      if (dkappa < 0.0) a = std::min(a, -kappa / dkappa);
      return a;
    };

    // Predictor.
    Vec dx, dy, dz, ds;
    double dtau = 0.0;
    double dkappa = 0.0;
    const Vec ll = K.circ(lambda, lambda);
    direction(1.0, -ll, -tau * kappa, dx, dy, dz, ds, dtau, dkappa);
    const double alpha_aff = step_to_boundary(ds, dz, dtau, dkappa);
    const double sigma = std::pow(std::clamp(1.0 - alpha_aff, 0.0, 1.0), 3);

    // Corrector.
    const Vec ds_target = -ll - K.circ(W.apply(K, ds, true), W.apply(K, dz, false)) + sigma * mu * e;
    const double dk_target = -tau * kappa - dtau * dkappa + sigma * mu;
    direction(1.0 - sigma, ds_target, dk_target, dx, dy, dz, ds, dtau, dkappa);
    const double alpha = std::min(1.0, 0.99 * step_to_boundary(ds, dz, dtau, dkappa));
    if (!(alpha > 1e-12)) return finish(best_x, SolveStatus::NumericalFailure, iter, best_gap);

    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
    tau += alpha * dtau;
    kappa += alpha * dkappa;
  }
  return finish(best_x, SolveStatus::NumericalFailure, tol.max_iterations, best_gap);
}

}  // namespace ccopf
