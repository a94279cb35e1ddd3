#pragma once

// Generalized lasso
//   minimize  sum_j a_j^2 (f_j - t_j)^2  +  sum_r w_r |(M f)_r|
// over f = (f_o, f_u), where only the first n_obs variables carry a quadratic
// term. Solved by ADMM on the split z = M f.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace mobius {

struct GenLassoSpec {
  Eigen::VectorXd a;       // sqrt of quadratic weights (1/sigma), size n_obs
  Eigen::VectorXd target;  // size n_obs
  Eigen::MatrixXd m;       // rows x variables; observed variables first
  Eigen::VectorXd w;       // L1 row weights, >= 0
  bool equality = false;   // pin f_o = target instead of penalizing deviation

  int n_obs() const { return static_cast<int>(target.size()); }
  int n_vars() const { return static_cast<int>(m.cols()); }

  void validate() const {
    if (a.size() != target.size()) throw std::invalid_argument("quadratic weight and target sizes differ");
    if (m.cols() < target.size()) throw std::invalid_argument("fewer variables than observed targets");
    if (w.size() != m.rows()) throw std::invalid_argument("weight count does not match matrix rows");
    for (Eigen::Index j = 0; j < a.size(); ++j)
      if (!(a[j] > 0) || !std::isfinite(a[j])) throw std::invalid_argument("quadratic weights must be positive");
    for (Eigen::Index r = 0; r < w.size(); ++r)
      if (!(w[r] >= 0) || !std::isfinite(w[r])) throw std::invalid_argument("L1 weights must be non-negative");
    if (!target.allFinite() || !m.allFinite()) throw std::invalid_argument("non-finite problem data");
  }
};

inline double lasso_objective(const GenLassoSpec& s, const Eigen::VectorXd& f) {
  const int no = s.n_obs();
  double q = 0.0;
  if (!s.equality) q = (s.a.array() * (f.head(no) - s.target).array()).square().sum();
  return q + (s.w.array() * (s.m * f).array().abs()).sum();
}

struct SolverOptions {
  int max_iters = 20000;
  double tol = 1e-8;
  double rho = 1.0;
  bool polish = true;
};

struct SolverResult {
  Eigen::VectorXd f;
  Eigen::VectorXd g;
  double objective = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> trace;  // best objective so far, per iteration
  std::vector<int> pinned;    // variables fixed at zero (no quadratic term, no weighted row)
  bool polished = false;
};

namespace solver_detail {

inline Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, const Eigen::VectorXd& k) {
  return (v.array().abs() - k.array()).max(0.0) * v.array().sign();
}

}  // namespace solver_detail

// Support-set polish: fix the zero pattern and signs of z and minimize the
// resulting smooth problem on that face. Accepted only if it lowers J.
inline bool polish_solution(const GenLassoSpec& s, const std::vector<int>& free_vars, const Eigen::VectorXd& z,
                            Eigen::VectorXd& f) {
  const int nf = static_cast<int>(free_vars.size());
  if (nf == 0) return false;
  const int no = s.n_obs();
  const Eigen::Index rows = s.m.rows();
  const double zscale = std::max(1.0, z.cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> zero_rows;
  Eigen::VectorXd lin = Eigen::VectorXd::Zero(nf);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (std::abs(z[r]) <= 1e-12 * zscale) {
      if (s.w[r] > 0) zero_rows.push_back(r);
    } else {
      for (int k = 0; k < nf; ++k) lin[k] += s.w[r] * (z[r] > 0 ? 1.0 : -1.0) * s.m(r, free_vars[k]);
    }
  }
  const auto nz = static_cast<Eigen::Index>(zero_rows.size());
  Eigen::VectorXd fixed_part = Eigen::VectorXd::Zero(rows);
  for (int j = 0; j < s.n_vars(); ++j)
    if (std::find(free_vars.begin(), free_vars.end(), j) == free_vars.end()) fixed_part += s.m.col(j) * f[j];

  // KKT system of the face problem.
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nf + nz, nf + nz);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf + nz);
  for (int k = 0; k < nf; ++k) {
    const int j = free_vars[k];
    if (j < no && !s.equality) {
      kkt(k, k) = 2.0 * s.a[j] * s.a[j];
      rhs[k] = 2.0 * s.a[j] * s.a[j] * s.target[j];
    }
    rhs[k] -= lin[k];
  }
  for (Eigen::Index q = 0; q < nz; ++q) {
    for (int k = 0; k < nf; ++k) {
      kkt(nf + q, k) = s.m(zero_rows[q], free_vars[k]);
      kkt(k, nf + q) = s.m(zero_rows[q], free_vars[k]);
    }
    rhs[nf + q] = -fixed_part[zero_rows[q]];
  }
  const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  if (!sol.allFinite()) return false;
  Eigen::VectorXd cand = f;
  for (int k = 0; k < nf; ++k) cand[free_vars[k]] = sol[k];
  // Zero rows must be met; otherwise the face was not feasible.
  const Eigen::VectorXd g = s.m * cand;
  const double gscale = std::max(1.0, g.cwiseAbs().maxCoeff());
  for (auto r : zero_rows)
    if (std::abs(g[r]) > 1e-9 * gscale) return false;
  if (lasso_objective(s, cand) <= lasso_objective(s, f) + 1e-13 * std::max(1.0, std::abs(lasso_objective(s, f)))) {
    f = cand;
    return true;
  }
  return false;
}

// ADMM with residual balancing. Starts at f = (target, 0) and returns the best
// iterate seen, so the reported trace never increases.
inline SolverResult solve(const GenLassoSpec& spec, const SolverOptions& opt = {}) {
  spec.validate();
  const int no = spec.n_obs(), nv = spec.n_vars();
  const Eigen::Index rows = spec.m.rows();
  SolverResult res;

  Eigen::VectorXd f = Eigen::VectorXd::Zero(nv);
  f.head(no) = spec.target;

  // Free variables: not pinned by equality, and touched by the quadratic term
  // or some positively weighted row.
  std::vector<int> free_vars;
  for (int j = 0; j < nv; ++j) {
    if (spec.equality && j < no) continue;
    bool touched = j < no;
    for (Eigen::Index r = 0; r < rows && !touched; ++r) touched = spec.w[r] > 0 && spec.m(r, j) != 0.0;
    if (touched)
      free_vars.push_back(j);
    else if (j >= no)
      res.pinned.push_back(j);
  }
  const int nf = static_cast<int>(free_vars.size());

  double best = lasso_objective(spec, f);
  Eigen::VectorXd best_f = f;
  Eigen::VectorXd best_z = spec.m * f;

  if (nf > 0 && rows > 0) {
    Eigen::MatrixXd mf(rows, nf);
    Eigen::VectorXd q2 = Eigen::VectorXd::Zero(nf), qt = Eigen::VectorXd::Zero(nf);
    for (int k = 0; k < nf; ++k) {
      const int j = free_vars[k];
      mf.col(k) = spec.m.col(j);
      if (j < no && !spec.equality) {
        q2[k] = 2.0 * spec.a[j] * spec.a[j];
        qt[k] = q2[k] * spec.target[j];
      }
    }
    Eigen::VectorXd fixed = spec.m * f - mf * f(free_vars);
    const Eigen::MatrixXd mtm = mf.transpose() * mf;
    const double ridge = 1e-12 * std::max(1.0, mtm.diagonal().maxCoeff());

    double rho = opt.rho;
    Eigen::LDLT<Eigen::MatrixXd> fac;
    auto factor = [&] {
      Eigen::MatrixXd h = rho * mtm;
      h.diagonal() += q2;
      fac.compute(h);
      if (fac.info() != Eigen::Success || fac.rcond() < 1e-14) {
        h.diagonal().array() += ridge;
        fac.compute(h);
      }
    };
    factor();

    Eigen::VectorXd x = f(free_vars);
    Eigen::VectorXd z = mf * x + fixed, u = Eigen::VectorXd::Zero(rows);
    const double eps_pri = opt.tol * std::sqrt(static_cast<double>(rows));
    const double eps_dual = opt.tol * std::sqrt(static_cast<double>(nf));
    for (int it = 1; it <= opt.max_iters; ++it) {
      x = fac.solve(qt + rho * mf.transpose() * (z - u - fixed));
      const Eigen::VectorXd mx = mf * x + fixed;
      const Eigen::VectorXd z_old = z;
      z = solver_detail::soft_threshold(mx + u, spec.w / rho);
      u += mx - z;

      f(free_vars) = x;
      const double j = lasso_objective(spec, f);
      if (j < best) {
        best = j;
        best_f = f;
        best_z = z;
      }
      res.trace.push_back(best);
      res.iterations = it;

      const double r_norm = (mx - z).norm();
      const double s_norm = rho * (mf.transpose() * (z - z_old)).norm();
      if (r_norm <= eps_pri && s_norm <= eps_dual) {
        res.converged = true;
        break;
      }
      if (it % 10 == 0 && it <= opt.max_iters / 2 && (r_norm > 10.0 * s_norm || s_norm > 10.0 * r_norm)) {
        const double scale = r_norm > s_norm ? 2.0 : 0.5;
        rho *= scale;
        u /= scale;
        factor();
      }
    }
  } else {
    res.converged = true;
  }

  if (opt.polish && nf > 0 && polish_solution(spec, free_vars, best_z, best_f)) {
    res.polished = true;
    best = lasso_objective(spec, best_f);
    if (!res.trace.empty()) res.trace.push_back(std::min(best, res.trace.back()));
  }
  res.f = best_f;
  res.g = spec.m * best_f;
  res.objective = best;
  return res;
}

}  // namespace mobius
