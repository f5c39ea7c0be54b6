#pragma once

#include "proxblock/io_util.hpp"
#include "proxblock/linear_map.hpp"
#include "proxblock/parallel.hpp"
#include "proxblock/prox.hpp"
#include "proxblock/types.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace proxblock {

/// Iterates whose norm exceeds this are treated as diverged.
inline constexpr double kDivergenceNorm = 1e12;

/// Stopping rule parameters. A constraint is feasible once both its primal
/// and dual residual norms fall below their tolerances
///
///   eps_pri  = sqrt(p) * eps_abs + eps_rel * max(|Lx|, |z|)
///   eps_dual = sqrt(n) * eps_abs + (eps_rel / rho) * |L'u|
///
/// where p and n are the operator's output and input dimensions. A solve
/// stops when every constraint of every block is feasible. Blocks that carry
/// no constraints have no residuals to test; they join the conjunction
/// through a stationarity check on the iterate itself,
///
///   |x_k - x_{k-1}| <= sqrt(n) * eps_abs + eps_rel * |x_k|,
///
/// so a run cannot stop while an unconstrained block is still moving.
struct StopCriteria {
  double eps_rel = 1e-2;
  double eps_abs = 0.0;
  int max_iter = 1000;
};

/// One constraint g(Lx) attached to a block. rho is the constraint's penalty
/// parameter; the adaptive engine overwrites it every iteration.
struct ConstraintSpec {
  LinearMap L;
  ProxFn g;
  double rho = 1.0;
};

struct ConstraintStatus {
  double r_norm = 0.0;
  double s_norm = 0.0;
  double eps_pri = 0.0;
  double eps_dual = 0.0;
  bool primal_feasible() const { return r_norm <= eps_pri; }
  bool dual_feasible() const { return s_norm <= eps_dual; }
  bool feasible() const { return primal_feasible() && dual_feasible(); }
};

/// One trace row per (iteration, block, constraint).
struct TraceRecord {
  int iter = 0;
  std::string block;
  std::string constraint;
  double r_norm = 0.0;
  double s_norm = 0.0;
  double eps_pri = 0.0;
  double eps_dual = 0.0;
  double mu = 0.0;
  double rho = 0.0;
  double objective = std::numeric_limits<double>::quiet_NaN();
};

enum class SolveStatus { Feasible, MaxIterReached, Diverged };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Feasible:
      return "feasible";
    case SolveStatus::MaxIterReached:
      return "max_iter";
    case SolveStatus::Diverged:
      return "diverged";
  }
  return "unknown";
}

struct SolverState {
  std::vector<Vector> x;                            // primal variable per block
  std::vector<std::vector<Vector>> z;               // auxiliary variable per constraint
  std::vector<std::vector<Vector>> z_prev;          // z from the previous iteration
  std::vector<std::vector<Vector>> u;               // scaled dual (u = rho * lambda)
  std::vector<std::vector<double>> rho;             // penalty per constraint
  std::vector<double> mu;                           // last step size per block
  std::vector<double> block_step;                   // |x_k - x_{k-1}| per block
  std::vector<std::vector<ConstraintStatus>> residuals;
  int iterations = 0;
  SolveStatus status = SolveStatus::MaxIterReached;
  std::string diagnostic;
  std::vector<std::string> warnings;
  std::vector<TraceRecord> trace;

  bool feasible() const { return status == SolveStatus::Feasible; }
};

struct Residuals {
  Vector r;
  Vector s;
  double eps_pri = 0.0;
  double eps_dual = 0.0;
  double r_norm() const { return r.norm(); }
  double s_norm() const { return s.norm(); }
  bool primal_feasible() const { return r_norm() <= eps_pri; }
  bool dual_feasible() const { return s_norm() <= eps_dual; }
};

/// Primal and dual residuals of one constraint after an iteration:
/// r = Lx - z and s = L'(z - z_prev) / rho, with the tolerances from the
/// stopping rule above. Pure function of its arguments, usable offline to
/// audit persisted solver state.
inline Residuals compute_residuals(const LinearMap& L, const Vector& x_new, const Vector& z_new,
                                   const Vector& z_old, const Vector& u_new, double rho,
                                   const StopCriteria& crit) {
  require(rho > 0.0, "compute_residuals: rho must be positive");
  require(z_new.size() == L.out_dim() && z_old.size() == L.out_dim() &&
              u_new.size() == L.out_dim(),
          "compute_residuals: auxiliary/dual size does not match operator output");
  Vector Lx = L.apply(x_new);
  Residuals out;
  out.r = Lx - z_new;
  out.s = L.apply_adjoint(z_new - z_old) / rho;
  out.eps_pri = std::sqrt(static_cast<double>(L.out_dim())) * crit.eps_abs +
                crit.eps_rel * std::max(Lx.norm(), z_new.norm());
  out.eps_dual = std::sqrt(static_cast<double>(L.in_dim())) * crit.eps_abs +
                 (crit.eps_rel / rho) * L.apply_adjoint(u_new).norm();
  return out;
}

/// Conjunction of the stored per-constraint verdicts.
inline bool check_feasible(const SolverState& st) {
  for (const auto& block : st.residuals)
    for (const auto& c : block)
      if (!c.feasible()) return false;
  return true;
}

/// Penalty that keeps a constraint coupled to the step size mu at safety
/// factor beta: rho = beta * mu * |L|_s^2 guarantees rho / |L|_s^2 >= beta * mu.
inline double coupled_rho(double beta, double mu, double op_snorm) {
  require(beta > 0.0 && mu > 0.0, "coupled_rho: beta and mu must be positive");
  require(op_snorm >= 0.0, "coupled_rho: spectral norm must be non-negative");
  double sq = op_snorm * op_snorm;
  return beta * mu * (sq > 0.0 ? sq : 1.0);
}

/// f prox for single-block solves: v -> prox of mu * f at v.
using SingleProx = std::function<Vector(const Vector& v, double mu)>;

/// f prox for block solves. Receives the block index, all current block
/// iterates (blocks before j already updated this sweep), the point v at
/// which to evaluate, and the step size mu.
using BlockProx =
    std::function<Vector(int block, const std::vector<Vector>& x, const Vector& v, double mu)>;

/// Step size callback h(j, x): Lipschitz-based step for block j at iterates x.
using StepFn = std::function<double(int block, const std::vector<Vector>& x)>;

using ObjectiveFn = std::function<double(const std::vector<Vector>& x)>;

struct Block {
  std::string name;
  Vector x0;
  std::vector<ConstraintSpec> constraints;
};

struct BlockProblem {
  std::vector<Block> blocks;
  BlockProx f_prox;
  StepFn h;
  double beta = 1.0;           // safety factor for the adaptive penalty coupling
  ObjectiveFn objective;       // optional, recorded in the trace when present
};

namespace detail {

/// Shared splitting engine.
///
/// One iteration sweeps the blocks in order (Gauss-Seidel: later blocks see
/// the fresh values of earlier ones through f_prox and h). For block j with
/// constraints (L_i, g_i, rho_i):
///
///   x_j  <- prox_{mu f}( x_j - sum_i (mu / rho_i) L_i' (L_i x_j - z_i + u_i) )
///   z_i  <- prox_{g_i at rho_i}( L_i x_j + u_i )
///   u_i  <- u_i + (L_i x_j - z_i)
///
/// With adapt_rho set, mu = h(j, x) and rho_i = beta * mu * |L_i|_s^2 are
/// recomputed at the top of every sweep; otherwise both stay at their given
/// values. Initialization: z = L x0, u = 0.
///
/// Per-constraint work inside a sweep runs through parallel_for; every
/// reduction over constraints is performed serially in index order afterwards,
/// so results are bitwise identical for any PROXBLOCK_THREADS.
inline SolverState run_splitting(const BlockProblem& p, const StopCriteria& crit,
                                 bool adapt_rho) {
  const int n_blocks = static_cast<int>(p.blocks.size());
  require(n_blocks >= 1, "solver: at least one block required");
  require(static_cast<bool>(p.f_prox), "solver: f_prox callback required");
  require(static_cast<bool>(p.h), "solver: step size callback required");
  require(crit.max_iter >= 1, "solver: max_iter must be at least 1");
  require(crit.eps_rel >= 0.0 && crit.eps_abs >= 0.0,
          "solver: tolerances must be non-negative");
  if (adapt_rho) require(p.beta >= 1.0, "solver: beta must be at least 1");

  SolverState st;
  st.x.reserve(n_blocks);
  st.z.resize(n_blocks);
  st.z_prev.resize(n_blocks);
  st.u.resize(n_blocks);
  st.rho.resize(n_blocks);
  st.mu.assign(n_blocks, 0.0);
  st.block_step.assign(n_blocks, 0.0);
  st.residuals.resize(n_blocks);

  int total_constraints = 0;
  for (int j = 0; j < n_blocks; ++j) {
    const Block& blk = p.blocks[j];
    require(blk.x0.size() > 0, "solver: block '" + blk.name + "' has an empty start vector");
    st.x.push_back(blk.x0);
    const int m = static_cast<int>(blk.constraints.size());
    total_constraints += m;
    st.rho[j].assign(m, 0.0);
    st.residuals[j].assign(m, ConstraintStatus{});
    for (int i = 0; i < m; ++i) {
      const ConstraintSpec& c = blk.constraints[i];
      require(c.L.in_dim() == blk.x0.size(),
              "solver: " + c.L.describe() + " on block '" + blk.name +
                  "' expects dimension " + std::to_string(c.L.in_dim()) + ", block has " +
                  std::to_string(blk.x0.size()));
      if (!adapt_rho) {
        require(c.rho > 0.0 && std::isfinite(c.rho),
                "solver: block '" + blk.name + "' constraint " + std::to_string(i) +
                    " has invalid rho");
        st.rho[j][i] = c.rho;
      }
      st.z[j].push_back(c.L.apply(blk.x0));
      st.z_prev[j].push_back(st.z[j].back());
      st.u[j].push_back(Vector::Zero(c.L.out_dim()));
    }
  }

  if (!adapt_rho) {
    // Fixed penalties cannot react to the step size, so flag couplings that
    // violate mu <= rho / |L|_s^2 once up front.
    for (int j = 0; j < n_blocks; ++j) {
      double mu0 = p.h(j, st.x);
      for (size_t i = 0; i < p.blocks[j].constraints.size(); ++i) {
        const ConstraintSpec& c = p.blocks[j].constraints[i];
        double sq = c.L.spectral_norm() * c.L.spectral_norm();
        if (sq > 0.0 && mu0 > c.rho / sq * (1.0 + 1e-12)) {
          std::ostringstream msg;
          msg << "block '" << p.blocks[j].name << "' constraint " << i << ": step size mu="
              << mu0 << " exceeds rho/|L|^2=" << c.rho / sq << "; convergence not guaranteed";
          st.warnings.push_back(msg.str());
        }
      }
    }
  }

  auto diverged = [&st](int iter, const std::string& what) {
    st.status = SolveStatus::Diverged;
    st.diagnostic = what + " at iteration " + std::to_string(iter);
    st.iterations = iter;
  };

  for (int k = 1; k <= crit.max_iter; ++k) {
    const size_t trace_begin = st.trace.size();
    for (int j = 0; j < n_blocks; ++j) {
      const Block& blk = p.blocks[j];
      const int m = static_cast<int>(blk.constraints.size());

      double mu = p.h(j, st.x);
      if (!(std::isfinite(mu) && mu > 0.0)) {
        diverged(k, "step size h returned " + format_double(mu) + " for block '" + blk.name +
                        "'");
        return st;
      }
      st.mu[j] = mu;
      if (adapt_rho)
        for (int i = 0; i < m; ++i)
          st.rho[j][i] = coupled_rho(p.beta, mu, blk.constraints[i].L.spectral_norm());

      // Linearized x update: pull each constraint's violation back through
      // its adjoint, then take one prox step of f.
      Vector arg = st.x[j];
      if (m > 0) {
        std::vector<Vector> pulls(m);
        parallel_for(m, [&](int i) {
          const LinearMap& L = blk.constraints[i].L;
          pulls[i] = L.apply_adjoint(L.apply(st.x[j]) - st.z[j][i] + st.u[j][i]);
        });
        for (int i = 0; i < m; ++i) arg -= (mu / st.rho[j][i]) * pulls[i];
      }
      Vector xn;
      try {
        xn = p.f_prox(j, st.x, arg, mu);
      } catch (const SolverError& e) {
        diverged(k, std::string(e.what()) + " in block '" + blk.name + "'");
        return st;
      }
      require(xn.size() == st.x[j].size(), "solver: f_prox changed the dimension of block '" +
                                               blk.name + "'");
      if (!xn.allFinite()) {
        diverged(k, "non-finite entries in block '" + blk.name + "'");
        return st;
      }
      st.block_step[j] = (xn - st.x[j]).norm();
      st.x[j] = std::move(xn);
      if (st.x[j].norm() > kDivergenceNorm) {
        diverged(k, "block '" + blk.name + "' iterate norm exceeds " +
                        format_double(kDivergenceNorm));
        return st;
      }

      try {
        parallel_for(m, [&](int i) {
          const ConstraintSpec& c = blk.constraints[i];
          const double rho = st.rho[j][i];
          Vector Lx = c.L.apply(st.x[j]);
          st.z_prev[j][i] = st.z[j][i];
          st.z[j][i] = c.g.apply(Lx + st.u[j][i], rho);
          st.u[j][i] += Lx - st.z[j][i];
          Residuals res = compute_residuals(c.L, st.x[j], st.z[j][i], st.z_prev[j][i],
                                            st.u[j][i], rho, crit);
          st.residuals[j][i] =
              ConstraintStatus{res.r_norm(), res.s_norm(), res.eps_pri, res.eps_dual};
        });
      } catch (const SolverError& e) {
        diverged(k, std::string(e.what()) + " in block '" + blk.name + "'");
        return st;
      }

      for (int i = 0; i < m; ++i) {
        const ConstraintStatus& cs = st.residuals[j][i];
        st.trace.push_back(TraceRecord{k, blk.name, blk.constraints[i].g.descriptor(),
                                       cs.r_norm, cs.s_norm, cs.eps_pri, cs.eps_dual, mu,
                                       st.rho[j][i],
                                       std::numeric_limits<double>::quiet_NaN()});
      }
    }

    st.iterations = k;
    if (p.objective) {
      double obj = p.objective(st.x);
      for (size_t t = trace_begin; t < st.trace.size(); ++t) st.trace[t].objective = obj;
    }
    bool stationary = true;
    for (int j = 0; j < n_blocks; ++j) {
      if (!p.blocks[j].constraints.empty()) continue;
      const double tol = std::sqrt(static_cast<double>(st.x[j].size())) * crit.eps_abs +
                         crit.eps_rel * st.x[j].norm();
      if (st.block_step[j] > tol) {
        stationary = false;
        break;
      }
    }
    if (total_constraints > 0 && stationary && check_feasible(st)) {
      st.status = SolveStatus::Feasible;
      return st;
    }
  }
  st.status = SolveStatus::MaxIterReached;
  return st;
}

}  // namespace detail

/// Block-adaptive SDMM: step sizes from p.h and penalties re-coupled via
/// rho = beta * mu * |L|_s^2 every sweep. Dual variables are carried across
/// penalty changes unscaled.
inline SolverState bsdmm_solve(const BlockProblem& p, const StopCriteria& crit = {}) {
  int max_m = 1;
  for (const Block& b : p.blocks) max_m = std::max(max_m, static_cast<int>(b.constraints.size()));
  double cap = static_cast<double>(p.blocks.size()) * max_m;
  SolverState st = detail::run_splitting(p, crit, /*adapt_rho=*/true);
  if (p.beta > cap)
    st.warnings.push_back("beta=" + format_double(p.beta) + " exceeds the useful range [1, " +
                          format_double(cap) + "]");
  return st;
}

/// SDMM with a fixed step size and fixed per-constraint penalties.
inline SolverState sdmm_solve(const Vector& x0, const SingleProx& f_prox, double mu,
                              std::vector<ConstraintSpec> constraints,
                              const StopCriteria& crit = {}) {
  require(static_cast<bool>(f_prox), "sdmm_solve: f_prox callback required");
  require(std::isfinite(mu) && mu > 0.0, "sdmm_solve: step size mu must be positive");
  BlockProblem p;
  p.blocks.push_back(Block{"x", x0, std::move(constraints)});
  p.f_prox = [&f_prox](int, const std::vector<Vector>&, const Vector& v, double m) {
    return f_prox(v, m);
  };
  p.h = [mu](int, const std::vector<Vector>&) { return mu; };
  return detail::run_splitting(p, crit, /*adapt_rho=*/false);
}

/// Linearized ADMM: the single-constraint case of SDMM.
inline SolverState admm_solve(const Vector& x0, const SingleProx& f_prox, double mu,
                              ConstraintSpec constraint, const StopCriteria& crit = {}) {
  std::vector<ConstraintSpec> cs;
  cs.push_back(std::move(constraint));
  return sdmm_solve(x0, f_prox, mu, std::move(cs), crit);
}

/// Trace rows as CSV, one line per (iteration, block, constraint).
inline std::string trace_to_csv(const std::vector<TraceRecord>& trace) {
  std::string out = "iter,block,constraint,r_norm,s_norm,eps_pri,eps_dual,mu,rho,objective\n";
  for (const TraceRecord& t : trace) {
    out += std::to_string(t.iter);
    out += ',';
    out += t.block;
    out += ',';
    out += t.constraint;
    for (double v : {t.r_norm, t.s_norm, t.eps_pri, t.eps_dual, t.mu, t.rho, t.objective}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

inline void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace) {
  atomic_write_file(path, trace_to_csv(trace));
}

}  // namespace proxblock
