#pragma once

// Regularized baseline over the full candidate set:
//
//   min ||A x - B x_R||^2 + lambda ||x||_1   s.t. leaks >= 0
//
// Sign-free unknowns are split into positive and negative parts, which
// turns the problem into a nonnegatively constrained quadratic program
// solved by cyclic coordinate descent.

#include <leakdet/estimation.hpp>
#include <leakdet/graph_model.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <sstream>
#include <utility>
#include <string>

namespace leakdet {

struct NnqpOptions {
  double kkt_tolerance = 1e-9;
  std::size_t max_sweeps = 1'000'000;
};

struct NnqpResult {
  Eigen::VectorXd z;
  double kkt_residual = 0.0;
  std::size_t sweeps = 0;
};

/// min 1/2 z'Qz + c'z subject to z >= 0, for symmetric positive
/// semidefinite Q with a positive diagonal. Stops once the natural residual
/// max_j |min(z_j, grad_j)| drops to the tolerance.
///
/// `opposed` lists column pairs (p, n) with Q.col(p) = -Q.col(n) and
/// c_p + c_n >= 0, i.e. the two halves of a split variable. Mass held by both
/// halves is cancelled after each sweep; plain coordinate steps would only
/// drain it at a rate proportional to c_p + c_n.
inline NnqpResult solve_nnqp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& c, const NnqpOptions& options = {},
                             std::span<const std::pair<Eigen::Index, Eigen::Index>> opposed = {}) {
  const Eigen::Index n = c.size();
  for (Eigen::Index j = 0; j < n; ++j)
    if (!(Q(j, j) > 0.0)) fail(ErrorCategory::contract, "nnqp: Hessian diagonal must be positive");

  NnqpResult r{Eigen::VectorXd::Zero(n), 0.0, 0};
  Eigen::VectorXd grad = c;
  const auto residual = [&] {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) worst = std::max(worst, std::abs(std::min(r.z(j), grad(j))));
    return worst;
  };
  r.kkt_residual = residual();
  while (r.kkt_residual > options.kkt_tolerance) {
    if (r.sweeps == options.max_sweeps) {
      std::ostringstream msg;
      msg << "nnqp: no convergence after " << r.sweeps << " sweeps (kkt residual " << r.kkt_residual
          << ", tolerance " << options.kkt_tolerance << ", iterate [" << r.z.transpose() << "])";
      fail(ErrorCategory::convergence, msg.str());
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const double next = std::max(0.0, r.z(j) - grad(j) / Q(j, j));
      const double delta = next - r.z(j);
      if (delta != 0.0) {
        r.z(j) = next;
        grad += Q.col(j) * delta;
      }
    }
    for (const auto& [p, q] : opposed) {
      const double common = std::min(r.z(p), r.z(q));
      r.z(p) -= common;
      r.z(q) -= common;
    }
    ++r.sweeps;
    // Refresh to keep incremental round-off from accumulating.
    if (r.sweeps % 1000 == 0) grad = Q * r.z + c;
    r.kkt_residual = residual();
  }
  return r;
}

struct QpLassoResult {
  StructureSolution solution;  // over every candidate unknown
  double objective = 0.0;
  double kkt_residual = 0.0;
  std::size_t sweeps = 0;
};

inline QpLassoResult qp_lasso(const Topology& t, const ResidualVector& residuals, double lambda,
                              const NnqpOptions& options = {}, const Tolerances& tol = {}) {
  if (!(lambda >= 0.0)) fail(ErrorCategory::contract, "qp_lasso: lambda must be non-negative");
  if (t.node_count() < 2) fail(ErrorCategory::no_estimation, "topology has a single node: no estimation possible");
  detail::require_aligned(t, residuals);

  const FaultStructure candidates = candidate_fault_edges(t);
  const LinearSystem sys = nodal_system(t, candidates);
  const auto b_std = nodal_balance(t, residuals.values);
  const Eigen::Map<const Eigen::VectorXd> b(b_std.data(), static_cast<Eigen::Index>(b_std.size()));

  // Columns: one per unknown, plus a negated copy for each sign-free unknown.
  std::vector<Eigen::Index> source;
  std::vector<double> sign;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> halves;
  for (std::size_t u = 0; u < candidates.size(); ++u) {
    source.push_back(static_cast<Eigen::Index>(u));
    sign.push_back(1.0);
    if (candidates.edges()[u].kind != FaultKind::leak) {
      halves.emplace_back(static_cast<Eigen::Index>(source.size() - 1), static_cast<Eigen::Index>(source.size()));
      source.push_back(static_cast<Eigen::Index>(u));
      sign.push_back(-1.0);
    }
  }
  const auto m = static_cast<Eigen::Index>(source.size());
  Eigen::MatrixXd split(sys.A.rows(), m);
  for (Eigen::Index k = 0; k < m; ++k) split.col(k) = sign[static_cast<std::size_t>(k)] * sys.A.col(source[static_cast<std::size_t>(k)]);

  const Eigen::MatrixXd Q = 2.0 * split.transpose() * split;
  const Eigen::VectorXd c = -2.0 * split.transpose() * b + Eigen::VectorXd::Constant(m, lambda);
  const NnqpResult nn = solve_nnqp(Q, c, options, halves);

  QpLassoResult out;
  out.solution.structure = candidates;
  out.solution.values.assign(candidates.size(), 0.0);
  for (Eigen::Index k = 0; k < m; ++k)
    out.solution.values[static_cast<std::size_t>(source[static_cast<std::size_t>(k)])] += sign[static_cast<std::size_t>(k)] * nn.z(k);
  detail::finish_solution(out.solution, tol.positivity_for(residuals.values));

  const Eigen::Map<const Eigen::VectorXd> x(out.solution.values.data(), static_cast<Eigen::Index>(candidates.size()));
  out.objective = (sys.A * x - b).squaredNorm() + lambda * x.lpNorm<1>();
  out.kkt_residual = nn.kkt_residual;
  out.sweeps = nn.sweeps;
  return out;
}

}  // namespace leakdet
