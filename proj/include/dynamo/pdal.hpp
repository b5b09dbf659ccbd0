#pragma once

#include "dynamo/config.hpp"
#include "dynamo/operators.hpp"

#include <filesystem>
#include <functional>
#include <ostream>
#include <vector>

namespace dynamo::pdal {

/// One g_l(C_l y) term of min_y sum_l g_l(C_l y) + h(y).
struct Term {
  std::string name;
  LinearOperator op;
  std::function<CVec(CVec const &, double)> conj_prox; // (dual point, step) -> prox_{step g*}
  std::function<double(CVec const &)> cost;            // g evaluated at C_l y
};

struct SaddleProblem {
  std::vector<Term> terms;
  std::function<CVec(CVec const &, double)> primal_prox; // prox of h; identity when empty
  std::function<double(CVec const &)> cost_extra;        // h(y); zero when empty

  auto primal_size() const -> Index;
  auto cost(CVec const &y) const -> double;
};

struct Params {
  double sigma0 = 1.0;
  double alpha = 0.5;
  double rho = 0.7;
  double ls_eps = 0.99;
  double stop_tol = 1e-4;
  int max_iters = 500;
  int max_backtracks = 60;

  static auto from(RunConfig const &c) -> Params;
};

struct TraceRow {
  int iter = 0;
  double cost = 0.0;
  double sigma = 0.0;
  int trials = 0;
  double rel_change = 0.0;
};

struct SolveTrace {
  std::vector<TraceRow> rows;

  void write_csv(std::ostream &os) const;
};

enum class StopReason { Converged, MaxIterations };

struct Result {
  CVec y;
  std::vector<CVec> z;
  SolveTrace trace;
  StopReason reason = StopReason::MaxIterations;
  double sigma = 0.0; // last accepted step, for warm restarts
};

struct DivergenceError : SolverError {
  DivergenceError(std::string const &what, SolveTrace t)
    : SolverError(what)
    , trace(std::move(t))
  {
  }
  SolveTrace trace;
};

/// Primal-dual iterations with linesearch: primal step, step growth by
/// sqrt(1 + theta), extrapolation, dual prox steps with step alpha*sigma, and
/// backtracking by rho until sqrt(alpha) sigma |C*(z' - z)| <= eps |z' - z|.
/// Stops when the relative change of the full objective drops below stop_tol.
auto solve(SaddleProblem const &problem, CVec y0, std::vector<CVec> z0, Params const &params) -> Result;

} // namespace dynamo::pdal
