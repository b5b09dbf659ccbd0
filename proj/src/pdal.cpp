#include "dynamo/pdal.hpp"

#include <cmath>
#include <iomanip>
#include <limits>

namespace dynamo::pdal {

auto SaddleProblem::primal_size() const -> Index
{
  if (terms.empty()) { throw ShapeError("saddle problem has no terms"); }
  return terms.front().op.in_size();
}

auto SaddleProblem::cost(CVec const &y) const -> double
{
  double c = cost_extra ? cost_extra(y) : 0.0;
  for (auto const &t : terms) {
    c += t.cost(t.op.apply(y));
  }
  return c;
}

auto Params::from(RunConfig const &c) -> Params
{
  Params p;
  p.sigma0 = c.sigma0;
  p.alpha = c.alpha;
  p.rho = c.rho;
  p.ls_eps = c.ls_eps;
  p.stop_tol = c.stop_tol;
  p.max_iters = c.max_iters;
  return p;
}

void SolveTrace::write_csv(std::ostream &os) const
{
  os << "iter,cost,sigma,trials,rel_change\n";
  os << std::setprecision(17);
  for (auto const &r : rows) {
    os << r.iter << ',' << r.cost << ',' << r.sigma << ',' << r.trials << ',' << r.rel_change << '\n';
  }
}

namespace {

auto sum_adjoints(SaddleProblem const &p, std::vector<CVec> const &z, Index n) -> CVec
{
  CVec out(static_cast<std::size_t>(n));
  for (std::size_t l = 0; l < p.terms.size(); ++l) {
    auto const part = p.terms[l].op.adjoint(z[l]);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] += part[i];
    }
  }
  return out;
}

auto dist2(CVec const &a, CVec const &b) -> double
{
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += std::norm(a[i] - b[i]);
  }
  return s;
}

auto objective(SaddleProblem const &p, std::vector<CVec> const &cy, CVec const &y) -> double
{
  double c = p.cost_extra ? p.cost_extra(y) : 0.0;
  for (std::size_t l = 0; l < p.terms.size(); ++l) {
    c += p.terms[l].cost(cy[l]);
  }
  return c;
}

} // namespace

auto solve(SaddleProblem const &problem, CVec y0, std::vector<CVec> z0, Params const &params) -> Result
{
  if (!(params.sigma0 > 0.0) || !(params.alpha > 0.0) || !(params.ls_eps > 0.0 && params.ls_eps < 1.0) ||
      !(params.rho > 0.0 && params.rho < 1.0)) {
    throw ConfigError("pdal: invalid step parameters");
  }
  Index const n = problem.primal_size();
  if (static_cast<Index>(y0.size()) != n) { throw ShapeError("pdal: y0 has wrong length"); }
  auto const nterms = problem.terms.size();
  if (z0.empty()) {
    for (auto const &t : problem.terms) {
      z0.emplace_back(static_cast<std::size_t>(t.op.out_size()));
    }
  }
  if (z0.size() != nterms) { throw ShapeError("pdal: wrong number of dual blocks"); }
  for (std::size_t l = 0; l < nterms; ++l) {
    if (static_cast<Index>(z0[l].size()) != problem.terms[l].op.out_size()) { throw ShapeError("pdal: dual block size mismatch"); }
  }

  Result res;
  CVec y = std::move(y0);
  std::vector<CVec> z = std::move(z0);
  std::vector<CVec> cy(nterms);
  for (std::size_t l = 0; l < nterms; ++l) {
    cy[l] = problem.terms[l].op.apply(y);
  }
  CVec ctz = sum_adjoints(problem, z, n);
  double cost_prev = objective(problem, cy, y);
  double sigma_prev = params.sigma0;
  double theta = 1.0;
  double const sqrt_alpha = std::sqrt(params.alpha);

  for (int k = 1; k <= params.max_iters; ++k) {
    CVec y_new(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      y_new[i] = y[i] - sigma_prev * ctz[i];
    }
    if (problem.primal_prox) { y_new = problem.primal_prox(y_new, sigma_prev); }

    std::vector<CVec> cy_new(nterms);
    for (std::size_t l = 0; l < nterms; ++l) {
      cy_new[l] = problem.terms[l].op.apply(y_new);
    }

    double sigma = sigma_prev * std::sqrt(1.0 + theta);
    int trials = 0;
    bool dual_moved = false;
    std::vector<CVec> z_new(nterms);
    CVec ctz_new;
    while (true) {
      ++trials;
      double const th = sigma / sigma_prev;
      double const s = params.alpha * sigma;
      for (std::size_t l = 0; l < nterms; ++l) {
        // C ybar by linearity: C y_new + th (C y_new - C y).
        CVec arg(z[l].size());
        for (std::size_t i = 0; i < arg.size(); ++i) {
          cx const cbar = cy_new[l][i] + th * (cy_new[l][i] - cy[l][i]);
          arg[i] = z[l][i] + s * cbar;
        }
        z_new[l] = problem.terms[l].conj_prox(arg, s);
      }
      ctz_new = sum_adjoints(problem, z_new, n);
      double dz2 = 0.0;
      for (std::size_t l = 0; l < nterms; ++l) {
        dz2 += dist2(z_new[l], z[l]);
      }
      double const lhs = sqrt_alpha * sigma * std::sqrt(dist2(ctz_new, ctz));
      double const rhs = params.ls_eps * std::sqrt(dz2);
      if (lhs <= rhs) {
        theta = th;
        dual_moved = dz2 > 0.0;
        break;
      }
      if (trials > params.max_backtracks) {
        throw DivergenceError("pdal: linesearch did not terminate after " + std::to_string(params.max_backtracks) +
                                " backtracks at iteration " + std::to_string(k),
                              res.trace);
      }
      sigma *= params.rho;
    }

    // A step that leaves the primal point in place while the duals still move
    // (typical of a cold dual start) says nothing about convergence.
    bool const stalled = y_new == y && dual_moved;
    y = std::move(y_new);
    cy = std::move(cy_new);
    z = std::move(z_new);
    ctz = std::move(ctz_new);
    sigma_prev = sigma;

    double const cost = objective(problem, cy, y);
    double rel = 0.0;
    if (cost_prev != 0.0) {
      rel = std::abs(cost - cost_prev) / std::abs(cost_prev);
    } else if (cost != 0.0) {
      rel = std::numeric_limits<double>::infinity();
    }
    res.trace.rows.push_back({k, cost, sigma, trials, rel});
    if (!std::isfinite(cost)) {
      throw DivergenceError("pdal: non-finite objective at iteration " + std::to_string(k), res.trace);
    }
    cost_prev = cost;
    if (rel < params.stop_tol && !stalled) {
      res.reason = StopReason::Converged;
      break;
    }
  }
  res.y = std::move(y);
  res.z = std::move(z);
  res.sigma = sigma_prev;
  return res;
}

} // namespace dynamo::pdal
