#include "spme/solver.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <array>
#include <memory>
#include <cmath>
#include <string>

#include "spme/errors.hpp"
#include "spme/noise_field.hpp"

namespace spme {

double phi(double r, double m) {
  const double a = std::abs(r);
  double p;
  if (m == 2.0)
    p = a * a;
  else if (m == 3.0)
    p = a * a * a;
  else
    p = std::pow(a, m);
  return r < 0.0 ? -p : p;
}

double phi_reg(double r, double m, double delta) { return phi(r, m) + delta * r; }

namespace {

// m |r|^(m-1)
double dphi(double r, double m) {
  const double a = std::abs(r);
  if (m == 2.0) return 2.0 * a;
  if (m == 3.0) return 3.0 * a * a;
  return m * std::pow(a, m - 1.0);
}

struct Stencil {
  std::vector<std::size_t> free_nodes;
  std::vector<std::ptrdiff_t> free_of;
  std::vector<std::array<std::size_t, 4>> nbr;
  int nnbr = 2;

  explicit Stencil(const Grid& grid) {
    nnbr = 2 * grid.dim();
    free_of.assign(grid.size(), -1);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid.dirichlet(i)) continue;
      free_of[i] = static_cast<std::ptrdiff_t>(free_nodes.size());
      free_nodes.push_back(i);
      const auto c = grid.coords(i);
      std::array<std::size_t, 4> nb{};
      nb[0] = grid.index(c[0] - 1, c[1]);
      nb[1] = grid.index(c[0] + 1, c[1]);
      if (grid.dim() == 2) {
        nb[2] = grid.index(c[0], c[1] - 1);
        nb[3] = grid.index(c[0], c[1] + 1);
      }
      nbr.push_back(nb);
    }
  }
};

class StepSolver {
 public:
  StepSolver(const Grid& grid, double m, double delta)
      : grid_(grid), st_(grid), m_(m), delta_(delta), inv_h2_(1.0 / (grid.h() * grid.h())) {
    const std::size_t nf = st_.free_nodes.size();
    psi_.resize(grid.size());
    dpsi_.resize(grid.size());
    res_.resize(nf);
    trial_res_.resize(nf);
    step_.resize(nf);
    if (grid.dim() == 1) {
      lower_.resize(nf);
      diag_.resize(nf);
      upper_.resize(nf);
      cprime_.resize(nf);
    } else {
      matrix_.resize(static_cast<Eigen::Index>(nf), static_cast<Eigen::Index>(nf));
    }
  }

  // Solves Y - yold - dt rho1 Lap(c Phi_delta(Y)) = 0 for the free nodes of
  // y (pinned entries of y already hold the boundary values at t_new).
  // Returns the Newton iteration count.
  int solve(Field& y, const Field& yold, std::span<const double> rho1, std::span<const double> c,
            double dt, double tol_abs, int max_iter, std::size_t step_index) {
    coef_ = c;
    for (std::size_t i = 0; i < grid_.size(); ++i)
      if (grid_.dirichlet(i)) psi_[i] = c[i] * phi_reg(y[i], m_, delta_);
    double r = residual(y, yold, rho1, dt, res_);
    for (int it = 1; it <= max_iter; ++it) {
      assemble_and_solve(y, rho1, dt);
      double theta = 1.0;
      double r_trial = 0.0;
      trial_ = y;
      for (int k = 0; k < 30; ++k) {
        for (std::size_t f = 0; f < st_.free_nodes.size(); ++f)
          trial_[st_.free_nodes[f]] = y[st_.free_nodes[f]] - theta * step_[f];
        r_trial = residual(trial_, yold, rho1, dt, trial_res_);
        if (r_trial <= r || !std::isfinite(r)) break;
        theta *= 0.5;
      }
      double upd = 0.0;
      for (double s : step_) upd = std::max(upd, std::abs(s));
      upd *= theta;
      y.swap(trial_);
      res_.swap(trial_res_);
      r = r_trial;
      if (!std::isfinite(r) || !std::isfinite(upd))
        throw NumericalBlowup("solver: non-finite value at step " + std::to_string(step_index),
                              step_index);
      if (upd <= tol_abs) return it;
    }
    throw SolverDivergence("solver: Newton did not converge at step " + std::to_string(step_index),
                           step_index);
  }

 private:
  double residual(const Field& y, const Field& yold, std::span<const double> rho1, double dt,
                  std::vector<double>& out) {
    for (std::size_t i : st_.free_nodes) psi_[i] = coef_[i] * phi_reg(y[i], m_, delta_);
    double r = 0.0;
    const double nn = st_.nnbr;
    for (std::size_t f = 0; f < st_.free_nodes.size(); ++f) {
      const std::size_t i = st_.free_nodes[f];
      const auto& nb = st_.nbr[f];
      double lap = -nn * psi_[i];
      for (int k = 0; k < st_.nnbr; ++k) lap += psi_[nb[k]];
      out[f] = y[i] - yold[i] - dt * rho1[i] * lap * inv_h2_;
      r = std::max(r, std::abs(out[f]));
    }
    return r;
  }

  void assemble_and_solve(const Field& y, std::span<const double> rho1, double dt) {
    for (std::size_t i : st_.free_nodes) dpsi_[i] = coef_[i] * (dphi(y[i], m_) + delta_);
    const std::size_t nf = st_.free_nodes.size();
    if (grid_.dim() == 1) {
      for (std::size_t f = 0; f < nf; ++f) {
        const std::size_t i = st_.free_nodes[f];
        const double s = dt * rho1[i] * inv_h2_;
        diag_[f] = 1.0 + 2.0 * s * dpsi_[i];
        const std::size_t l = st_.nbr[f][0], u = st_.nbr[f][1];
        lower_[f] = st_.free_of[l] >= 0 ? -s * dpsi_[l] : 0.0;
        upper_[f] = st_.free_of[u] >= 0 ? -s * dpsi_[u] : 0.0;
      }
      // Thomas algorithm; free nodes are ordered so consecutive entries are
      // grid neighbours whenever they couple.
      cprime_[0] = upper_[0] / diag_[0];
      step_[0] = res_[0] / diag_[0];
      for (std::size_t f = 1; f < nf; ++f) {
        const double denom = diag_[f] - lower_[f] * cprime_[f - 1];
        cprime_[f] = upper_[f] / denom;
        step_[f] = (res_[f] - lower_[f] * step_[f - 1]) / denom;
      }
      for (std::size_t f = nf - 1; f-- > 0;) step_[f] -= cprime_[f] * step_[f + 1];
      return;
    }
    triplets_.clear();
    for (std::size_t f = 0; f < nf; ++f) {
      const std::size_t i = st_.free_nodes[f];
      const double s = dt * rho1[i] * inv_h2_;
      const auto row = static_cast<int>(f);
      triplets_.emplace_back(row, row, 1.0 + st_.nnbr * s * dpsi_[i]);
      for (int k = 0; k < st_.nnbr; ++k) {
        const std::size_t j = st_.nbr[f][k];
        if (st_.free_of[j] >= 0)
          triplets_.emplace_back(row, static_cast<int>(st_.free_of[j]), -s * dpsi_[j]);
      }
    }
    matrix_.setFromTriplets(triplets_.begin(), triplets_.end());
    if (!analyzed_) {
      lu_.analyzePattern(matrix_);
      analyzed_ = true;
    }
    lu_.factorize(matrix_);
    Eigen::Map<const Eigen::VectorXd> rhs(res_.data(), static_cast<Eigen::Index>(nf));
    Eigen::VectorXd sol = lu_.solve(rhs);
    for (std::size_t f = 0; f < nf; ++f) step_[f] = sol[static_cast<Eigen::Index>(f)];
  }

  const Grid& grid_;
  Stencil st_;
  double m_, delta_, inv_h2_;
  std::span<const double> coef_;
  std::vector<double> psi_, dpsi_, res_, trial_res_, step_;
  Field trial_;
  std::vector<double> lower_, diag_, upper_, cprime_;
  Eigen::SparseMatrix<double> matrix_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  std::vector<Eigen::Triplet<double>> triplets_;
  bool analyzed_ = false;
};

void check_params(const SolverParams& p) {
  if (!(p.m > 1.0)) throw InvalidArgument("solver: m must exceed 1");
  if (!(p.dt > 0.0)) throw InvalidArgument("solver: dt must be positive");
  if (!(p.newton_tol > 0.0)) throw InvalidArgument("solver: newton_tol must be positive");
  if (p.newton_max < 1) throw InvalidArgument("solver: newton_max must be at least 1");
  if (p.delta_reg && *p.delta_reg < 0.0) throw InvalidArgument("solver: delta_reg must be >= 0");
  if (!(p.t_end > p.t_start)) throw InvalidArgument("solver: empty time window");
  if (p.snapshot_stride == 0) throw InvalidArgument("solver: snapshot_stride must be >= 1");
}

}  // namespace

NodalCoefficient constant_coefficient(double value) {
  return [value](double, std::span<double> out) { std::fill(out.begin(), out.end(), value); };
}

BoundaryData constant_boundary(double value) {
  return [value](double, const Point&) { return value; };
}

Trajectory solve_general(const NodalCoefficient& rho1, const NodalCoefficient& rho2,
                         const Field& y0, const BoundaryData& g, const Grid& grid,
                         const SolverParams& params) {
  check_params(params);
  if (y0.size() != grid.size()) throw InvalidArgument("solver: initial field does not match grid");

  const double m = params.m;
  Field y = y0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid.dirichlet(i)) y[i] = g(params.t_start, grid.point(i));
  for (double v : y)
    if (!std::isfinite(v)) throw InvalidArgument("solver: initial data must be finite");

  const double y0_sup = sup_norm(y);
  const double delta = params.delta_reg.value_or(1e-6 * std::pow(y0_sup, m - 1.0));

  Trajectory traj{grid, {}, {}, g};
  traj.delta_reg = delta;
  traj.support_threshold =
      params.support_threshold.value_or(delta > 0.0 ? 10.0 * std::pow(delta, 1.0 / (m - 1.0)) : 0.0);
  traj.times.push_back(params.t_start);
  traj.snapshots.push_back(y);

  const double span = params.t_end - params.t_start;
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(span / params.dt - 1e-9)));
  const double dt = span / static_cast<double>(steps);

  StepSolver solver(grid, m, delta);
  std::vector<double> r1(grid.size()), r2(grid.size()), c(grid.size());
  Field yold;
  for (std::size_t n = 1; n <= steps; ++n) {
    const double t = params.t_start + dt * static_cast<double>(n);
    rho1(t, r1);
    rho2(t, r2);
    for (std::size_t i = 0; i < grid.size(); ++i) c[i] = phi(r2[i], m);
    yold = y;
    double scale = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid.dirichlet(i)) y[i] = g(t, grid.point(i));
      scale = std::max(scale, std::abs(grid.dirichlet(i) ? y[i] : yold[i]));
    }
    const double tol = params.newton_tol * std::max(scale, 1e-300);
    traj.newton_iterations += static_cast<std::size_t>(
        solver.solve(y, yold, r1, c, dt, tol, params.newton_max, n));
    if (n % params.snapshot_stride == 0 || n == steps) {
      traj.times.push_back(t);
      traj.snapshots.push_back(y);
    }
  }
  return traj;
}

Trajectory solve_spme(const Field& x0, const NoiseField& field, double lambda, const BoundaryData& g,
                      const Grid& grid, const SolverParams& params) {
  if (field.dim() != grid.dim()) throw InvalidArgument("solve_spme: field and grid dimensions differ");
  if (x0.size() != grid.size()) throw InvalidArgument("solve_spme: initial field does not match grid");
  if (lambda < 0.0) throw InvalidArgument("solve_spme: lambda must be >= 0");
  std::vector<Point> nodes(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) nodes[i] = grid.point(i);
  auto noise = std::make_shared<PointwiseNoise>(field, nodes);

  // Y = exp(mu - lambda t) X
  auto exponent = [noise, lambda](double t, std::span<double> out) {
    noise->mu(t, out);
    for (double& v : out) v -= lambda * t;
  };
  NodalCoefficient rho1 = [exponent](double t, std::span<double> out) {
    exponent(t, out);
    for (double& v : out) v = std::exp(v);
  };
  NodalCoefficient rho2 = [exponent](double t, std::span<double> out) {
    exponent(t, out);
    for (double& v : out) v = std::exp(-v);
  };
  BoundaryData gy = [&field, g, lambda](double t, const Point& x) {
    return std::exp(field.mu(t, x) - lambda * t) * g(t, x);
  };

  std::vector<double> e(grid.size());
  exponent(params.t_start, e);
  Field y0(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) y0[i] = std::exp(e[i]) * x0[i];

  Trajectory traj = solve_general(rho1, rho2, y0, gy, grid, params);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    exponent(traj.times[k], e);
    for (std::size_t i = 0; i < grid.size(); ++i) traj.snapshots[k][i] *= std::exp(-e[i]);
  }
  traj.boundary = g;
  return traj;
}

std::optional<std::size_t> Trajectory::find(double t) const {
  const auto it = std::lower_bound(times.begin(), times.end(), t - 1e-9 * (1.0 + std::abs(t)));
  if (it != times.end() && std::abs(*it - t) <= 1e-9 * (1.0 + std::abs(t)))
    return static_cast<std::size_t>(it - times.begin());
  return std::nullopt;
}

Field Trajectory::at(double t) const {
  const double tol = 1e-9 * (1.0 + std::abs(t));
  if (times.empty() || t < times.front() - tol || t > times.back() + tol)
    throw InvalidArgument("trajectory: time outside the stored window");
  if (auto k = find(t)) return snapshots[*k];
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times.begin());
  const double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
  Field out(snapshots[k].size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (1.0 - w) * snapshots[k - 1][i] + w * snapshots[k][i];
  return out;
}

double sup_norm(std::span<const double> f) {
  double s = 0.0;
  for (double v : f) s = std::max(s, std::abs(v));
  return s;
}

double l1_norm(const Grid& grid, std::span<const double> f) {
  double s = 0.0;
  for (double v : f) s += std::abs(v);
  return s * std::pow(grid.h(), grid.dim());
}

LinfMonitor monitor_linf(const Trajectory& traj, double c_monitor) {
  LinfMonitor mon;
  for (const auto& s : traj.snapshots) mon.sup.push_back(sup_norm(s));
  if (mon.sup.empty()) return mon;
  const double limit = c_monitor * mon.sup.front();
  for (std::size_t k = 0; k < mon.sup.size(); ++k) {
    if (mon.sup[k] > limit * (1.0 + 1e-12)) {
      mon.violated = true;
      mon.first_violation = k;
      break;
    }
  }
  return mon;
}

}  // namespace spme
