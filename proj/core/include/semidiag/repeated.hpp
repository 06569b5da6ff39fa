#pragma once

#include <functional>
#include <vector>

#include "semidiag/block_system.hpp"

namespace semidiag::repeated {

struct NewtonOptions {
  double tol = 1e-12;
  int max_iterations = 25;
};

struct StepResult {
  std::vector<Mat> alpha12, alpha21;
  std::vector<Mat> factor;  // I + h^k [[0, alpha12], [alpha21, 0]]
  SampledBlockSystem next;  // order k + 1
  int max_iterations = 0;
  double max_newton_residual = 0.0;
  /// Estimated truncation error of the grid derivative of alpha.
  double fd_noise = 0.0;
  /// sup ||factor - I||
  double factor_deviation = 0.0;
};

/// One order-raising conjugation. Throws ConvergenceFailure when Newton does
/// not converge (the step size is too large), with h/2 as the suggested value.
StepResult step(const SampledBlockSystem& bs, const NewtonOptions& opt = {});

struct ConjugatorChain {
  std::vector<std::vector<Mat>> factors;
  std::vector<Mat> composed;  // product of the factors in application order

  void append(const std::vector<Mat>& factor);
  int length() const { return static_cast<int>(factors.size()); }
};

struct RunResult {
  ConjugatorChain chain;
  std::vector<SampledBlockSystem> systems;  // input order, then one per step
  std::vector<StepResult> steps;
  double max_condition = 0.0;
};

/// Repeats `step` until the system has order `target_order`.
RunResult run(const SampledBlockSystem& bs, int target_order, const NewtonOptions& opt = {}, int max_order = 6);

/// sup over the grid of ||h T' + T D - A T|| for the composed chain T, the
/// original full coefficient A and the final block-diagonal part D.
double conjugation_residual(const SampledBlockSystem& original, const ConjugatorChain& chain,
                            const SampledBlockSystem& final_system);

using SystemFactory = std::function<SampledBlockSystem(double h)>;

/// Largest h = h_start / 2^j at which one step converges.
double estimate_h_star(const SystemFactory& make, double h_start, const NewtonOptions& opt = {});

struct OrderRow {
  int order;
  double h;
  double sup_residual;
  double fitted_slope;
};

struct HStudy {
  std::vector<double> h_grid;
  std::vector<OrderRow> rows;                 // residual h^k sup|theta^k| per order and h
  std::vector<double> order_slopes;           // per order k, starting at the input order
  std::vector<double> factor_slopes;          // sup|T_j - I| per step
  std::vector<double> step_ratio_slopes;      // sup|theta^{k+1}| / sup|theta^k|
  std::vector<double> conjugation_residuals;  // per h
  double conjugation_slope = 0.0;
  double max_condition = 0.0;
  double fd_noise = 0.0;
};

HStudy study(const SystemFactory& make, const std::vector<double>& h_grid, int target_order,
             const NewtonOptions& opt = {});

}  // namespace semidiag::repeated
