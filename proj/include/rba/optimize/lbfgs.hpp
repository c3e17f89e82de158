#pragma once

#include <deque>
#include <functional>
#include <span>
#include <vector>

namespace rba::opt {

/// Limited-memory BFGS with a strong-Wolfe line search over a flat variable
/// vector. One `step` call is one outer iteration: two-loop recursion for the
/// direction, line search along it, history update when the curvature
/// condition s'y > 0 holds. A failed line search rejects the step, clears the
/// history and retries once along steepest descent.
class Lbfgs {
 public:
  struct Config {
    int memory = 10;
    double c1 = 1e-4;  // Armijo constant
    double c2 = 0.9;   // strong curvature constant
    int max_line_iters = 25;
    double grad_tol = 1e-16;  // infinity-norm convergence threshold
  };

  /// Evaluates the objective at `x` and writes its gradient.
  using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

  struct StepResult {
    double f = 0.0;
    bool moved = false;
    bool converged = false;
  };

  Lbfgs(std::size_t dim, const Config& cfg);

  /// Advances from `x` given the objective value `f0` and gradient `g0`
  /// there. On success x is updated and g0 holds the new gradient.
  StepResult step(std::vector<double>& x, double f0, std::vector<double>& g0,
                  const Objective& objective);

  void clear_history();
  const Config& config() const { return cfg_; }

  /// Stored (s, y) pairs, newest last; exposed for checkpointing.
  struct Pair {
    std::vector<double> s, y;
  };
  const std::deque<Pair>& history() const { return history_; }
  void restore_history(std::deque<Pair> pairs) { history_ = std::move(pairs); }

 private:
  std::vector<double> direction(const std::vector<double>& g) const;

  Config cfg_;
  std::size_t dim_;
  std::deque<Pair> history_;
  bool first_step_ = true;
};

}  // namespace rba::opt
