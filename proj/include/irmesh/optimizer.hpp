#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace irmesh {

struct OptimizerConfig {
  enum class Direction { projected_steepest_descent, projected_conjugate_gradient };

  /// Diagonal metric on the free coordinates (two-metric projection).
  /// gauss_newton_diagonal uses the least-squares Hessian diagonal the
  /// gradient evaluation provides; it costs no extra Jacobian evaluations
  /// and tames the stiff derivative-column scaling of fine meshes.
  enum class Preconditioner { none, gauss_newton_diagonal };

  double eps_z = 1e-6;             // binding-tolerance cap
  double armijo_sigma = 1e-4;      // sufficient-decrease parameter
  double backtrack_factor = 0.5;   // step shrink, in (0, 1)
  double alpha_init = 1.0;
  int max_backtracks = 40;
  int max_inner_iterations = 10000;
  Direction direction = Direction::projected_conjugate_gradient;
  Preconditioner preconditioner = Preconditioner::gauss_newton_diagonal;
};

/// Minimal view of a box-constrained problem. value/gradient do their own
/// evaluation counting.
class BoxObjective {
 public:
  virtual ~BoxObjective() = default;
  virtual double value(const Eigen::VectorXd& z) = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& z) = 0;
  virtual const Eigen::VectorXd& lower() const = 0;
  virtual const Eigen::VectorXd& upper() const = 0;

  /// Gradient plus a positive curvature-diagonal estimate for the
  /// preconditioner. Default: unit diagonal.
  virtual Eigen::VectorXd gradient_with_metric(const Eigen::VectorXd& z,
                                               Eigen::VectorXd& curvature_diag) {
    curvature_diag = Eigen::VectorXd::Ones(z.size());
    return gradient(z);
  }
};

Eigen::VectorXd project(const Eigen::VectorXd& z, const Eigen::VectorXd& lower,
                        const Eigen::VectorXd& upper);

/// Indices currently held on a bound: at (or within eps of) the bound with
/// the gradient pushing outward, eps = min(eps_z, ||z - P(z - g)||).
struct BindingSet {
  std::vector<std::uint8_t> mask;

  bool operator==(const BindingSet& other) const { return mask == other.mask; }
  bool contains(int j) const { return mask[j] != 0; }
  std::vector<int> indices() const;
};

BindingSet binding_set(const Eigen::VectorXd& z, const Eigen::VectorXd& grad,
                       const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, double eps_z);

/// Conjugate-gradient memory carried between iterations (and between
/// blocks on the same mesh). Invalidated whenever the decision vector
/// changes dimension.
struct CgMemory {
  bool valid{false};
  Eigen::VectorXd prev_grad;
  Eigen::VectorXd prev_dir;
  BindingSet prev_binding;
};

/// Two-metric direction: -g on the binding coordinates, Polak-Ribiere CG on
/// the free ones with restart to steepest descent when the binding set
/// changed or the CG direction fails the descent test. `metric` is the
/// inverse curvature diagonal applied to the free coordinates (null =
/// identity).
Eigen::VectorXd search_direction(const Eigen::VectorXd& grad, const BindingSet& binding,
                                 const CgMemory& memory, const OptimizerConfig& config,
                                 const Eigen::VectorXd* metric = nullptr);

struct LineSearchResult {
  bool accepted{false};
  Eigen::VectorXd z;
  double f{0.0};
  double alpha{0.0};
  int backtracks{0};
};

/// Projection-arc Armijo backtracking: z(a) = P(z + a d), accepting the
/// largest a in {start * factor^k} with
///   f(z(a)) <= f(z) - sigma * <g, z - z(a)>   and   f(z(a)) <= f(z).
/// start_alpha <= 0 means config.alpha_init; the solver passes its adaptive
/// step memory here so consecutive searches track the local curvature.
LineSearchResult line_search(BoxObjective& objective, const Eigen::VectorXd& z,
                             const Eigen::VectorXd& d, double f_z, const Eigen::VectorXd& grad,
                             const OptimizerConfig& config, double start_alpha = -1.0);

enum class BlockStatus {
  binding_stable,  // B(z_{m+1}) == B(z_m), the block's stopping rule
  stationary,      // gradient vanished
  stalled,         // no step length accepted
  iteration_cap,
};

struct BlockResult {
  Eigen::VectorXd z;
  Eigen::VectorXd grad;
  double f{0.0};
  double theta{0.0};  // optimality measure at z
  BlockStatus status{BlockStatus::binding_stable};
  int steps{0};  // accepted steps in this block
};

/// Runs box-constrained iteration blocks: project, step along the
/// projection arc, stop once the binding set repeats between consecutive
/// iterates. At least one step is attempted per block, so the caller
/// always observes progress or a stall. CG memory persists across blocks
/// until reset().
class InnerSolver {
 public:
  explicit InnerSolver(OptimizerConfig config) : config_(std::move(config)) {}

  /// Called after every accepted step: (step index, f, theta, alpha,
  /// max bound violation of the new iterate).
  using StepCallback = std::function<void(int, double, double, double, double)>;

  /// Carries (f, gradient, curvature diagonal) between blocks so the next
  /// block does not re-evaluate them at the same iterate.
  struct Warmth {
    bool valid{false};
    double f{0.0};
    Eigen::VectorXd grad;
    Eigen::VectorXd curvature;
  };

  /// warmth, when valid, must describe the objective at z exactly; the
  /// block updates it to the returned iterate.
  BlockResult run_block(BoxObjective& objective, const Eigen::VectorXd& z,
                        Warmth* warmth = nullptr, const StepCallback& on_step = {});

  /// Drops the CG memory and the frozen metric (the decision vector
  /// changed). Step-size memory survives; it is a scalar curvature
  /// estimate, not tied to a dimension.
  void reset() {
    memory_.valid = false;
    frozen_metric_.resize(0);
  }
  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  CgMemory memory_;
  double alpha_memory_{-1.0};  // previous accepted step; <0 = none yet
  double gd_memory_{0.0};      // slope <g, d> of the previous accepted step
  Eigen::VectorXd frozen_metric_;  // per-mesh preconditioner (empty = stale)
};

}  // namespace irmesh
