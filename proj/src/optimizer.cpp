#include "irmesh/optimizer.hpp"

#include "irmesh/transcription.hpp"

#include <algorithm>
#include <cmath>

namespace irmesh {

Eigen::VectorXd project(const Eigen::VectorXd& z, const Eigen::VectorXd& lower,
                        const Eigen::VectorXd& upper) {
  return z.cwiseMax(lower).cwiseMin(upper);
}

std::vector<int> BindingSet::indices() const {
  std::vector<int> out;
  for (int j = 0; j < static_cast<int>(mask.size()); ++j)
    if (mask[j]) out.push_back(j);
  return out;
}

BindingSet binding_set(const Eigen::VectorXd& z, const Eigen::VectorXd& grad,
                       const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, double eps_z) {
  const double eps = std::min(eps_z, (z - project(z - grad, lower, upper)).norm());
  BindingSet binding;
  binding.mask.assign(z.size(), 0);
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    const bool at_lower = lower[j] <= z[j] && z[j] <= lower[j] + eps && grad[j] > 0.0;
    const bool at_upper = upper[j] - eps <= z[j] && z[j] <= upper[j] && grad[j] < 0.0;
    if (at_lower || at_upper) binding.mask[j] = 1;
  }
  return binding;
}

Eigen::VectorXd search_direction(const Eigen::VectorXd& grad, const BindingSet& binding,
                                 const CgMemory& memory, const OptimizerConfig& config,
                                 const Eigen::VectorXd* metric) {
  const Eigen::Index n = grad.size();
  auto scale = [&](Eigen::Index j) { return metric ? (*metric)[j] : 1.0; };

  // Binding coordinates take the raw gradient; the projection holds them.
  Eigen::VectorXd d(n);
  for (Eigen::Index j = 0; j < n; ++j)
    d[j] = binding.contains(static_cast<int>(j)) ? -grad[j] : -scale(j) * grad[j];

  if (config.direction == OptimizerConfig::Direction::projected_steepest_descent) return d;

  const bool restart = !memory.valid || !(memory.prev_binding == binding);
  if (!restart) {
    // Polak-Ribiere coefficient over the free coordinates, in the metric.
    double num = 0.0, den = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (binding.contains(static_cast<int>(j))) continue;
      num += scale(j) * grad[j] * (grad[j] - memory.prev_grad[j]);
      den += scale(j) * memory.prev_grad[j] * memory.prev_grad[j];
    }
    if (den > 0.0) {
      const double beta = num / den;
      double descent = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (binding.contains(static_cast<int>(j))) continue;
        d[j] = -scale(j) * grad[j] + beta * memory.prev_dir[j];
        descent += d[j] * grad[j];
      }
      if (descent >= 0.0) {
        // CG direction lost descent; fall back to scaled steepest descent.
        for (Eigen::Index j = 0; j < n; ++j)
          if (!binding.contains(static_cast<int>(j))) d[j] = -scale(j) * grad[j];
      }
    }
  }
  return d;
}

LineSearchResult line_search(BoxObjective& objective, const Eigen::VectorXd& z,
                             const Eigen::VectorXd& d, double f_z, const Eigen::VectorXd& grad,
                             const OptimizerConfig& config, double start_alpha) {
  LineSearchResult result;

  // Sufficient decrease along the projection arc, measured through the
  // projected displacement z - z(alpha).
  auto passes = [&](double alpha, Eigen::VectorXd& cand, double& f_cand) {
    cand = project(z + alpha * d, objective.lower(), objective.upper());
    f_cand = objective.value(cand);
    const double required = config.armijo_sigma * grad.dot(z - cand);
    return f_cand <= f_z - required && f_cand <= f_z;
  };

  double alpha = start_alpha > 0.0 ? start_alpha : config.alpha_init;
  Eigen::VectorXd cand;
  double f_cand;
  for (int k = 0; k < config.max_backtracks; ++k, alpha *= config.backtrack_factor) {
    if (!passes(alpha, cand, f_cand)) continue;
    result.accepted = true;
    result.z = std::move(cand);
    result.f = f_cand;
    result.alpha = alpha;
    result.backtracks = k;

    // Forward tracking: when the first candidate already passes, walk the
    // sequence upward to the largest step that still passes and improves.
    if (k == 0) {
      for (int e = 0; e < 20; ++e) {
        const double larger = result.alpha / config.backtrack_factor;
        Eigen::VectorXd next;
        double f_next;
        if (!passes(larger, next, f_next) || f_next >= result.f) break;
        result.z = std::move(next);
        result.f = f_next;
        result.alpha = larger;
      }
    }
    return result;
  }
  result.backtracks = config.max_backtracks;
  return result;
}

BlockResult InnerSolver::run_block(BoxObjective& objective, const Eigen::VectorXd& z_in,
                                   Warmth* warmth, const StepCallback& on_step) {
  const Eigen::VectorXd& lower = objective.lower();
  const Eigen::VectorXd& upper = objective.upper();
  const bool precondition =
      config_.preconditioner == OptimizerConfig::Preconditioner::gauss_newton_diagonal;

  Eigen::VectorXd curvature;
  auto eval_gradient = [&](const Eigen::VectorXd& at) {
    return precondition ? objective.gradient_with_metric(at, curvature)
                        : objective.gradient(at);
  };
  auto metric_from_curvature = [&]() {
    // Inverse curvature, floored so near-zero diagonal entries cannot blow
    // the direction up.
    const double top = curvature.maxCoeff();
    const double floor = top > 0.0 ? 1e-10 * top : 1.0;
    Eigen::VectorXd m(curvature.size());
    for (Eigen::Index j = 0; j < curvature.size(); ++j)
      m[j] = 1.0 / std::max(curvature[j], floor);
    return m;
  };

  BlockResult out;
  out.z = project(z_in, lower, upper);
  const bool projected_away = (out.z - z_in).cwiseAbs().maxCoeff() > 0.0;
  const bool f_known = warmth != nullptr && warmth->valid && !projected_away;
  const bool g_known = f_known && warmth->grad.size() == out.z.size() &&
                       (!precondition || warmth->curvature.size() == out.z.size());
  out.f = f_known ? warmth->f : objective.value(out.z);
  if (g_known) {
    out.grad = warmth->grad;
    if (precondition) curvature = warmth->curvature;
  } else {
    out.grad = eval_gradient(out.z);
  }
  out.status = BlockStatus::iteration_cap;
  if (precondition && frozen_metric_.size() != out.z.size())
    frozen_metric_ = metric_from_curvature();
  Eigen::VectorXd metric = frozen_metric_;

  BindingSet binding = binding_set(out.z, out.grad, lower, upper, config_.eps_z);

  for (int m = 0; m < config_.max_inner_iterations; ++m) {
    const Eigen::VectorXd d =
        search_direction(out.grad, binding, memory_, config_, precondition ? &metric : nullptr);
    if (d.cwiseAbs().maxCoeff() == 0.0) {
      out.status = BlockStatus::stationary;
      break;
    }

    // First-order initial step: reuse the previous accepted step scaled by
    // the slope ratio, so the search starts near the 1-D minimizer.
    const double gd = out.grad.dot(d);
    double start_alpha = -1.0;
    if (alpha_memory_ > 0.0 && gd_memory_ < 0.0 && gd < 0.0)
      start_alpha = std::clamp(alpha_memory_ * (gd_memory_ / gd), 1e-12, 1e12);

    const LineSearchResult ls =
        line_search(objective, out.z, d, out.f, out.grad, config_, start_alpha);
    if (!ls.accepted) {
      out.status = BlockStatus::stalled;
      break;
    }
    alpha_memory_ = ls.alpha;
    gd_memory_ = gd;

    memory_.prev_grad = out.grad;
    memory_.prev_dir = d;
    memory_.prev_binding = binding;
    memory_.valid = true;

    out.z = ls.z;
    out.f = ls.f;
    out.grad = eval_gradient(out.z);
    ++out.steps;

    const BindingSet next_binding = binding_set(out.z, out.grad, lower, upper, config_.eps_z);
    if (on_step) {
      const double violation =
          std::max(0.0, std::max((lower - out.z).maxCoeff(), (out.z - upper).maxCoeff()));
      on_step(out.steps, out.f, optimality_measure(out.z, out.grad, lower, upper), ls.alpha,
              violation);
    }
    const bool stable = next_binding == binding;
    binding = next_binding;
    if (stable) {
      out.status = BlockStatus::binding_stable;
      break;
    }
  }

  out.theta = optimality_measure(out.z, out.grad, lower, upper);
  if (warmth != nullptr) {
    warmth->valid = true;
    warmth->f = out.f;
    warmth->grad = out.grad;
    if (precondition) warmth->curvature = curvature;
  }
  return out;
}

}  // namespace irmesh
