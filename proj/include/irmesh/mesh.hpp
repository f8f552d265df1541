#pragma once

#include "irmesh/basis.hpp"
#include "irmesh/problem.hpp"

#include <Eigen/Dense>

#include <memory>
#include <vector>

namespace irmesh {

/// Mesh tuple: normalized interval partition (sum h_i = 1), interpolation
/// bases for x and u, and the quadrature degree used on every interval.
/// A value type: refinement transforms return new instances.
struct Mesh {
  Eigen::VectorXd interval_lengths;
  std::shared_ptr<const InterpolationBasis> x_basis;
  std::shared_ptr<const InterpolationBasis> u_basis;
  int quadrature_degree{1};

  int interval_count() const { return static_cast<int>(interval_lengths.size()); }
  int degree_x() const { return x_basis->degree; }
  int degree_u() const { return u_basis->degree; }

  /// Cumulative normalized boundaries s_0 = 0, ..., s_{n_H} = 1.
  Eigen::VectorXd boundaries() const;
};

Mesh uniform_mesh(int n_intervals, int degree_x, int degree_u, int n_quadrature,
                  NodeFamily family = NodeFamily::chebyshev_lobatto);

/// Split interval `index` into two equal halves.
Mesh bisect(const Mesh& mesh, int index);

/// Split interval `index` into `pieces` >= 2 equal sub-intervals.
Mesh partition(const Mesh& mesh, int index, int pieces);

/// Apply piece counts per interval in one pass (1 = keep as is).
Mesh refine_intervals(const Mesh& mesh, const std::vector<int>& pieces);

/// Same partition and bases, different quadrature degree.
Mesh with_quadrature(const Mesh& mesh, int n_quadrature);

/// Piecewise-polynomial trajectory on a mesh. Interval-boundary x nodes are
/// stored once (row g = i * degree_x + p), so continuity holds by
/// construction; u nodes are per interval and may jump across boundaries.
struct MeshedTrajectory {
  Mesh mesh;
  Eigen::MatrixXd x_nodes;  // (n_H * d_x + 1) x n_x
  Eigen::MatrixXd u_nodes;  // (n_H * (d_u + 1)) x n_u

  int n_x() const { return static_cast<int>(x_nodes.cols()); }
  int n_u() const { return static_cast<int>(u_nodes.cols()); }

  Eigen::Block<Eigen::MatrixXd> x_interval(int i);
  Eigen::Block<const Eigen::MatrixXd> x_interval(int i) const;
  Eigen::Block<Eigen::MatrixXd> u_interval(int i);
  Eigen::Block<const Eigen::MatrixXd> u_interval(int i) const;

  /// Values at normalized time s in [0, 1] (s = (t - t0) / (tf - t0)).
  Eigen::VectorXd x_at(double s) const;
  Eigen::VectorXd u_at(double s) const;

  /// Values within a specific interval at local tau in [-1, 1].
  Eigen::VectorXd x_in_interval(int interval, double tau) const;
  Eigen::VectorXd u_in_interval(int interval, double tau) const;

  static MeshedTrajectory zeros(const Mesh& mesh, int n_x, int n_u);
};

/// Interpolate a trajectory onto a refined mesh (new boundaries must be a
/// superset of the old ones) or onto the same partition with different
/// bases/quadrature. Each new interval samples the old interval that
/// contains it, so u keeps its one-sided values at old boundaries. When
/// `clamp_to` is given, u nodes and non-endpoint x nodes are clamped into
/// the problem's box bounds.
MeshedTrajectory transfer(const MeshedTrajectory& traj, const Mesh& new_mesh,
                          const DynamicFeasibilityProblem* clamp_to = nullptr);

}  // namespace irmesh
