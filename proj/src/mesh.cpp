#include "irmesh/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace irmesh {

namespace {

constexpr double kBoundaryTol = 1e-12;

int containing_interval(const Eigen::VectorXd& boundaries, double s) {
  // boundaries has n+1 entries; returns i with boundaries[i] <= s < boundaries[i+1],
  // clamped to the valid range.
  const int n = static_cast<int>(boundaries.size()) - 1;
  int lo = 0, hi = n - 1;
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (s >= boundaries[mid])
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo;
}

}  // namespace

Eigen::VectorXd Mesh::boundaries() const {
  Eigen::VectorXd b(interval_count() + 1);
  b[0] = 0.0;
  for (int i = 0; i < interval_count(); ++i) b[i + 1] = b[i] + interval_lengths[i];
  return b;
}

Mesh uniform_mesh(int n_intervals, int degree_x, int degree_u, int n_quadrature,
                  NodeFamily family) {
  if (n_intervals < 1) throw std::invalid_argument("mesh needs at least one interval");
  if (n_quadrature < 1) throw std::invalid_argument("quadrature degree must be >= 1");
  Mesh mesh;
  mesh.interval_lengths = Eigen::VectorXd::Constant(n_intervals, 1.0 / n_intervals);
  mesh.x_basis = cached_basis(degree_x, family);
  mesh.u_basis = cached_basis(degree_u, family);
  mesh.quadrature_degree = n_quadrature;
  return mesh;
}

Mesh bisect(const Mesh& mesh, int index) { return partition(mesh, index, 2); }

Mesh partition(const Mesh& mesh, int index, int pieces) {
  if (index < 0 || index >= mesh.interval_count())
    throw std::out_of_range("interval index out of range");
  if (pieces < 2) throw std::invalid_argument("partition needs at least 2 pieces");
  std::vector<int> counts(mesh.interval_count(), 1);
  counts[index] = pieces;
  return refine_intervals(mesh, counts);
}

Mesh refine_intervals(const Mesh& mesh, const std::vector<int>& pieces) {
  if (static_cast<int>(pieces.size()) != mesh.interval_count())
    throw std::invalid_argument("pieces vector size mismatch");
  int total = 0;
  for (int c : pieces) {
    if (c < 1) throw std::invalid_argument("piece count must be >= 1");
    total += c;
  }
  Mesh out = mesh;
  out.interval_lengths.resize(total);
  int k = 0;
  for (int i = 0; i < mesh.interval_count(); ++i) {
    const double h = mesh.interval_lengths[i];
    if (pieces[i] == 1) {
      out.interval_lengths[k++] = h;  // untouched intervals keep their exact length
    } else {
      const double piece = h / pieces[i];
      for (int c = 0; c < pieces[i]; ++c) out.interval_lengths[k++] = piece;
    }
  }
  return out;
}

Mesh with_quadrature(const Mesh& mesh, int n_quadrature) {
  if (n_quadrature < 1) throw std::invalid_argument("quadrature degree must be >= 1");
  Mesh out = mesh;
  out.quadrature_degree = n_quadrature;
  return out;
}

Eigen::Block<Eigen::MatrixXd> MeshedTrajectory::x_interval(int i) {
  return x_nodes.middleRows(i * mesh.degree_x(), mesh.degree_x() + 1);
}

Eigen::Block<const Eigen::MatrixXd> MeshedTrajectory::x_interval(int i) const {
  return x_nodes.middleRows(i * mesh.degree_x(), mesh.degree_x() + 1);
}

Eigen::Block<Eigen::MatrixXd> MeshedTrajectory::u_interval(int i) {
  return u_nodes.middleRows(i * (mesh.degree_u() + 1), mesh.degree_u() + 1);
}

Eigen::Block<const Eigen::MatrixXd> MeshedTrajectory::u_interval(int i) const {
  return u_nodes.middleRows(i * (mesh.degree_u() + 1), mesh.degree_u() + 1);
}

Eigen::VectorXd MeshedTrajectory::x_in_interval(int interval, double tau) const {
  Eigen::VectorXd out(n_x());
  const auto block = x_interval(interval);
  for (int c = 0; c < n_x(); ++c) out[c] = eval_interpolant(*mesh.x_basis, block.col(c), tau);
  return out;
}

Eigen::VectorXd MeshedTrajectory::u_in_interval(int interval, double tau) const {
  Eigen::VectorXd out(n_u());
  const auto block = u_interval(interval);
  for (int c = 0; c < n_u(); ++c) out[c] = eval_interpolant(*mesh.u_basis, block.col(c), tau);
  return out;
}

Eigen::VectorXd MeshedTrajectory::x_at(double s) const {
  const Eigen::VectorXd b = mesh.boundaries();
  const int i = containing_interval(b, s);
  const double tau =
      std::clamp(2.0 * (s - b[i]) / mesh.interval_lengths[i] - 1.0, -1.0, 1.0);
  return x_in_interval(i, tau);
}

Eigen::VectorXd MeshedTrajectory::u_at(double s) const {
  const Eigen::VectorXd b = mesh.boundaries();
  const int i = containing_interval(b, s);
  const double tau =
      std::clamp(2.0 * (s - b[i]) / mesh.interval_lengths[i] - 1.0, -1.0, 1.0);
  return u_in_interval(i, tau);
}

MeshedTrajectory MeshedTrajectory::zeros(const Mesh& mesh, int n_x, int n_u) {
  MeshedTrajectory traj;
  traj.mesh = mesh;
  traj.x_nodes = Eigen::MatrixXd::Zero(mesh.interval_count() * mesh.degree_x() + 1, n_x);
  traj.u_nodes = Eigen::MatrixXd::Zero(mesh.interval_count() * (mesh.degree_u() + 1), n_u);
  return traj;
}

MeshedTrajectory transfer(const MeshedTrajectory& traj, const Mesh& new_mesh,
                          const DynamicFeasibilityProblem* clamp_to) {
  const Mesh& old_mesh = traj.mesh;
  const Eigen::VectorXd old_b = old_mesh.boundaries();
  const Eigen::VectorXd new_b = new_mesh.boundaries();

  const bool same_partition =
      old_mesh.interval_count() == new_mesh.interval_count() &&
      (old_b - new_b).cwiseAbs().maxCoeff() <= kBoundaryTol;
  if (!same_partition) {
    // Every old boundary must reappear in the new mesh (h-refinement).
    for (int i = 1; i < old_b.size() - 1; ++i) {
      const int j = containing_interval(new_b, old_b[i]);
      const bool matches = std::abs(new_b[j] - old_b[i]) <= kBoundaryTol ||
                           std::abs(new_b[j + 1] - old_b[i]) <= kBoundaryTol;
      if (!matches)
        throw std::invalid_argument("transfer: new mesh boundaries do not refine the old mesh");
    }
  }

  MeshedTrajectory out = MeshedTrajectory::zeros(new_mesh, traj.n_x(), traj.n_u());

  const int d_x = new_mesh.degree_x();
  const int d_u = new_mesh.degree_u();
  for (int j = 0; j < new_mesh.interval_count(); ++j) {
    const double lo = new_b[j];
    const double len = new_mesh.interval_lengths[j];
    // Owner = old interval containing this new interval's midpoint.
    const int owner = containing_interval(old_b, lo + 0.5 * len);
    const double old_lo = old_b[owner];
    const double old_len = old_mesh.interval_lengths[owner];

    auto old_tau = [&](double tau_new) {
      const double s = lo + 0.5 * (tau_new + 1.0) * len;
      return std::clamp(2.0 * (s - old_lo) / old_len - 1.0, -1.0, 1.0);
    };

    const int p0 = (j == 0) ? 0 : 1;  // shared boundary row was written by the left interval
    for (int p = p0; p <= d_x; ++p) {
      out.x_nodes.row(j * d_x + p) = traj.x_in_interval(owner, old_tau(new_mesh.x_basis->nodes[p]));
    }
    for (int p = 0; p <= d_u; ++p) {
      out.u_nodes.row(j * (d_u + 1) + p) =
          traj.u_in_interval(owner, old_tau(new_mesh.u_basis->nodes[p]));
    }
  }

  if (clamp_to != nullptr) {
    const auto& X = clamp_to->x_bounds;
    const auto& U = clamp_to->u_bounds;
    const int last = static_cast<int>(out.x_nodes.rows()) - 1;
    for (int g = 1; g < last; ++g) {
      for (int c = 0; c < out.n_x(); ++c)
        out.x_nodes(g, c) = std::clamp(out.x_nodes(g, c), X.lower[c], X.upper[c]);
    }
    for (int g = 0; g < out.u_nodes.rows(); ++g) {
      for (int c = 0; c < out.n_u(); ++c)
        out.u_nodes(g, c) = std::clamp(out.u_nodes(g, c), U.lower[c], U.upper[c]);
    }
  }

  return out;
}

}  // namespace irmesh
