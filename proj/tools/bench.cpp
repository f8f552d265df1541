// Benchmark of the serial reference kernels against the OpenMP-parallel
// ones on cart-pole transcriptions of growing size. The two paths must
// produce bitwise-identical values; any mismatch aborts the run.

#include "irmesh/driver.hpp"
#include "irmesh/models.hpp"
#include "irmesh/transcription.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using Clock = std::chrono::steady_clock;

double time_per_call(const std::function<void()>& fn, int min_reps, double min_seconds) {
  fn();  // warm up
  int reps = min_reps;
  while (true) {
    const auto start = Clock::now();
    for (int r = 0; r < reps; ++r) fn();
    const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    if (elapsed >= min_seconds || reps > (1 << 24)) return elapsed / reps;
    reps *= 4;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> sizes = {8, 40, 160, 640};
  if (argc > 1) {
    sizes.clear();
    for (int i = 1; i < argc; ++i) sizes.push_back(std::atoi(argv[i]));
  }

#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP; parallel mode falls back to serial\n");
#endif
  std::printf("%8s %10s | %12s %12s %8s | %12s %12s %8s\n", "n_H", "dof", "obj serial",
              "obj parallel", "speedup", "grad serial", "grad parallel", "speedup");

  const irmesh::DynamicFeasibilityProblem problem = irmesh::cartpole_problem();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);

  for (int n_h : sizes) {
    const irmesh::Mesh mesh = irmesh::uniform_mesh(n_h, 3, 3, 4);
    const irmesh::TranscribedProblem serial(problem, mesh, irmesh::ExecMode::serial);
    const irmesh::TranscribedProblem parallel(problem, mesh, irmesh::ExecMode::parallel);

    Eigen::VectorXd z(serial.dof());
    for (int j = 0; j < z.size(); ++j) z[j] = dist(rng);
    z = z.cwiseMax(serial.flat_lower()).cwiseMin(serial.flat_upper());

    irmesh::EvalCounter scratch;
    const double f_serial = serial.objective(z, scratch);
    const double f_parallel = parallel.objective(z, scratch);
    const Eigen::VectorXd g_serial = serial.gradient(z, scratch);
    const Eigen::VectorXd g_parallel = parallel.gradient(z, scratch);
    if (f_serial != f_parallel || (g_serial - g_parallel).cwiseAbs().maxCoeff() != 0.0) {
      std::fprintf(stderr, "FATAL: serial and parallel kernels disagree at n_H=%d\n", n_h);
      return 1;
    }

    const double t_obj_s =
        time_per_call([&] { serial.objective(z, scratch); }, 4, 0.2);
    const double t_obj_p =
        time_per_call([&] { parallel.objective(z, scratch); }, 4, 0.2);
    const double t_grad_s =
        time_per_call([&] { serial.gradient(z, scratch); }, 4, 0.2);
    const double t_grad_p =
        time_per_call([&] { parallel.gradient(z, scratch); }, 4, 0.2);

    std::printf("%8d %10d | %10.2f us %10.2f us %7.2fx | %10.2f us %10.2f us %7.2fx\n", n_h,
                serial.dof(), t_obj_s * 1e6, t_obj_p * 1e6, t_obj_s / t_obj_p, t_grad_s * 1e6,
                t_grad_p * 1e6, t_grad_s / t_grad_p);
  }
  return 0;
}
