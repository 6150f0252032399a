// Times the OpenMP kernels against their serial references and checks that
// both produce identical output.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "mired/kernels.hpp"

namespace {

using mired::DenseMatrix;

DenseMatrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  DenseMatrix m(r, c);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

double best_of(int reps, const std::function<DenseMatrix()>& fn, DenseMatrix& out) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    out = fn();
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (s < best) best = s;
  }
  return best;
}

void compare(const char* name, int reps, const std::function<DenseMatrix()>& par,
             const std::function<DenseMatrix()>& ser) {
  DenseMatrix a, b;
  const double tp = best_of(reps, par, a);
  const double ts = best_of(reps, ser, b);
  std::printf("%-18s serial %9.3f ms  omp %9.3f ms  speedup %5.2fx  identical=%s\n", name,
              ts * 1e3, tp * 1e3, ts / tp, a == b ? "yes" : "NO");
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t l = argc > 1 ? std::stoul(argv[1]) : 400;
  const std::size_t d = argc > 2 ? std::stoul(argv[2]) : 79;
  const int reps = 5;
  std::mt19937_64 rng(7);
  const DenseMatrix x = random_matrix(l, d, rng);
  const DenseMatrix w = random_matrix(d, 30, rng);
  const DenseMatrix sq = random_matrix(l, l, rng);

  std::printf("threads=%d l=%zu d=%zu\n", omp_get_max_threads(), l, d);
  namespace k = mired::kernels;
  compare("matmul l*d x d*30", reps, [&] { return k::matmul(x, w); },
          [&] { return k::serial::matmul(x, w); });
  compare("matmul l*l x l*l", reps, [&] { return k::matmul(sq, sq); },
          [&] { return k::serial::matmul(sq, sq); });
  compare("matmul_tn", reps, [&] { return k::matmul_tn(x, x); },
          [&] { return k::serial::matmul_tn(x, x); });
  compare("matmul_nt", reps, [&] { return k::matmul_nt(x, x); },
          [&] { return k::serial::matmul_nt(x, x); });
  compare("pairwise_sq_dist", reps, [&] { return k::pairwise_sq_dist(x, x); },
          [&] { return k::serial::pairwise_sq_dist(x, x); });
  compare("rbf gram", reps, [&] { return k::rbf(x, x, 2.0); },
          [&] { return k::serial::rbf(x, x, 2.0); });
  return 0;
}
