#include <doctest.h>

#include <omp.h>

#include "mired/kernels.hpp"
#include "support.hpp"

namespace k = mired::kernels;

TEST_SUITE("kernels") {
  TEST_CASE("parallel kernels are bit-identical to the serial reference") {
    const auto a = testing::random_matrix(37, 11, 1);
    const auto b = testing::random_matrix(11, 23, 2);
    const auto c = testing::random_matrix(29, 11, 3);
    for (int threads : {1, 2, 4}) {
      omp_set_num_threads(threads);
      CHECK(k::matmul(a, b) == k::serial::matmul(a, b));
      CHECK(k::matmul_tn(a, a) == k::serial::matmul_tn(a, a));
      CHECK(k::matmul_nt(a, c) == k::serial::matmul_nt(a, c));
      CHECK(k::pairwise_sq_dist(a, c) == k::serial::pairwise_sq_dist(a, c));
      CHECK(k::rbf(a, c, 1.7) == k::serial::rbf(a, c, 1.7));
    }
  }

  TEST_CASE("serial kernels match naive definitions") {
    const auto a = testing::random_matrix(9, 4, 4);
    const auto b = testing::random_matrix(4, 6, 5);
    CHECK(testing::max_abs_diff(k::serial::matmul(a, b), testing::naive_matmul(a, b)) <= 1e-12);
    CHECK(testing::max_abs_diff(k::serial::rbf(a, a, 0.8), testing::naive_rbf(a, 0.8)) <= 1e-12);
    const auto d = k::serial::pairwise_sq_dist(a, a);
    for (std::size_t i = 0; i < 9; ++i) CHECK(d(i, i) == 0.0);
  }
}
