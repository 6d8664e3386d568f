// Compares the serial and OpenMP mod-l rank kernels on reproducible random
// sparse matrices.  Both variants pick identical pivots, so agreement of the
// computed ranks is asserted alongside the timings; a mismatch is a bug, not
// a benchmark artifact.
//
//   torhom-bench [n] [fill_per_row] [seed]
//
// defaults: n = 600 square, 8 entries per row, seed 42.  Run with
// OMP_NUM_THREADS to size the parallel side.

#include "torhom/exactla.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace torhom;

namespace {

SparseZMatrix random_matrix(int n, int fill, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> col(0, n - 1);
  std::uniform_int_distribution<int> val(-9, 9);
  SparseZMatrix A(n, n);
  for (int i = 0; i < n; ++i) {
    A.add(i, i, val(rng) * 2 + 1);       // odd diagonal keeps most rows alive
    for (int k = 0; k < fill - 1; ++k) A.add(i, col(rng), val(rng));
  }
  A.finalize();
  return A;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

int main(int argc, char** argv) {
  int n = argc > 1 ? std::atoi(argv[1]) : 600;
  int fill = argc > 2 ? std::atoi(argv[2]) : 8;
  std::uint64_t seed = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 42;
  if (n < 1 || fill < 1) {
    std::fprintf(stderr, "usage: torhom-bench [n] [fill_per_row] [seed]\n");
    return 2;
  }

  SparseZMatrix A = random_matrix(n, fill, seed);
  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("matrix %dx%d, %zu nonzeros, seed %llu, %d thread(s)\n", n, n,
              A.nnz(), (unsigned long long)seed, threads);
  std::printf("%8s %12s %12s %10s %s\n", "ell", "serial_s", "parallel_s",
              "speedup", "rank");

  for (unsigned long ell : {2ul, 3ul, 53ul, 9973ul}) {
    auto t0 = std::chrono::steady_clock::now();
    int rs = rank_mod_l(A, ell);
    double serial = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    int rp = rank_mod_l_parallel(A, ell);
    double parallel = seconds_since(t0);

    if (rs != rp) {
      std::fprintf(stderr, "rank mismatch at ell=%lu: serial %d, parallel %d\n",
                   ell, rs, rp);
      return 1;
    }
    std::printf("%8lu %12.4f %12.4f %9.2fx %d\n", ell, serial, parallel,
                parallel > 0 ? serial / parallel : 0.0, rs);
  }
  return 0;
}
