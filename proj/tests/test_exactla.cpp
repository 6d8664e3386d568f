#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "torhom/exactla.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace torhom;

// ===========================================================================
// Independent oracles.  These deliberately use different strategies from the
// library (lexicographic pivots, dense arithmetic) so agreement means
// something.

namespace {

// Naive dense SNF: always pivot on the first nonzero entry in reading order,
// gcd-chase the pivot row/column, then fix divisibility by folding rows.
ZVec snf_oracle(ZMat a) {
  const int m = (int)a.size();
  const int n = m ? (int)a[0].size() : 0;
  ZVec out;
  for (int k = 0; k < std::min(m, n); ++k) {
    // locate first nonzero in reading order
    int pi = -1, pj = -1;
    for (int i = k; i < m && pi < 0; ++i)
      for (int j = k; j < n; ++j)
        if (a[i][j] != 0) { pi = i; pj = j; break; }
    if (pi < 0) break;
    std::swap(a[k], a[pi]);
    for (auto& row : a) std::swap(row[k], row[pj]);
    for (;;) {
      bool dirty = false;
      for (int i = k + 1; i < m; ++i)
        while (a[i][k] != 0) {
          mpz_class q = a[i][k] / a[k][k];
          for (int j = k; j < n; ++j) a[i][j] -= q * a[k][j];
          if (a[i][k] != 0) {              // remainder: swap and keep chasing
            std::swap(a[i], a[k]);
            dirty = true;
          }
        }
      for (int j = k + 1; j < n; ++j)
        while (a[k][j] != 0) {
          mpz_class q = a[k][j] / a[k][k];
          for (int i = k; i < m; ++i) a[i][j] -= q * a[i][k];
          if (a[k][j] != 0) {
            for (int i = k; i < m; ++i) std::swap(a[i][j], a[i][k]);
            dirty = true;
          }
        }
      if (dirty) continue;
      int bi = -1, bj = -1;
      for (int i = k + 1; i < m && bi < 0; ++i)
        for (int j = k + 1; j < n; ++j)
          if (a[i][j] % a[k][k] != 0) { bi = i; bj = j; break; }
      if (bi < 0) break;
      for (int j = k; j < n; ++j) a[k][j] += a[bi][j];
    }
    out.push_back(abs(a[k][k]));
  }
  return out;
}

// Dense Gaussian elimination over F_ell.
int rank_oracle(const ZMat& a, unsigned long ell) {
  const int m = (int)a.size();
  const int n = m ? (int)a[0].size() : 0;
  std::vector<std::vector<uint64_t>> w(m, std::vector<uint64_t>(n));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      mpz_class v = a[i][j] % (long)ell;
      if (v < 0) v += (long)ell;
      w[i][j] = v.get_ui();
    }
  int r = 0;
  for (int c = 0; c < n && r < m; ++c) {
    int p = -1;
    for (int i = r; i < m; ++i)
      if (w[i][c]) { p = i; break; }
    if (p < 0) continue;
    std::swap(w[p], w[r]);
    // pivot inverse by Fermat
    uint64_t inv = 1, base = w[r][c] % ell, e = ell - 2;
    while (e) {
      if (e & 1) inv = inv * base % ell;
      base = base * base % ell;
      e >>= 1;
    }
    for (int i = r + 1; i < m; ++i) {
      if (!w[i][c]) continue;
      uint64_t f = (ell - w[i][c]) * inv % ell;
      for (int j = c; j < n; ++j) w[i][j] = (w[i][j] + f * w[r][j]) % ell;
    }
    ++r;
  }
  return r;
}

// Kernel oracle: columns of V past the rank in U*A*V = D span the saturated
// kernel because V is unimodular.
std::vector<ZVec> kernel_oracle(const SparseZMatrix& A) {
  SnfTransforms t = snf_with_transforms(A);
  std::vector<ZVec> basis;
  for (int j = t.snf.rank; j < A.cols; ++j) {
    ZVec v(A.cols);
    for (int i = 0; i < A.cols; ++i) v[i] = t.V[i][j];
    basis.push_back(std::move(v));
  }
  return basis;
}

// Two integer row-spans are equal iff their Hermite forms agree.
ZMat lattice_normal_form(std::vector<ZVec> rows) {
  if (rows.empty()) return {};
  ZMat h = hnf_rows(rows);
  while (!h.empty()) {
    bool zero = true;
    for (const auto& x : h.back())
      if (x != 0) { zero = false; break; }
    if (!zero) break;
    h.pop_back();
  }
  return h;
}

ZMat rand_mat(std::mt19937& rng, int m, int n, int lo, int hi, double density = 1.0) {
  std::uniform_int_distribution<int> val(lo, hi);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  ZMat a(m, ZVec(n, 0));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      if (coin(rng) < density) a[i][j] = val(rng);
  return a;
}

ZVec to_divisors(const ZVec& raw) {
  ZVec d;
  for (const auto& x : raw)
    if (x != 0) d.push_back(x);
  return d;
}

mpq_class dot_g(const QVec& a, const QMat& G, const QVec& b) {
  mpq_class s = 0;
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) s += a[i] * G[i][j] * b[j];
  return s;
}

}  // namespace

// ===========================================================================

TEST_CASE("sparse matrix bookkeeping") {
  SparseZMatrix a(3, 4);
  a.add(0, 1, 5);
  a.add(0, 1, -5);            // cancels
  a.add(2, 3, 7);
  a.add(2, 3, 1);             // combines to 8
  a.add(1, 0, 3);
  a.finalize();
  CHECK(a.nnz() == 2);
  ZMat d = a.dense();
  CHECK(d[2][3] == 8);
  CHECK(d[0][1] == 0);
  CHECK(d[1][0] == 3);
  SparseZMatrix b = SparseZMatrix::from_dense(d);
  CHECK(b.nnz() == 2);
  CHECK_THROWS(a.add(3, 0, 1));
  CHECK_THROWS(a.add(0, 4, 1));
}

TEST_CASE("snf fixed examples") {
  {
    SparseZMatrix a = SparseZMatrix::from_dense({{2, 4}, {6, 8}});
    SnfResult r = snf(a);
    REQUIRE(r.rank == 2);
    CHECK(r.divisors[0] == 2);
    CHECK(r.divisors[1] == 4);
  }
  {
    SparseZMatrix a = SparseZMatrix::from_dense({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    SnfResult r = snf(a);
    REQUIRE(r.rank == 3);
    for (const auto& d : r.divisors) CHECK(d == 1);
  }
  {
    SparseZMatrix a(4, 5);                 // all-zero matrix
    SnfResult r = snf(a);
    CHECK(r.rank == 0);
    CHECK(r.divisors.empty());
  }
}

TEST_CASE("snf agrees with naive oracle on random matrices") {
  std::mt19937 rng(20260822);
  for (int trial = 0; trial < 60; ++trial) {
    int m = 1 + (int)(rng() % 6), n = 1 + (int)(rng() % 6);
    ZMat a = rand_mat(rng, m, n, -9, 9, trial % 3 ? 1.0 : 0.5);
    ZVec expect = snf_oracle(a);
    SnfResult got = snf(SparseZMatrix::from_dense(a));
    REQUIRE(got.divisors == expect);
    CHECK(got.rank == (int)expect.size());
  }
}

TEST_CASE("snf divisibility chain and unimodular invariance") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    int m = 2 + (int)(rng() % 4), n = 2 + (int)(rng() % 4);
    ZMat a = rand_mat(rng, m, n, -6, 6);
    SnfResult r = snf(SparseZMatrix::from_dense(a));
    for (int i = 0; i + 1 < r.rank; ++i) CHECK(r.divisors[i + 1] % r.divisors[i] == 0);

    // random elementary row/col ops preserve the invariants
    ZMat b = a;
    for (int k = 0; k < 6; ++k) {
      int i = (int)(rng() % m), j = (int)(rng() % m);
      if (i != j) {
        long q = (long)(rng() % 5) - 2;
        for (int c = 0; c < n; ++c) b[i][c] += q * b[j][c];
      }
      int ci = (int)(rng() % n), cj = (int)(rng() % n);
      if (ci != cj) {
        long q = (long)(rng() % 5) - 2;
        for (int rr = 0; rr < m; ++rr) b[rr][ci] += q * b[rr][cj];
      }
    }
    SnfResult r2 = snf(SparseZMatrix::from_dense(b));
    CHECK(r2.divisors == r.divisors);
  }
}

TEST_CASE("snf transforms satisfy U*A*V = diag with unimodular U, V") {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 15; ++trial) {
    int m = 1 + (int)(rng() % 5), n = 1 + (int)(rng() % 5);
    ZMat a = rand_mat(rng, m, n, -7, 7);
    SparseZMatrix A = SparseZMatrix::from_dense(a);
    SnfTransforms t = snf_with_transforms(A);
    CHECK(t.snf.divisors == snf(A).divisors);
    CHECK(abs(bareiss_det(t.U)) == 1);
    CHECK(abs(bareiss_det(t.V)) == 1);
    // compute U*A*V densely
    ZMat ua(m, ZVec(n, 0));
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < m; ++k)
        for (int j = 0; j < n; ++j) ua[i][j] += t.U[i][k] * a[k][j];
    ZMat uav(m, ZVec(n, 0));
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j) uav[i][j] += ua[i][k] * t.V[k][j];
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        mpz_class want = (i == j && i < t.snf.rank) ? t.snf.divisors[i] : mpz_class(0);
        CHECK(uav[i][j] == want);
      }
  }
}

TEST_CASE("snf sparse peeling path matches oracle on larger sparse input") {
  std::mt19937 rng(4242);
  for (int trial = 0; trial < 5; ++trial) {
    // mostly +-1 entries, the regime the peeling pass is built for
    int m = 25, n = 35;
    ZMat a(m, ZVec(n, 0));
    std::uniform_int_distribution<int> pm(0, 1);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        unsigned u = rng() % 100;
        if (u < 12) a[i][j] = pm(rng) ? 1 : -1;
        else if (u < 15) a[i][j] = (int)(rng() % 7) - 3;
      }
    CHECK(snf(SparseZMatrix::from_dense(a)).divisors == to_divisors(snf_oracle(a)));
  }
}

TEST_CASE("rank_mod_l fixed example and oracle agreement") {
  SparseZMatrix a = SparseZMatrix::from_dense({{1, 2}, {2, 4}});
  CHECK(rank_mod_l(a, 53) == 1);
  CHECK_THROWS(rank_mod_l(a, 6));          // composite modulus rejected
  CHECK_THROWS(rank_mod_l(a, 1));

  std::mt19937 rng(314159);
  const unsigned long primes[] = {2, 3, 53, 59, 61, 67, 71, 73};
  for (int trial = 0; trial < 40; ++trial) {
    int m = 1 + (int)(rng() % 8), n = 1 + (int)(rng() % 8);
    ZMat d = rand_mat(rng, m, n, -20, 20, 0.7);
    unsigned long ell = primes[rng() % 8];
    SparseZMatrix A = SparseZMatrix::from_dense(d);
    int r = rank_mod_l(A, ell);
    CHECK(r == rank_oracle(d, ell));
    CHECK(r == rank_mod_l_parallel(A, ell));

    // mod-l rank vs integral rank: equal unless ell divides some divisor
    SnfResult s = snf(A);
    CHECK(r <= s.rank);
    bool drops = false;
    for (const auto& dv : s.divisors)
      if (dv % (long)ell == 0) drops = true;
    CHECK((r == s.rank) == !drops);
  }
}

TEST_CASE("rank_mod_l parallel equals serial on a bigger sparse matrix") {
  std::mt19937 rng(777);
  SparseZMatrix a(300, 260);
  for (int k = 0; k < 2600; ++k)
    a.add((int)(rng() % 300), (int)(rng() % 260), (int)(rng() % 9) - 4);
  a.finalize();
  int s = rank_mod_l(a, 61);
  CHECK(s == rank_mod_l_parallel(a, 61));
  CHECK(s == rank_oracle(a.dense(), 61));
}

TEST_CASE("saturated_kernel fixed examples") {
  {
    SparseZMatrix a = SparseZMatrix::from_dense({{1, 1}});
    auto k = saturated_kernel(a);
    REQUIRE(k.size() == 1);
    CHECK(lattice_normal_form(k) == ZMat{{1, -1}});
  }
  {
    // non-primitive relation: kernel must still be the full saturated line
    SparseZMatrix a = SparseZMatrix::from_dense({{2, 2}});
    auto k = saturated_kernel(a);
    REQUIRE(k.size() == 1);
    CHECK(lattice_normal_form(k) == ZMat{{1, -1}});
  }
  {
    SparseZMatrix a(0, 3);                 // no constraints: whole space
    auto k = saturated_kernel(a);
    CHECK(k.size() == 3);
    CHECK(lattice_normal_form(k) == ZMat{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  }
}

TEST_CASE("saturated_kernel matches transform oracle and is saturated") {
  std::mt19937 rng(1618);
  for (int trial = 0; trial < 30; ++trial) {
    int m = 1 + (int)(rng() % 4), n = 2 + (int)(rng() % 5);
    ZMat d = rand_mat(rng, m, n, -5, 5, 0.8);
    SparseZMatrix A = SparseZMatrix::from_dense(d);
    auto k = saturated_kernel(A);
    auto ko = kernel_oracle(A);
    CHECK(k.size() == ko.size());
    CHECK(lattice_normal_form(k) == lattice_normal_form(ko));
    // every basis vector really lies in the kernel
    for (const auto& v : k)
      for (int i = 0; i < m; ++i) {
        mpz_class s = 0;
        for (int j = 0; j < n; ++j) s += d[i][j] * v[j];
        CHECK(s == 0);
      }
    // saturation: the basis matrix has all elementary divisors 1
    if (!k.empty()) {
      SnfResult s = snf(SparseZMatrix::from_dense(k));
      CHECK(s.rank == (int)k.size());
      for (const auto& dv : s.divisors) CHECK(dv == 1);
    }
  }
}

TEST_CASE("saturated_kernel_q clears denominators") {
  QMat a = {{mpq_class(1, 2), mpq_class(1, 2)}};
  auto k = saturated_kernel_q(a);
  REQUIRE(k.size() == 1);
  CHECK(lattice_normal_form(k) == ZMat{{1, -1}});
}

TEST_CASE("hnf_rows echelon shape and transform") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    int m = 1 + (int)(rng() % 5), n = 1 + (int)(rng() % 5);
    ZMat a = rand_mat(rng, m, n, -8, 8, 0.8);
    ZMat u;
    ZMat h = hnf_rows(a, &u);
    CHECK(abs(bareiss_det(u)) == 1);
    ZMat ua(m, ZVec(n, 0));
    for (int i = 0; i < m; ++i)
      for (int k2 = 0; k2 < m; ++k2)
        for (int j = 0; j < n; ++j) ua[i][j] += u[i][k2] * a[k2][j];
    CHECK(ua == h);
    // pivots strictly move right; entries above each pivot reduced into [0, p)
    int last = -1;
    for (int i = 0; i < m; ++i) {
      int p = -1;
      for (int j = 0; j < n; ++j)
        if (h[i][j] != 0) { p = j; break; }
      if (p < 0) {
        for (int i2 = i; i2 < m; ++i2)
          for (int j = 0; j < n; ++j) CHECK(h[i2][j] == 0);
        break;
      }
      CHECK(p > last);
      CHECK(h[i][p] > 0);
      for (int i2 = 0; i2 < i; ++i2) {
        CHECK(h[i2][p] >= 0);
        CHECK(h[i2][p] < h[i][p]);
      }
      last = p;
    }
  }
}

TEST_CASE("gram_log_volume fixed examples") {
  QMat I2 = {{1, 0}, {0, 1}};
  {
    LatticeVolume lv = gram_log_volume(I2, I2);
    CHECK(lv.rank == 2);
    CHECK(lv.gram_det == 1);
    CHECK(lv.log_volume == doctest::Approx(0.0).epsilon(1e-12));
  }
  {
    QMat b = {{1, 0}, {0, 2}};
    LatticeVolume lv = gram_log_volume(b, I2);
    CHECK(lv.gram_det == 4);
    CHECK(lv.log_volume == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  {
    QMat g = {{mpq_class(1, 2), 0}, {0, mpq_class(1, 3)}};
    LatticeVolume lv = gram_log_volume(I2, g);
    CHECK(lv.gram_det == mpq_class(1, 6));
    CHECK(lv.log_volume == doctest::Approx(0.5 * std::log(1.0 / 6.0)).epsilon(1e-12));
  }
  {
    LatticeVolume lv = gram_log_volume(QMat{}, I2);
    CHECK(lv.rank == 0);
    CHECK(lv.gram_det == 1);
    CHECK(lv.log_volume == 0.0);
  }
  CHECK_THROWS(gram_log_volume(QMat{{1, 0}, {2, 0}}, I2));        // dependent
  CHECK_THROWS(gram_log_volume(I2, QMat{{1, 0}, {0, -1}}));       // not PD
}

TEST_CASE("gram_log_volume equals half log det of rational Gram matrix") {
  std::mt19937 rng(271828);
  for (int trial = 0; trial < 15; ++trial) {
    int n = 2 + (int)(rng() % 3);
    int k = 1 + (int)(rng() % n);
    // random full-rank basis; retry degenerate draws
    QMat b;
    for (int i = 0; i < k; ++i) {
      QVec row(n);
      for (int j = 0; j < n; ++j)
        row[j] = mpq_class((long)(rng() % 11) - 5) / (long)(1 + rng() % 3);
      b.push_back(row);
    }
    if (rank_q(b) < k) continue;
    // metric: A^T A + I for a random integer A, guaranteed PD
    ZMat a = rand_mat(rng, n, n, -3, 3);
    QMat g(n, QVec(n, 0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        for (int l = 0; l < n; ++l) g[i][j] += mpq_class(a[l][i] * a[l][j]);
        if (i == j) g[i][j] += 1;
      }
    LatticeVolume lv = gram_log_volume(b, g);
    mpq_class det = det_q(mat_mul(mat_mul(b, g), mat_transpose(b)));
    CHECK(lv.gram_det == det);
    double expect = 0.5 * log_of_mpq(det);
    CHECK(lv.log_volume == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("project_orthogonal fixed example and properties") {
  QMat I2 = {{1, 0}, {0, 1}};
  QVec v = {1, 0};
  QMat S = {{1, 1}};
  QVec p = project_orthogonal(v, S, I2);
  CHECK(p[0] == mpq_class(1, 2));
  CHECK(p[1] == mpq_class(1, 2));

  std::mt19937 rng(161803);
  for (int trial = 0; trial < 15; ++trial) {
    int n = 3 + (int)(rng() % 3);
    int k = 1 + (int)(rng() % (n - 1));
    QMat s;
    for (int i = 0; i < k; ++i) {
      QVec row(n);
      for (int j = 0; j < n; ++j) row[j] = (long)(rng() % 9) - 4;
      s.push_back(row);
    }
    if (rank_q(s) < k) continue;
    ZMat a = rand_mat(rng, n, n, -2, 2);
    QMat g(n, QVec(n, 0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        for (int l = 0; l < n; ++l) g[i][j] += mpq_class(a[l][i] * a[l][j]);
        if (i == j) g[i][j] += 1;
      }
    QVec x(n), y(n);
    for (int j = 0; j < n; ++j) {
      x[j] = (long)(rng() % 7) - 3;
      y[j] = (long)(rng() % 7) - 3;
    }
    QVec px = project_orthogonal(x, s, g);
    // idempotent
    CHECK(project_orthogonal(px, s, g) == px);
    // members of the span are fixed
    CHECK(project_orthogonal(s[0], s, g) == s[0]);
    // G-self-adjoint
    QVec py = project_orthogonal(y, s, g);
    CHECK(dot_g(px, g, y) == dot_g(x, g, py));
    // residual is G-orthogonal to the span
    QVec res(n);
    for (int j = 0; j < n; ++j) res[j] = x[j] - px[j];
    for (int i = 0; i < k; ++i) CHECK(dot_g(res, g, s[i]) == 0);
  }
  CHECK_THROWS(project_orthogonal(v, QMat{{1, 1}, {2, 2}}, I2));  // dependent basis
}

TEST_CASE("dense exact helpers") {
  CHECK(bareiss_det({{2, 0}, {0, 3}}) == 6);
  CHECK(bareiss_det({{0, 1}, {1, 0}}) == -1);
  CHECK(bareiss_det({{1, 2}, {2, 4}}) == 0);
  CHECK(det_q({{mpq_class(1, 2), 0}, {0, mpq_class(1, 3)}}) == mpq_class(1, 6));
  CHECK(rank_q({{1, 2}, {2, 4}}) == 1);
  QVec x = solve_q({{2, 0}, {0, 4}}, {1, 1});
  CHECK(x[0] == mpq_class(1, 2));
  CHECK(x[1] == mpq_class(1, 4));
  CHECK_THROWS(solve_q({{1, 1}, {1, 1}}, {1, 0}));

  std::mt19937 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    int n = 1 + (int)(rng() % 5);
    ZMat a = rand_mat(rng, n, n, -6, 6);
    QMat qa(n, QVec(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) qa[i][j] = mpq_class(a[i][j]);
    CHECK(det_q(qa) == mpq_class(bareiss_det(a)));
  }
}

TEST_CASE("overflow-safe logs") {
  mpz_class big;
  mpz_ui_pow_ui(big.get_mpz_t(), 2, 300);
  CHECK(log_of_mpz(big) == doctest::Approx(300.0 * M_LN2).epsilon(1e-12));
  CHECK(log_of_mpq(mpq_class(1, 3)) == doctest::Approx(-std::log(3.0)).epsilon(1e-12));
  mpz_class huge;
  mpz_ui_pow_ui(huge.get_mpz_t(), 10, 5000);   // way past double range
  CHECK(log_of_mpz(huge) == doctest::Approx(5000.0 * std::log(10.0)).epsilon(1e-12));
  CHECK_THROWS(log_of_mpz(mpz_class(0)));
  CHECK_THROWS(log_of_mpq(mpq_class(-1)));
}

TEST_CASE("coo round trip and validation") {
  std::mt19937 rng(55);
  SparseZMatrix a(7, 9);
  for (int k = 0; k < 20; ++k)
    a.add((int)(rng() % 7), (int)(rng() % 9), (int)(rng() % 21) - 10);
  a.finalize();
  std::stringstream ss;
  write_coo(ss, a);
  SparseZMatrix b = read_coo(ss);
  CHECK(b.rows == a.rows);
  CHECK(b.cols == a.cols);
  CHECK(b.entries == a.entries);

  auto rejects = [](const std::string& text) {
    std::stringstream in(text);
    CHECK_THROWS(read_coo(in));
  };
  rejects("2 2 2\n0 0 1\n0 0 2\n");           // duplicate key
  rejects("2 2 1\n0 0 0\n");                  // explicit zero
  rejects("2 2 3\n0 0 1\n");                  // truncated
  rejects("2 2\n");                           // bad header
  rejects("2 2 1\n5 0 1\n");                  // out of bounds
}

TEST_CASE("snf handles a mid-size sparse relation matrix quickly") {
  // Shape rehearsal for abelianized presentation matrices: lots of +-1s.
  std::mt19937 rng(8080);
  SparseZMatrix a(400, 150);
  for (int i = 0; i < 400; ++i) {
    int len = 2 + (int)(rng() % 4);
    for (int k = 0; k < len; ++k)
      a.add(i, (int)(rng() % 150), (rng() % 2) ? 1 : -1);
  }
  a.finalize();
  SnfResult r = snf(a);
  CHECK(r.rank <= 150);
  CHECK(r.rank == rank_mod_l(a, 1000003));   // big prime sees the true rank
  for (int i = 0; i + 1 < r.rank; ++i) CHECK(r.divisors[i + 1] % r.divisors[i] == 0);
}
