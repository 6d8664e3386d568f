#include "torhom/exactla.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace torhom {

// ---------------------------------------------------------------------------
// SparseZMatrix

void SparseZMatrix::add(int r, int c, const mpz_class& v) {
  if (r < 0 || r >= rows || c < 0 || c >= cols)
    throw std::invalid_argument("SparseZMatrix::add: index out of bounds");
  if (v == 0) return;
  entries.emplace_back(r, c, v);
  finalized = false;
}

void SparseZMatrix::finalize() {
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) {
              if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
              return std::get<1>(a) < std::get<1>(b);
            });
  std::vector<std::tuple<int, int, mpz_class>> out;
  out.reserve(entries.size());
  for (auto& e : entries) {
    if (!out.empty() && std::get<0>(out.back()) == std::get<0>(e) &&
        std::get<1>(out.back()) == std::get<1>(e)) {
      std::get<2>(out.back()) += std::get<2>(e);
      if (std::get<2>(out.back()) == 0) out.pop_back();
    } else {
      out.push_back(e);
    }
  }
  entries.swap(out);
  finalized = true;
}

ZMat SparseZMatrix::dense() const {
  ZMat m(rows, ZVec(cols, 0));
  for (const auto& [r, c, v] : entries) m[r][c] += v;
  return m;
}

SparseZMatrix SparseZMatrix::from_dense(const ZMat& m) {
  SparseZMatrix a((int)m.size(), m.empty() ? 0 : (int)m[0].size());
  for (int i = 0; i < a.rows; ++i) {
    if ((int)m[i].size() != a.cols)
      throw std::invalid_argument("from_dense: ragged matrix");
    for (int j = 0; j < a.cols; ++j)
      if (m[i][j] != 0) a.entries.emplace_back(i, j, m[i][j]);
  }
  a.finalized = true;
  return a;
}

static SparseZMatrix finalized(const SparseZMatrix& A) {
  if (A.finalized) return A;
  SparseZMatrix b = A;
  b.finalize();
  return b;
}

// ---------------------------------------------------------------------------
// Dense Smith normal form (textbook, smallest-magnitude pivot first).
// Used directly for transform tracking and as the core step of the sparse snf.

namespace {

struct PivotPos { int i = -1, j = -1; };

PivotPos find_min_pivot(const ZMat& a, int k, int m, int n) {
  PivotPos best;
  mpz_class bestabs = 0;
  for (int i = k; i < m; ++i)
    for (int j = k; j < n; ++j) {
      if (a[i][j] == 0) continue;
      mpz_class ab = abs(a[i][j]);
      if (best.i < 0 || ab < bestabs) { best = {i, j}; bestabs = ab; }
    }
  return best;
}

void row_axpy(ZMat& a, int dst, int src, const mpz_class& q) {
  if (q == 0) return;
  const int n = (int)a[dst].size();
  for (int j = 0; j < n; ++j) a[dst][j] -= q * a[src][j];
}

void col_axpy(ZMat& a, int dst, int src, const mpz_class& q) {
  if (q == 0) return;
  for (auto& row : a) row[dst] -= q * row[src];
}

// In-place SNF on a dense matrix; optionally tracks U (row ops) and V (col
// ops) so that U * A_in * V = diag.  Returns the diagonal (nonzero divisors).
ZVec dense_snf(ZMat& a, ZMat* U, ZMat* V) {
  const int m = (int)a.size();
  const int n = m ? (int)a[0].size() : 0;
  if (U) {
    U->assign(m, ZVec(m, 0));
    for (int i = 0; i < m; ++i) (*U)[i][i] = 1;
  }
  if (V) {
    V->assign(n, ZVec(n, 0));
    for (int j = 0; j < n; ++j) (*V)[j][j] = 1;
  }
  auto swap_rows = [&](int i1, int i2) {
    if (i1 == i2) return;
    std::swap(a[i1], a[i2]);
    if (U) std::swap((*U)[i1], (*U)[i2]);
  };
  auto swap_cols = [&](int j1, int j2) {
    if (j1 == j2) return;
    for (auto& row : a) std::swap(row[j1], row[j2]);
    if (V)
      for (auto& row : *V) std::swap(row[j1], row[j2]);
  };

  ZVec divisors;
  int k = 0;
  while (k < std::min(m, n)) {
    PivotPos p = find_min_pivot(a, k, m, n);
    if (p.i < 0) break;                    // submatrix is zero
    swap_rows(k, p.i);
    swap_cols(k, p.j);
    for (;;) {
      // Reduce column k, then row k, against the pivot.  Remainders shrink
      // below |pivot| so re-picking the minimum terminates.
      bool dirty = false;
      for (int i = k + 1; i < m; ++i) {
        if (a[i][k] == 0) continue;
        mpz_class q = a[i][k] / a[k][k];   // truncated division
        row_axpy(a, i, k, q);
        if (U) row_axpy(*U, i, k, q);
        if (a[i][k] != 0) dirty = true;
      }
      for (int j = k + 1; j < n; ++j) {
        if (a[k][j] == 0) continue;
        mpz_class q = a[k][j] / a[k][k];
        col_axpy(a, j, k, q);
        if (V) col_axpy(*V, j, k, q);
        if (a[k][j] != 0) dirty = true;
      }
      if (dirty) {
        PivotPos np = find_min_pivot(a, k, m, n);
        swap_rows(k, np.i);
        swap_cols(k, np.j);
        continue;
      }
      // Row and column k are clean.  Enforce the divisibility chain: the
      // pivot must divide every remaining entry.
      int bi = -1, bj = -1;
      for (int i = k + 1; i < m && bi < 0; ++i)
        for (int j = k + 1; j < n; ++j)
          if (a[i][j] % a[k][k] != 0) { bi = i; bj = j; break; }
      if (bi < 0) break;
      // Fold the offending row into the pivot row; gcd strictly drops.
      row_axpy(a, k, bi, mpz_class(-1));
      if (U) row_axpy(*U, k, bi, mpz_class(-1));
    }
    if (a[k][k] < 0) {
      for (int j = 0; j < n; ++j) a[k][j] = -a[k][j];
      if (U)
        for (int j = 0; j < m; ++j) (*U)[k][j] = -(*U)[k][j];
    }
    divisors.push_back(a[k][k]);
    ++k;
  }
  return divisors;
}

}  // namespace

SnfTransforms snf_with_transforms(const SparseZMatrix& A) {
  SparseZMatrix a = finalized(A);
  ZMat d = a.dense();
  SnfTransforms t;
  t.snf.divisors = dense_snf(d, &t.U, &t.V);
  t.snf.rank = (int)t.snf.divisors.size();
  return t;
}

// ---------------------------------------------------------------------------
// Sparse SNF: peel unit pivots with row operations only (a +-1 pivot whose
// column has been cleared contributes divisor 1 and detaches its row and
// column), then hand the small remaining core to the dense routine.  This is
// the path that keeps index-500 Reidemeister-Schreier matrices tractable.

namespace {

using SRow = std::vector<std::pair<int, mpz_class>>;   // sorted by column

// dst += q * src, merging sorted rows; records column-count deltas.
void srow_axpy(SRow& dst, const SRow& src, const mpz_class& q,
               std::vector<int>& col_count) {
  SRow out;
  out.reserve(dst.size() + src.size());
  size_t i = 0, j = 0;
  while (i < dst.size() || j < src.size()) {
    if (j == src.size() || (i < dst.size() && dst[i].first < src[j].first)) {
      out.push_back(dst[i++]);
    } else if (i == dst.size() || src[j].first < dst[i].first) {
      mpz_class v = q * src[j].second;
      if (v != 0) {
        ++col_count[src[j].first];
        out.emplace_back(src[j].first, v);
      }
      ++j;
    } else {
      mpz_class v = dst[i].second + q * src[j].second;
      if (v == 0)
        --col_count[dst[i].first];
      else
        out.emplace_back(dst[i].first, v);
      ++i;
      ++j;
    }
  }
  dst.swap(out);
}

}  // namespace

SnfResult snf(const SparseZMatrix& A) {
  SparseZMatrix a = finalized(A);
  std::vector<SRow> rowv(a.rows);
  std::vector<int> col_count(a.cols, 0);
  for (const auto& [r, c, v] : a.entries) {
    rowv[r].emplace_back(c, v);
    ++col_count[c];
  }
  std::vector<char> active(a.rows, 1);
  int ones = 0;

  for (;;) {
    // Best unit pivot by Markowitz fill score, ties by (row, col).
    int pr = -1, pc = -1;
    long best = -1;
    for (int r = 0; r < a.rows; ++r) {
      if (!active[r] || rowv[r].empty()) continue;
      for (const auto& [c, v] : rowv[r]) {
        if (v != 1 && v != -1) continue;
        long score = (long)(rowv[r].size() - 1) * (long)(col_count[c] - 1);
        if (pr < 0 || score < best) { best = score; pr = r; pc = c; }
        if (best == 0) break;
      }
      if (best == 0) break;
    }
    if (pr < 0) break;

    auto pit = std::lower_bound(rowv[pr].begin(), rowv[pr].end(),
                                std::make_pair(pc, mpz_class(0)),
                                [](const auto& x, const auto& y) { return x.first < y.first; });
    const int psign = sgn(pit->second);
    for (int r = 0; r < a.rows; ++r) {
      if (!active[r] || r == pr) continue;
      auto it = std::lower_bound(rowv[r].begin(), rowv[r].end(),
                                 std::make_pair(pc, mpz_class(0)),
                                 [](const auto& x, const auto& y) { return x.first < y.first; });
      if (it == rowv[r].end() || it->first != pc) continue;
      mpz_class q = -it->second * psign;   // cancels the pivot column entry
      srow_axpy(rowv[r], rowv[pr], q, col_count);
    }
    // Column pc is now zero off the pivot row; clearing the pivot row with
    // column operations would not touch any other row, so the row and column
    // simply detach with divisor 1.
    for (const auto& [c, v] : rowv[pr]) --col_count[c];
    active[pr] = 0;
    rowv[pr].clear();
    ++ones;
  }

  // Dense core on whatever survives.
  std::vector<int> live_cols;
  for (int c = 0; c < a.cols; ++c)
    if (col_count[c] > 0) live_cols.push_back(c);
  std::vector<int> colmap(a.cols, -1);
  for (size_t i = 0; i < live_cols.size(); ++i) colmap[live_cols[i]] = (int)i;
  ZMat core;
  for (int r = 0; r < a.rows; ++r) {
    if (!active[r] || rowv[r].empty()) continue;
    ZVec row(live_cols.size(), 0);
    for (const auto& [c, v] : rowv[r]) row[colmap[c]] = v;
    core.push_back(std::move(row));
  }

  SnfResult res;
  res.divisors.assign(ones, 1);
  ZVec cd = dense_snf(core, nullptr, nullptr);
  res.divisors.insert(res.divisors.end(), cd.begin(), cd.end());
  res.rank = (int)res.divisors.size();
  return res;
}

// ---------------------------------------------------------------------------
// Rank over F_ell

namespace {

uint64_t inv_mod(uint64_t a, uint64_t m) {
  int64_t t = 0, nt = 1, r = (int64_t)m, nr = (int64_t)(a % m);
  while (nr != 0) {
    int64_t q = r / nr;
    t -= q * nt; std::swap(t, nt);
    r -= q * nr; std::swap(r, nr);
  }
  if (r != 1) throw std::invalid_argument("inv_mod: not invertible");
  return (uint64_t)(t < 0 ? t + (int64_t)m : t);
}

using FRow = std::vector<std::pair<int, uint32_t>>;

// dst += f * src over F_ell (merge of sorted rows); returns column deltas:
// +c for a column gained, -(c+1) for a column lost (encoded).
void frow_axpy(FRow& dst, const FRow& src, uint64_t f, uint64_t ell,
               std::vector<int>* gained, std::vector<int>* lost) {
  FRow out;
  out.reserve(dst.size() + src.size());
  size_t i = 0, j = 0;
  while (i < dst.size() || j < src.size()) {
    if (j == src.size() || (i < dst.size() && dst[i].first < src[j].first)) {
      out.push_back(dst[i++]);
    } else if (i == dst.size() || src[j].first < dst[i].first) {
      uint64_t v = (f * src[j].second) % ell;
      if (v) {
        if (gained) gained->push_back(src[j].first);
        out.emplace_back(src[j].first, (uint32_t)v);
      }
      ++j;
    } else {
      uint64_t v = (dst[i].second + f * src[j].second) % ell;
      if (v)
        out.emplace_back(dst[i].first, (uint32_t)v);
      else if (lost)
        lost->push_back(dst[i].first);
      ++i;
      ++j;
    }
  }
  dst.swap(out);
}

int rank_mod_l_impl(const SparseZMatrix& A0, unsigned long ell, bool parallel) {
  if (ell < 2 || mpz_probab_prime_p(mpz_class(ell).get_mpz_t(), 30) == 0)
    throw std::invalid_argument("rank_mod_l: modulus must be prime");
  SparseZMatrix a = finalized(A0);

  std::vector<FRow> rowv(a.rows);
  std::vector<int> col_count(a.cols, 0);
  std::vector<std::vector<int>> col_rows(a.cols);   // may hold stale row ids
  for (const auto& [r, c, v] : a.entries) {
    uint32_t m = (uint32_t)mpz_fdiv_ui(v.get_mpz_t(), ell);
    if (!m) continue;
    rowv[r].emplace_back(c, m);
    ++col_count[c];
    col_rows[c].push_back(r);
  }
  std::vector<char> active(a.rows, 1);
  int rank = 0;

  auto row_has = [&](int r, int c) -> uint32_t {
    auto it = std::lower_bound(rowv[r].begin(), rowv[r].end(),
                               std::make_pair(c, (uint32_t)0),
                               [](const auto& x, const auto& y) { return x.first < y.first; });
    return (it != rowv[r].end() && it->first == c) ? it->second : 0;
  };

  for (;;) {
    // Deterministic pivot: sparsest active row (tie: lowest index), then its
    // column with fewest active entries (tie: lowest column).
    int pr = -1;
    size_t prn = 0;
    for (int r = 0; r < a.rows; ++r) {
      if (!active[r] || rowv[r].empty()) continue;
      if (pr < 0 || rowv[r].size() < prn) { pr = r; prn = rowv[r].size(); }
    }
    if (pr < 0) break;
    int pc = -1, pcn = 0;
    for (const auto& [c, v] : rowv[pr])
      if (pc < 0 || col_count[c] < pcn) { pc = c; pcn = col_count[c]; }

    uint64_t pinv = inv_mod(row_has(pr, pc), ell);
    std::vector<int> targets;
    for (int r : col_rows[pc])
      if (active[r] && r != pr && row_has(r, pc)) targets.push_back(r);
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

    std::vector<std::vector<int>> gained(targets.size());
    std::vector<std::vector<int>> lost(targets.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel && targets.size() > 16)
#endif
    for (long ti = 0; ti < (long)targets.size(); ++ti) {
      int r = targets[ti];
      uint64_t f = (ell - row_has(r, pc)) * pinv % ell;
      frow_axpy(rowv[r], rowv[pr], f, ell, &gained[ti], &lost[ti]);
    }
    // Index/count maintenance outside the parallel region, in target order,
    // so serial and parallel runs stay byte-identical.
    for (size_t ti = 0; ti < targets.size(); ++ti) {
      for (int c : gained[ti]) { ++col_count[c]; col_rows[c].push_back(targets[ti]); }
      for (int c : lost[ti]) --col_count[c];
    }
    for (const auto& [c, v] : rowv[pr]) --col_count[c];
    active[pr] = 0;
    rowv[pr].clear();
    ++rank;
  }
  return rank;
}

}  // namespace

int rank_mod_l(const SparseZMatrix& A, unsigned long ell) {
  return rank_mod_l_impl(A, ell, false);
}

int rank_mod_l_parallel(const SparseZMatrix& A, unsigned long ell) {
  return rank_mod_l_impl(A, ell, true);
}

// ---------------------------------------------------------------------------
// Hermite form and saturated kernels

ZMat hnf_rows(const ZMat& A, ZMat* U) {
  ZMat h = A;
  const int m = (int)h.size();
  const int n = m ? (int)h[0].size() : 0;
  if (U) {
    U->assign(m, ZVec(m, 0));
    for (int i = 0; i < m; ++i) (*U)[i][i] = 1;
  }
  int r = 0;
  for (int c = 0; c < n && r < m; ++c) {
    for (;;) {
      int piv = -1;
      mpz_class pabs = 0;
      int nnzc = 0;
      for (int i = r; i < m; ++i) {
        if (h[i][c] == 0) continue;
        ++nnzc;
        mpz_class ab = abs(h[i][c]);
        if (piv < 0 || ab < pabs) { piv = i; pabs = ab; }
      }
      if (piv < 0) break;                  // column clear below r
      if (piv != r) {
        std::swap(h[piv], h[r]);
        if (U) std::swap((*U)[piv], (*U)[r]);
      }
      if (nnzc == 1) break;                // unique entry; done with column
      for (int i = r + 1; i < m; ++i) {
        if (h[i][c] == 0) continue;
        mpz_class q;
        mpz_fdiv_q(q.get_mpz_t(), h[i][c].get_mpz_t(), h[r][c].get_mpz_t());
        row_axpy(h, i, r, q);
        if (U) row_axpy(*U, i, r, q);
      }
    }
    if (h[r][c] == 0) continue;
    if (h[r][c] < 0) {
      for (auto& x : h[r]) x = -x;
      if (U)
        for (auto& x : (*U)[r]) x = -x;
    }
    for (int i = 0; i < r; ++i) {          // reduce entries above the pivot
      if (h[i][c] == 0) continue;
      mpz_class q;
      mpz_fdiv_q(q.get_mpz_t(), h[i][c].get_mpz_t(), h[r][c].get_mpz_t());
      row_axpy(h, i, r, q);
      if (U) row_axpy(*U, i, r, q);
    }
    ++r;
  }
  return h;
}

std::vector<ZVec> saturated_kernel(const SparseZMatrix& A) {
  SparseZMatrix a = finalized(A);
  ZMat at(a.cols, ZVec(a.rows, 0));
  for (const auto& [r, c, v] : a.entries) at[c][r] = v;
  ZMat u;
  ZMat h = hnf_rows(at, &u);
  // Zero rows of H correspond to unimodular-transform rows spanning the
  // saturated kernel of A (U * A^T = H).
  std::vector<ZVec> basis;
  for (int i = 0; i < (int)h.size(); ++i) {
    bool zero = true;
    for (const auto& x : h[i])
      if (x != 0) { zero = false; break; }
    if (zero) basis.push_back(u[i]);
  }
  return basis;
}

std::vector<ZVec> saturated_kernel_q(const QMat& A) {
  SparseZMatrix z((int)A.size(), A.empty() ? 0 : (int)A[0].size());
  for (int i = 0; i < z.rows; ++i) {
    mpz_class den = 1;
    for (const auto& q : A[i]) den = lcm(den, q.get_den());
    for (int j = 0; j < z.cols; ++j) {
      mpz_class v = A[i][j].get_num() * (den / A[i][j].get_den());
      if (v != 0) z.add(i, j, v);
    }
  }
  return saturated_kernel(z);
}

// ---------------------------------------------------------------------------
// Dense rational helpers

QMat mat_mul(const QMat& a, const QMat& b) {
  const int m = (int)a.size();
  const int k = m ? (int)a[0].size() : 0;
  const int n = b.empty() ? 0 : (int)b[0].size();
  if ((int)b.size() != k) throw std::invalid_argument("mat_mul: shape mismatch");
  QMat c(m, QVec(n, 0));
  for (int i = 0; i < m; ++i)
    for (int l = 0; l < k; ++l) {
      if (a[i][l] == 0) continue;
      for (int j = 0; j < n; ++j)
        if (b[l][j] != 0) c[i][j] += a[i][l] * b[l][j];
    }
  return c;
}

QVec mat_apply(const QMat& a, const QVec& v) {
  QVec out(a.size(), 0);
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != v.size()) throw std::invalid_argument("mat_apply: shape mismatch");
    for (size_t j = 0; j < v.size(); ++j)
      if (a[i][j] != 0 && v[j] != 0) out[i] += a[i][j] * v[j];
  }
  return out;
}

QMat mat_transpose(const QMat& a) {
  const int m = (int)a.size();
  const int n = m ? (int)a[0].size() : 0;
  QMat t(n, QVec(m, 0));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) t[j][i] = a[i][j];
  return t;
}

mpz_class bareiss_det(ZMat m) {
  const int n = (int)m.size();
  if (n == 0) return 1;
  mpz_class prev = 1;
  int sign = 1;
  for (int k = 0; k < n - 1; ++k) {
    if (m[k][k] == 0) {
      int p = -1;
      for (int i = k + 1; i < n; ++i)
        if (m[i][k] != 0) { p = i; break; }
      if (p < 0) return 0;
      std::swap(m[k], m[p]);
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i)
      for (int j = k + 1; j < n; ++j) {
        mpz_class t = m[i][j] * m[k][k] - m[i][k] * m[k][j];
        mpz_divexact(m[i][j].get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
      }
    prev = m[k][k];
  }
  return sign > 0 ? m[n - 1][n - 1] : mpz_class(-m[n - 1][n - 1]);
}

mpq_class det_q(const QMat& m) {
  const int n = (int)m.size();
  if (n == 0) return 1;
  mpz_class den = 1;
  for (const auto& row : m)
    for (const auto& x : row) den = lcm(den, x.get_den());
  ZMat z(n, ZVec(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      z[i][j] = m[i][j].get_num() * (den / m[i][j].get_den());
  mpq_class d(bareiss_det(std::move(z)));
  mpz_class dn;
  mpz_pow_ui(dn.get_mpz_t(), den.get_mpz_t(), n);
  d /= mpq_class(dn);
  d.canonicalize();
  return d;
}

int rank_q(QMat m) {
  const int rows = (int)m.size();
  const int cols = rows ? (int)m[0].size() : 0;
  int r = 0;
  for (int c = 0; c < cols && r < rows; ++c) {
    int p = -1;
    for (int i = r; i < rows; ++i)
      if (m[i][c] != 0) { p = i; break; }
    if (p < 0) continue;
    std::swap(m[p], m[r]);
    for (int i = r + 1; i < rows; ++i) {
      if (m[i][c] == 0) continue;
      mpq_class f = m[i][c] / m[r][c];
      for (int j = c; j < cols; ++j) m[i][j] -= f * m[r][j];
    }
    ++r;
  }
  return r;
}

QVec solve_q(QMat M, QVec b) {
  const int n = (int)M.size();
  if (n == 0) return {};
  if ((int)b.size() != n || (int)M[0].size() != n)
    throw std::invalid_argument("solve_q: shape mismatch");
  for (int c = 0; c < n; ++c) {
    int p = -1;
    for (int i = c; i < n; ++i)
      if (M[i][c] != 0) { p = i; break; }
    if (p < 0) throw std::runtime_error("solve_q: singular system");
    std::swap(M[p], M[c]);
    std::swap(b[p], b[c]);
    for (int i = 0; i < n; ++i) {
      if (i == c || M[i][c] == 0) continue;
      mpq_class f = M[i][c] / M[c][c];
      for (int j = c; j < n; ++j) M[i][j] -= f * M[c][j];
      b[i] -= f * b[c];
    }
  }
  QVec x(n);
  for (int i = 0; i < n; ++i) x[i] = b[i] / M[i][i];
  return x;
}

double log_of_mpz(const mpz_class& z) {
  if (z <= 0) throw std::domain_error("log_of_mpz: nonpositive argument");
  signed long exp2;
  double d = mpz_get_d_2exp(&exp2, z.get_mpz_t());
  return std::log(d) + (double)exp2 * M_LN2;
}

double log_of_mpq(const mpq_class& q) {
  if (q <= 0) throw std::domain_error("log_of_mpq: nonpositive argument");
  return log_of_mpz(q.get_num()) - log_of_mpz(q.get_den());
}

// ---------------------------------------------------------------------------
// Gram volumes and projection

LatticeVolume gram_log_volume(const QMat& B, const QMat& G) {
  LatticeVolume lv;
  lv.rank = (int)B.size();
  if (lv.rank == 0) return lv;             // empty basis: unit volume
  const int n = (int)B[0].size();
  if ((int)G.size() != n || (n && (int)G[0].size() != n))
    throw std::invalid_argument("gram_log_volume: metric shape mismatch");
  QMat M = mat_mul(mat_mul(B, G), mat_transpose(B));
  // Fraction-free elimination, checking every leading principal minor: a
  // positive-definite Gram matrix has all of them positive, so a zero pivot
  // flags dependence and a negative one flags a bad metric.
  const int k = lv.rank;
  mpz_class den = 1;
  for (const auto& row : M)
    for (const auto& x : row) den = lcm(den, x.get_den());
  ZMat z(k, ZVec(k));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      z[i][j] = M[i][j].get_num() * (den / M[i][j].get_den());
  mpz_class prev = 1;
  for (int p = 0; p < k; ++p) {
    if (z[p][p] == 0)
      throw std::runtime_error("gram_log_volume: basis is rank-deficient");
    if (z[p][p] < 0)
      throw std::runtime_error("gram_log_volume: metric not positive definite on span");
    for (int i = p + 1; i < k; ++i)
      for (int j = p + 1; j < k; ++j) {
        mpz_class t = z[i][j] * z[p][p] - z[i][p] * z[p][j];
        mpz_divexact(z[i][j].get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
      }
    prev = z[p][p];
  }
  mpz_class dn;
  mpz_pow_ui(dn.get_mpz_t(), den.get_mpz_t(), k);
  lv.gram_det = mpq_class(z[k - 1][k - 1]) / mpq_class(dn);
  lv.gram_det.canonicalize();
  lv.log_volume = 0.5 * log_of_mpq(lv.gram_det);
  return lv;
}

QVec project_orthogonal(const QVec& v, const QMat& S, const QMat& G) {
  QMat rows = project_orthogonal_rows(QMat{v}, S, G);
  return rows.empty() ? QVec(v.size(), 0) : std::move(rows[0]);
}

// solve_q with a block of right-hand-side columns, so one elimination of the
// normal matrix serves every projected vector
static QMat solve_q_cols(QMat M, QMat b) {
  const int n = (int)M.size();
  if (n == 0) return {};
  const int m = (int)b[0].size();
  if ((int)b.size() != n || (int)M[0].size() != n)
    throw std::invalid_argument("solve_q_cols: shape mismatch");
  for (int c = 0; c < n; ++c) {
    int p = -1;
    for (int i = c; i < n; ++i)
      if (M[i][c] != 0) { p = i; break; }
    if (p < 0) throw std::runtime_error("solve_q_cols: singular system");
    std::swap(M[p], M[c]);
    std::swap(b[p], b[c]);
    for (int i = 0; i < n; ++i) {
      if (i == c || M[i][c] == 0) continue;
      mpq_class f = M[i][c] / M[c][c];
      for (int j = c; j < n; ++j) M[i][j] -= f * M[c][j];
      for (int j = 0; j < m; ++j)
        if (b[c][j] != 0) b[i][j] -= f * b[c][j];
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) b[i][j] /= M[i][i];
  return b;
}

QMat project_orthogonal_rows(const QMat& V, const QMat& S, const QMat& G) {
  QMat out(V.size());
  const int n = V.empty() ? 0 : (int)V[0].size();
  for (auto& row : out) row.assign(n, 0);
  if (S.empty() || V.empty()) return out;
  if ((int)S[0].size() != n || (int)G.size() != n)
    throw std::invalid_argument("project_orthogonal_rows: shape mismatch");
  QMat SG = mat_mul(S, G);
  QMat M = mat_mul(SG, mat_transpose(S));  // S G S^T
  QMat rhs = mat_mul(SG, mat_transpose(V));
  QMat coef;
  try {
    coef = solve_q_cols(std::move(M), std::move(rhs));
  } catch (const std::runtime_error&) {
    throw std::runtime_error("project_orthogonal: subspace basis is dependent");
  }
  for (size_t v = 0; v < V.size(); ++v)
    for (size_t i = 0; i < S.size(); ++i)
      if (coef[i][v] != 0)
        for (int j = 0; j < n; ++j)
          if (S[i][j] != 0) out[v][j] += coef[i][v] * S[i][j];
  return out;
}

// ---------------------------------------------------------------------------
// Text exchange format

SparseZMatrix read_coo(std::istream& in) {
  long rows, cols, nnz;
  if (!(in >> rows >> cols >> nnz))
    throw std::runtime_error("read_coo: missing 'rows cols nnz' header");
  if (rows < 0 || cols < 0 || nnz < 0)
    throw std::runtime_error("read_coo: negative header field");
  SparseZMatrix a((int)rows, (int)cols);
  std::map<std::pair<long, long>, bool> seen;
  for (long k = 0; k < nnz; ++k) {
    long r, c;
    std::string v;
    if (!(in >> r >> c >> v))
      throw std::runtime_error("read_coo: truncated entry list");
    if (!seen.emplace(std::make_pair(r, c), true).second)
      throw std::runtime_error("read_coo: duplicate (row, col) key");
    mpz_class z(v);
    if (z == 0) throw std::runtime_error("read_coo: explicit zero entry");
    a.add((int)r, (int)c, z);
  }
  a.finalize();
  return a;
}

void write_coo(std::ostream& out, const SparseZMatrix& A) {
  SparseZMatrix a = finalized(A);
  out << a.rows << ' ' << a.cols << ' ' << a.nnz() << '\n';
  for (const auto& [r, c, v] : a.entries)
    out << r << ' ' << c << ' ' << v.get_str() << '\n';
}

}  // namespace torhom
