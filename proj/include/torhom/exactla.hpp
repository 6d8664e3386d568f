// Exact sparse linear algebra over Z and Q: Smith normal form, mod-l rank,
// saturated kernels, Gram log-volumes, orthogonal projection.
#pragma once

#include <gmpxx.h>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <tuple>
#include <vector>

namespace torhom {

using ZVec = std::vector<mpz_class>;
using ZMat = std::vector<ZVec>;            // dense, row major
using QVec = std::vector<mpq_class>;
using QMat = std::vector<QVec>;

// Coordinate-list integer matrix.  Entries are deduplicated and nonzero once
// finalize() has run; ops below call it implicitly if needed.
struct SparseZMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::tuple<int, int, mpz_class>> entries;
  bool finalized = false;

  SparseZMatrix() = default;
  SparseZMatrix(int r, int c) : rows(r), cols(c) {}

  void add(int r, int c, const mpz_class& v);
  void finalize();                         // sort, combine duplicates, drop zeros
  size_t nnz() const { return entries.size(); }
  ZMat dense() const;
  static SparseZMatrix from_dense(const ZMat& m);
};

struct SnfResult {
  ZVec divisors;                           // d1 | d2 | ... | dr, all positive
  int rank = 0;                            // == divisors.size()
};

// Transforms are only tracked densely; meant for desk-scale matrices and for
// cross-checking kernels in tests.  U*A*V = diag(divisors) with U, V unimodular.
struct SnfTransforms {
  SnfResult snf;
  ZMat U;                                  // rows x rows
  ZMat V;                                  // cols x cols
};

SnfResult snf(const SparseZMatrix& A);
SnfTransforms snf_with_transforms(const SparseZMatrix& A);

// Rank over F_ell.  The parallel variant picks the same pivots as the serial
// one (selection happens outside the parallel region), so outputs agree.
int rank_mod_l(const SparseZMatrix& A, unsigned long ell);
int rank_mod_l_parallel(const SparseZMatrix& A, unsigned long ell);

// Basis of ker(A) intersect Z^cols as a saturated (primitive) lattice: every
// integer kernel vector is a Z-combination of the returned rows.
std::vector<ZVec> saturated_kernel(const SparseZMatrix& A);
std::vector<ZVec> saturated_kernel_q(const QMat& A);   // clears denominators row by row

struct LatticeVolume {
  double log_volume = 0.0;                 // (1/2) log gram_det
  int rank = 0;
  mpq_class gram_det = 1;
};

// B holds basis vectors as rows; G is the metric on the ambient space.
LatticeVolume gram_log_volume(const QMat& B, const QMat& G);
QVec project_orthogonal(const QVec& v, const QMat& S, const QMat& G);
// Rows of V projected in one pass, amortizing the normal-matrix elimination.
QMat project_orthogonal_rows(const QMat& V, const QMat& S, const QMat& G);

// Dense exact helpers shared by the equivariant and homology layers.
mpz_class bareiss_det(ZMat m);             // destroys its copy
mpq_class det_q(const QMat& m);
int rank_q(QMat m);
QMat mat_mul(const QMat& a, const QMat& b);
QVec mat_apply(const QMat& a, const QVec& v);
QMat mat_transpose(const QMat& a);
// Solve M x = b for square nonsingular M (exact); throws if singular.
QVec solve_q(QMat M, QVec b);

// Row Hermite normal form with unimodular row transform: U*A = H.  Returns H
// and fills U when requested.  Used for saturation and lattice indices.
ZMat hnf_rows(const ZMat& A, ZMat* U = nullptr);

double log_of_mpq(const mpq_class& q);     // natural log, overflow-safe
double log_of_mpz(const mpz_class& z);

// Coordinate-list text exchange format: "rows cols nnz" header then one
// "r c v" line per entry (0-based indices).
SparseZMatrix read_coo(std::istream& in);
void write_coo(std::ostream& out, const SparseZMatrix& A);

}  // namespace torhom
