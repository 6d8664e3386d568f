#pragma once
// Modular symbols over an imaginary quadratic field.  A symbol <alpha, beta; g>
// is a pair of cusps in P^1(F) together with a 2x2 matrix g of nonzero
// determinant recording the finite twist; only the homothety class of the
// lattice g*O_v^2 at each prime v ever enters, so g is kept integral (scaling
// by F^* is harmless) and a single global matrix stands in for the adelic
// component.
//
// The per-prime valuation n_v of a symbol is the distance in the Bruhat-Tits
// tree at v between the geodesic joining alpha and beta and the vertex fixed
// by g.  The valuations assemble into the conductor ideal, whose unit count
// is the denominator bound attached to the symbol; split() manufactures an
// intermediate cusp x so that both halves of a symbol have conductor prime to
// a chosen modulus, with small denominator at the chosen prime.

#include <torhom/quadfield.hpp>

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

namespace torhom {

// ---------------------------------------------------------------------------
// Cusps: points of P^1(F) as coprime pairs (num : den), infinity = (1 : 0).

struct P1Point {
  QuadElem num, den;

  bool is_infinity() const { return den.is_zero(); }
  std::string str() const;   // "num/den", "num" when den = 1, "inf"
};

// reduce to a coprime pair and a canonical associate; (0, 0) is rejected
P1Point p1_point(const QuadElem& num, const QuadElem& den);
P1Point p1_infinity(const QuadField& F);
P1Point p1_zero(const QuadField& F);
P1Point p1_from_str(const QuadField& F, const std::string& s);
bool p1_equal(const P1Point& a, const P1Point& b);

// ---------------------------------------------------------------------------
// Symbols.

struct ModularSymbol {
  P1Point alpha, beta;
  Mat2 g;
  int sign = 1;                      // +-1; <beta, alpha; g> carries -sign

  std::map<QfIdeal, int> n_cache;    // per-prime tree valuations, on demand
};

// validates alpha != beta and det g != 0
ModularSymbol make_symbol(const P1Point& alpha, const P1Point& beta,
                          const Mat2& g);
ModularSymbol symbol_reversed(const ModularSymbol& s);

std::string symbol_to_json(const ModularSymbol& s);
ModularSymbol symbol_from_json(const QuadField& F, const std::string& text);

// ---------------------------------------------------------------------------
// Tree valuations and conductors.

// Distance in the Bruhat-Tits tree at the prime v between the geodesic
// (alpha_v, beta_v) and the vertex [g O_v^2].  The geodesic is walked in
// apartment coordinates: the distance from position t is the elementary-
// divisor spread of g^{-1} m diag(pi^t, 1) with m the column matrix of the
// two cusps, a convex function of t, so the walk expands from t = 0 until
// the distance rises on both sides.  Results are cached on the symbol.
int tree_valuation(ModularSymbol& s, const QfIdeal& v);

struct ConductorData {
  QfIdeal f;                                     // product of q_v^{n_v}
  std::vector<std::pair<QfIdeal, int>> support;  // primes with n_v >= 1
  mpz_class denominator;                         // #(O/f)^* = euler_phi(f)
};

// The candidate places are the primes dividing det(g) or the cross-term
// det(m) of the two cusps; n_v = 0 off that set (the spread is bounded by
// the valuation of the two determinants).  The first `margin` primes by norm
// are checked to vanish anyway, as a guard on the candidate enumeration.
ConductorData conductor(ModularSymbol& s, int margin = 10);

std::string conductor_to_json(const ConductorData& c);

// h_F * phi(f) * N(n) * phi(n) with h_F = 1 for the supported fields: an
// upper bound for the order of the twisting character attached to a symbol
// of conductor f at level n.
mpz_class character_order_bound(const ConductorData& c, const QfIdeal& n);

// ---------------------------------------------------------------------------
// Refined valuation along a marked edge.

// Length-one segment in the tree at v: the standard vertex [O_v^2] together
// with its neighbour in the direction (u : w) of P^1(O/q_v).
struct TreeSegment {
  QuadElem u, w;
};

// max over the two vertices of g * segment of their distance to the geodesic
// (alpha_v, beta_v); always >= tree_valuation, and 0 exactly when the moved
// segment lies on the geodesic.
int refined_valuation(ModularSymbol& s, const QfIdeal& v,
                      const TreeSegment& seg);

// ---------------------------------------------------------------------------
// Continued-fraction decomposition.

// Chain of unimodular matrices g_1 .. g_k with the symbols <g_i 0, g_i inf>
// telescoping from alpha to beta: boundaries sum to beta - alpha and every
// det(g_i) is a unit.  Adjacent mutually-inverse segments are cancelled, so
// alpha = beta yields an empty chain.
std::vector<Mat2> manin_decompose(const P1Point& alpha, const P1Point& beta);

// ---------------------------------------------------------------------------
// Denominator-avoiding splitting.

struct SplitResult {
  P1Point x;
  ModularSymbol left, right;         // <0, x; g> and <x, inf; g>
  ConductorData left_conductor, right_conductor;

  // one record per bad prime v (where g misses PGL2(O_v)): the disc
  // pi^{n_v} beta_v (1 + pi^{m_v} O_v) that x was steered into
  struct LocalDisc {
    QfIdeal prime;
    int n_v = 0;                     // valuation of the disc
    int m_v = 1;                     // congruence depth
    QuadElem beta_v;                 // unit part, mod q_v^{m_v}
  };
  std::vector<LocalDisc> local_data;

  QfIdeal n0;                        // product of q_v^{m_v}
  QfIdeal a1_ideal, a2_ideal;        // q_v^{n_v^+} resp. q_v^{n_v^-} parts
  QfIdeal a1_prime, a2_prime;        // auxiliary good primes for (i)
  QfIdeal b1_prime, b2_prime;        // good primes for (iii)
  QuadElem a1, a2, b1, b2;           // generators: x = a1 b1 / (a2 b2)
};

// Split <0, inf; g> at an intermediate cusp x = a1 b1 / (a2 b2) so that both
// halves have conductor prime to M*p and denominator of p-valuation at most
// 2(A_p - 1), where A_p = 1 for p > 5 and 3 otherwise.  The auxiliary primes
// avoid M, p and the bad places of g, have norm not 1 mod p^{A_p}, and meet
// the unit congruence b1/b2 = lambda mod n0 steering x into the local discs.
// Both output conductors are recomputed and checked; a violation is a hard
// error, an exhausted prime search a runtime error.  `budget` caps the norm
// of every auxiliary prime scanned for.
SplitResult split(ModularSymbol& s, const mpz_class& M, const mpz_class& p,
                  const mpz_class& budget = 1000000);

}  // namespace torhom
