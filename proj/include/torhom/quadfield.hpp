// Arithmetic in the ring of integers of Q(sqrt(-d)) for the five Euclidean
// imaginary quadratic fields d in {1,2,3,7,11}: elements, ideals in Hermite
// form, prime splitting, ideal Euler phi, P^1(O/n), constrained prime search.
#pragma once

#include "torhom/exactla.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace torhom {

// omega = sqrt(-d) when -d is 2 or 3 mod 4, else (1+sqrt(-d))/2.  Class
// number is 1 for every supported d, which the ideal code leans on freely.
struct QuadField {
  int d = 0;
  bool half = false;                 // omega = (1+sqrt(-d))/2
  mpz_class wsq_c, wsq_w;            // omega^2 = wsq_c + wsq_w * omega

  static const QuadField& get(int d);   // throws on unsupported d
  mpz_class disc() const { return half ? mpz_class(-d) : mpz_class(-4 * d); }
};

struct QuadElem {
  const QuadField* F = nullptr;
  mpz_class x, y;                    // x + y*omega

  QuadElem() = default;
  QuadElem(const QuadField& f, mpz_class a = 0, mpz_class b = 0)
      : F(&f), x(std::move(a)), y(std::move(b)) {}

  bool is_zero() const { return x == 0 && y == 0; }
  QuadElem conj() const;
  mpz_class norm() const;
  mpz_class trace() const;
  std::string str() const;           // "x+y*w" display form

  friend QuadElem operator+(const QuadElem& a, const QuadElem& b);
  friend QuadElem operator-(const QuadElem& a, const QuadElem& b);
  friend QuadElem operator*(const QuadElem& a, const QuadElem& b);
  friend QuadElem operator-(const QuadElem& a);
  friend bool operator==(const QuadElem& a, const QuadElem& b) {
    return a.x == b.x && a.y == b.y;
  }
  friend bool operator!=(const QuadElem& a, const QuadElem& b) { return !(a == b); }
};

// Exact division in O; false when b does not divide a.
bool elem_divide(const QuadElem& a, const QuadElem& b, QuadElem& out);
// Euclidean quotient: q with N(a - q*b) < N(b) (exists for all supported d).
QuadElem euclid_div(const QuadElem& a, const QuadElem& b);
// Unit group of O (4, 6 or 2 elements).
std::vector<QuadElem> units(const QuadField& F);

// Nonzero ideal in Hermite form: Z*a + Z*(b + c*w) with a, c > 0, 0 <= b < a.
// Norm = a*c.  Principal generator (class number one) cached on first use.
struct QfIdeal {
  const QuadField* F = nullptr;
  mpz_class a, b, c;

  mpz_class norm() const { return a * c; }
  bool is_whole() const { return a == 1 && c == 1; }
  bool contains(const QuadElem& e) const;
  bool contains_ideal(const QfIdeal& other) const;
  QuadElem reduce(const QuadElem& e) const;   // residue with 0<=x<a, 0<=y<c
  std::array<mpz_class, 4> hnf() const { return {a, b, mpz_class(0), c}; }

  friend bool operator==(const QfIdeal& i, const QfIdeal& j) {
    return i.a == j.a && i.b == j.b && i.c == j.c;
  }
  friend bool operator<(const QfIdeal& i, const QfIdeal& j) {
    if (i.a != j.a) return i.a < j.a;
    if (i.b != j.b) return i.b < j.b;
    return i.c < j.c;
  }
};

QfIdeal ideal_from_gens(const QuadField& F, const std::vector<QuadElem>& gens);
QfIdeal principal_ideal(const QuadElem& g);
QfIdeal ideal_mul(const QfIdeal& i, const QfIdeal& j);
QfIdeal ideal_pow(const QfIdeal& i, int k);
QfIdeal ideal_add(const QfIdeal& i, const QfIdeal& j);   // gcd of ideals
QfIdeal ideal_conj(const QfIdeal& i);

// Shortest vector of the ideal lattice, normalized to a canonical associate.
// Its norm always equals the ideal norm here (h = 1); checked and enforced.
QuadElem ideal_generator(const QfIdeal& i);
// Display label, "(g)" with g in x+y*w form.
std::string ideal_label(const QfIdeal& i);

enum class Splitting { split, inert, ramified };
Splitting splitting_type(const QuadField& F, const mpz_class& p);
// One ideal for inert/ramified p, two (conjugate, deterministic order) for split.
std::vector<QfIdeal> primes_above(const QuadField& F, const mpz_class& p);

// Distinct prime ideals dividing I, with their multiplicities.
std::vector<std::pair<QfIdeal, int>> ideal_factor(const QfIdeal& I);
mpz_class euler_phi(const QfIdeal& f);
int valuation(const QuadElem& e, const QfIdeal& prime);
int ideal_valuation(const QfIdeal& I, const QfIdeal& prime);

// All ideals of the exact norm / of norm <= bound, sorted by (norm, HNF key).
std::vector<QfIdeal> ideals_of_norm(const QuadField& F, const mpz_class& n);
std::vector<QfIdeal> ideals_up_to(const QuadField& F, long max_norm);

// Multiplicative inverse in O/I; false when e is not a unit there.
bool inverse_mod(const QuadElem& e, const QfIdeal& I, QuadElem& out);
bool coprime_to(const QuadElem& e, const QfIdeal& I);

// 2x2 matrices over O, row-major.
using Mat2 = std::array<QuadElem, 4>;
Mat2 mat2_mul(const Mat2& a, const Mat2& b);
QuadElem mat2_det(const Mat2& m);
Mat2 mat2_id(const QuadField& F);

// P^1(O/n) by CRT over the prime-power factors of n.  Points carry canonical
// indices; the right action (u:w) -> (u:w)g is what coset enumeration uses.
class P1Space {
 public:
  P1Space(const QuadField& F, const QfIdeal& n);

  long size() const { return (long)reps_.size(); }
  const QfIdeal& level() const { return n_; }
  long base() const { return base_; }                       // index of (0:1)
  const std::pair<QuadElem, QuadElem>& rep(long i) const { return reps_[i]; }
  long index_of(const QuadElem& u, const QuadElem& w) const;
  // Requires det(g) to be a unit mod n; rejected otherwise.
  long act(long i, const Mat2& g) const;

 private:
  struct Factor {
    QfIdeal P, Q;                    // prime and the prime power dividing n
    mpz_class q;                     // residue norm of P
  };
  std::vector<long> code_of(const QuadElem& u, const QuadElem& w) const;

  const QuadField* F_;
  QfIdeal n_;
  std::vector<Factor> factors_;
  std::vector<QuadElem> crt_unit_;   // e_i = 1 mod Q_i, 0 mod the others
  std::vector<std::pair<QuadElem, QuadElem>> reps_;
  std::map<std::vector<long>, long> index_;
  long base_ = 0;
};

// Search for a generator pi of a principal prime ideal subject to the side
// conditions used by the denominator-avoidance argument.  Deterministic:
// candidates are visited by increasing norm, then by a fixed associate order.
struct PrimeSearch {
  std::optional<QuadElem> residue;       // require pi = residue mod modulus
  std::optional<QfIdeal> modulus;
  mpz_class norm_mod = 0;                // when > 0, forbid N(pi) in these
  std::vector<mpz_class> forbidden_norm_residues;
  std::vector<mpz_class> avoid_rational; // rational primes to stay coprime to
  mpz_class norm_budget = 1000000;
};
QuadElem find_principal_prime(const QuadField& F, const PrimeSearch& s);

}  // namespace torhom
