#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "torhom/quadfield.hpp"

#include <algorithm>
#include <random>
#include <set>

using namespace torhom;

namespace {

const int kFields[] = {1, 2, 3, 7, 11};

QuadElem rand_elem(const QuadField& F, std::mt19937& rng, int span = 20) {
  std::uniform_int_distribution<int> v(-span, span);
  return QuadElem(F, v(rng), v(rng));
}

// All residues of O mod I, via the Hermite basis box.
std::vector<QuadElem> residues(const QfIdeal& I) {
  std::vector<QuadElem> out;
  for (mpz_class y = 0; y < I.c; ++y)
    for (mpz_class x = 0; x < I.a; ++x) out.emplace_back(*I.F, x, y);
  return out;
}

// Brute-force |(O/I)^x|: residues admitting a multiplicative inverse.
long unit_count_oracle(const QfIdeal& I) {
  long n = 0;
  QuadElem inv(*I.F);
  for (const auto& r : residues(I))
    if (inverse_mod(r, I, inv)) ++n;
  return n;
}

// Independent invertibility test: r is a unit mod I iff (r) + I = O.
bool coprime_oracle(const QuadElem& r, const QfIdeal& I) {
  if (r.is_zero()) return I.is_whole();
  return ideal_add(principal_ideal(r), I).is_whole();
}

// Enumerate every index-n sublattice of O closed under multiplication by w;
// these are exactly the ideals of norm n.
std::vector<QfIdeal> ideals_oracle(const QuadField& F, long n) {
  std::vector<QfIdeal> out;
  for (long c = 1; c <= n; ++c) {
    if (n % c) continue;
    long a = n / c;
    for (long b = 0; b < a; ++b) {
      QfIdeal I;
      I.F = &F;
      I.a = a;
      I.b = b;
      I.c = c;
      QuadElem w(F, 0, 1);
      if (I.contains(QuadElem(F, a) * w) && I.contains(QuadElem(F, b, c) * w))
        out.push_back(I);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("element arithmetic is a ring with multiplicative norm") {
  std::mt19937 rng(2026);
  for (int d : kFields) {
    const QuadField& F = QuadField::get(d);
    QuadElem w(F, 0, 1);
    CHECK(w * w == QuadElem(F, F.wsq_c, F.wsq_w));
    for (int t = 0; t < 25; ++t) {
      QuadElem a = rand_elem(F, rng), b = rand_elem(F, rng), c = rand_elem(F, rng);
      CHECK(a * (b + c) == a * b + a * c);
      CHECK(a * b == b * a);
      CHECK((a * b) * c == a * (b * c));
      CHECK((a * b).norm() == a.norm() * b.norm());
      CHECK((a * a.conj()).x == a.norm());
      CHECK((a * a.conj()).y == 0);
      CHECK((a + a.conj()).x == a.trace());
      CHECK(a.conj().conj() == a);
      CHECK(a.norm() >= 0);
      if (!b.is_zero()) {
        QuadElem q(F);
        CHECK(elem_divide(a * b, b, q));
        CHECK(q == a);
      }
    }
  }
  CHECK_THROWS(QuadField::get(5));
}

TEST_CASE("euclidean division works in all five fields") {
  std::mt19937 rng(31);
  for (int d : kFields) {
    const QuadField& F = QuadField::get(d);
    for (int t = 0; t < 60; ++t) {
      QuadElem a = rand_elem(F, rng, 50), b = rand_elem(F, rng, 12);
      if (b.is_zero()) continue;
      QuadElem q = euclid_div(a, b);
      CHECK((a - q * b).norm() < b.norm());
    }
  }
}

TEST_CASE("element display form") {
  const QuadField& F = QuadField::get(3);
  CHECK(QuadElem(F, 5).str() == "5");
  CHECK(QuadElem(F, 0).str() == "0");
  CHECK(QuadElem(F, 0, 1).str() == "w");
  CHECK(QuadElem(F, 2, -3).str() == "2-3*w");
  CHECK(QuadElem(F, -1, 1).str() == "-1+w");
  CHECK(QuadElem(F, 0, -1).str() == "-w");
}

TEST_CASE("ideal construction, Hermite form, norm = lattice index") {
  std::mt19937 rng(47);
  for (int d : kFields) {
    const QuadField& F = QuadField::get(d);
    for (int t = 0; t < 20; ++t) {
      QuadElem g = rand_elem(F, rng, 9);
      if (g.is_zero()) continue;
      QfIdeal I = principal_ideal(g);
      CHECK(I.a > 0);
      CHECK(I.c > 0);
      CHECK(I.b >= 0);
      CHECK(I.b < I.a);
      CHECK(I.norm() == g.norm());            // principal: norm of generator
      CHECK(I.contains(g));
      QuadElem w(F, 0, 1);
      CHECK(I.contains(g * w));
      CHECK(I.contains(QuadElem(F, I.a) * w));  // closed under w: an ideal
      // reduce is an idempotent retraction onto the residue box mod I
      QuadElem e = rand_elem(F, rng, 100);
      QuadElem r = I.reduce(e);
      CHECK(I.reduce(r) == r);
      CHECK(I.contains(e - r));
    }
  }
  CHECK_THROWS(ideal_from_gens(QuadField::get(1), {QuadElem(QuadField::get(1), 0)}));
}

TEST_CASE("ideal multiplication, conjugate, gcd") {
  std::mt19937 rng(53);
  for (int d : kFields) {
    const QuadField& F = QuadField::get(d);
    for (int t = 0; t < 15; ++t) {
      QuadElem g = rand_elem(F, rng, 8), h = rand_elem(F, rng, 8);
      if (g.is_zero() || h.is_zero()) continue;
      QfIdeal I = principal_ideal(g), J = principal_ideal(h);
      CHECK(ideal_mul(I, J).norm() == I.norm() * J.norm());
      CHECK(ideal_mul(I, J) == principal_ideal(g * h));
      CHECK(ideal_conj(I).norm() == I.norm());
      // I * conj(I) = (N(I))
      CHECK(ideal_mul(I, ideal_conj(I)) ==
            principal_ideal(QuadElem(F, I.norm())));
      // gcd contains both
      QfIdeal S = ideal_add(I, J);
      CHECK(S.contains_ideal(I));
      CHECK(S.contains_ideal(J));
    }
  }
}

TEST_CASE("ideal generators: minimal vectors, canonical associates") {
  std::mt19937 rng(61);
  for (int d : kFields) {
    const QuadField& F = QuadField::get(d);
    for (int t = 0; t < 25; ++t) {
      QuadElem g = rand_elem(F, rng, 15);
      if (g.is_zero()) continue;
      QfIdeal I = principal_ideal(g);
      QuadElem gen = ideal_generator(I);
      CHECK(gen.norm() == I.norm());
      CHECK(principal_ideal(gen) == I);
      // associate-independent
      for (const auto& u : units(F))
        CHECK(ideal_generator(principal_ideal(u * g)) == gen);
    }
  }
  CHECK(ideal_label(principal_ideal(QuadElem(QuadField::get(3), 5))) == "(5)");
}

TEST_CASE("splitting types match Kronecker symbol classification") {
  const QuadField& F3 = QuadField::get(3);
  CHECK(splitting_type(F3, 5) == Splitting::inert);
  CHECK(splitting_type(F3, 7) == Splitting::split);
  CHECK(splitting_type(F3, 3) == Splitting::ramified);
  CHECK_THROWS(splitting_type(F3, 6));

  for (int d : kFields) {
    const QuadField& F = QuadField::get(d);
    for (long p : {2L, 3L, 5L, 7L, 11L, 13L, 17L, 19L, 23L, 29L, 31L, 37L, 41L, 43L, 47L}) {
      auto pr = primes_above(F, p);
      Splitting st = splitting_type(F, p);
      if (st == Splitting::inert) {
        REQUIRE(pr.size() == 1);
        CHECK(pr[0].norm() == p * p);
      } else {
        CHECK(pr.size() == (st == Splitting::split ? 2 : 1));
        QfIdeal prod = pr[0];
        for (const auto& P : pr) CHECK(P.norm() == p);
        if (st == Splitting::split) {
          CHECK_FALSE(pr[0] == pr[1]);
          CHECK(ideal_conj(pr[0]) == pr[1]);
          prod = ideal_mul(pr[0], pr[1]);
        } else {
          prod = ideal_mul(pr[0], pr[0]);
        }
        // product of the primes above p generates (p)
        CHECK(prod == principal_ideal(QuadElem(F, p)));
      }
    }
  }
}

TEST_CASE("modular square roots drive splitting for large primes") {
  const QuadField& F = QuadField::get(11);
  // 1000003 = 1 mod 11 is split in Q(sqrt(-11)); exercise Tonelli-Shanks
  mpz_class p = 1000003;
  if (splitting_type(F, p) == Splitting::split) {
    auto pr = primes_above(F, p);
    CHECK(pr[0].norm() == p);
  }
  for (int d : kFields) {
    const QuadField& G = QuadField::get(d);
    for (long q : {10007L, 10009L, 10037L, 10039L}) {
      if (splitting_type(G, q) != Splitting::split) continue;
      auto pr = primes_above(G, q);
      CHECK(ideal_mul(pr[0], pr[1]) == principal_ideal(QuadElem(G, q)));
    }
  }
}

TEST_CASE("euler_phi formula vs brute-force unit count") {
  const QuadField& F3 = QuadField::get(3);
  CHECK(euler_phi(ideal_from_gens(F3, {QuadElem(F3, 1)})) == 1);
  QfIdeal five = principal_ideal(QuadElem(F3, 5));
  CHECK(euler_phi(five) == 24);
  CHECK(euler_phi(ideal_mul(five, five)) == 600);

  for (int d : kFields) {
    const QuadField& F = QuadField::get(d);
    for (const auto& I : ideals_up_to(F, 200)) {
      CHECK(euler_phi(I) == unit_count_oracle(I));
    }
  }
}

TEST_CASE("inverse_mod agrees with the ideal-gcd unit test") {
  std::mt19937 rng(71);
  for (int d : kFields) {
    const QuadField& F = QuadField::get(d);
    for (const auto& I : ideals_up_to(F, 40)) {
      for (int t = 0; t < 8; ++t) {
        QuadElem r = I.reduce(rand_elem(F, rng, 30));
        QuadElem inv(F);
        bool ok = inverse_mod(r, I, inv);
        CHECK(ok == coprime_oracle(r, I));
        if (ok) CHECK(I.reduce(r * inv - QuadElem(F, 1)).is_zero());
      }
    }
  }
}

TEST_CASE("ideal enumeration equals the closed-under-w sublattice oracle") {
  for (int d : kFields) {
    const QuadField& F = QuadField::get(d);
    for (long n = 1; n <= 60; ++n) {
      auto got = ideals_of_norm(F, n);
      auto want = ideals_oracle(F, n);
      std::sort(want.begin(), want.end());
      REQUIRE(got.size() == want.size());
      for (size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i] == want[i]);
        CHECK(got[i].norm() == n);
      }
    }
  }
}

TEST_CASE("valuations against prime factorizations") {
  std::mt19937 rng(83);
  for (int d : {1, 3, 7}) {
    const QuadField& F = QuadField::get(d);
    for (long p : {2L, 3L, 5L, 7L}) {
      auto pr = primes_above(F, p);
      QuadElem pi = ideal_generator(pr[0]);
      for (int k = 0; k <= 3; ++k) {
        QuadElem e(F, 1);
        for (int i = 0; i < k; ++i) e = e * pi;
        QuadElem noise = rand_elem(F, rng, 9);
        while (noise.is_zero() || valuation(noise, pr[0]) > 0)
          noise = rand_elem(F, rng, 9);
        CHECK(valuation(e * noise, pr[0]) == k);
      }
      if (pr.size() == 2) {
        // p itself has valuation 1 at each conjugate prime
        CHECK(valuation(QuadElem(F, p), pr[0]) == 1);
        CHECK(valuation(QuadElem(F, p), pr[1]) == 1);
        CHECK(ideal_valuation(pr[0], pr[1]) == 0);
      }
    }
  }
}

TEST_CASE("projective line sizes: fixed examples and closed formula") {
  const QuadField& F3 = QuadField::get(3);
  CHECK(P1Space(F3, ideal_from_gens(F3, {QuadElem(F3, 1)})).size() == 1);
  CHECK(P1Space(F3, principal_ideal(QuadElem(F3, 5))).size() == 26);
  CHECK(P1Space(F3, principal_ideal(QuadElem(F3, 7))).size() == 64);
}

TEST_CASE("projective line is the quotient of unimodular pairs by units") {
  for (int d : kFields) {
    const QuadField& F = QuadField::get(d);
    for (const auto& I : ideals_up_to(F, 26)) {
      if (I.is_whole()) continue;
      P1Space p1(F, I);
      mpz_class phi = euler_phi(I);
      std::map<long, long> fiber;
      long unimodular = 0;
      for (const auto& u : residues(I))
        for (const auto& w : residues(I)) {
          // unimodular pair: (u, w, I) = O
          QfIdeal g = I;
          if (!u.is_zero()) g = ideal_add(g, principal_ideal(u));
          if (!w.is_zero()) g = ideal_add(g, principal_ideal(w));
          if (!g.is_whole()) continue;
          ++unimodular;
          ++fiber[p1.index_of(u, w)];
        }
      // each point is hit by exactly phi unit rescalings
      CHECK((long)fiber.size() == p1.size());
      CHECK(unimodular == phi.get_si() * p1.size());
      for (const auto& [idx, cnt] : fiber) CHECK(cnt == phi);
    }
  }
}

TEST_CASE("projective action: group law, identity, det rejection") {
  std::mt19937 rng(97);
  for (int d : {1, 3, 11}) {
    const QuadField& F = QuadField::get(d);
    QfIdeal I = ideals_up_to(F, 18).back();
    P1Space p1(F, I);
    // random SL2(O) words in elementary matrices
    auto rand_sl2 = [&]() {
      Mat2 m = mat2_id(F);
      for (int k = 0; k < 5; ++k) {
        QuadElem t = rand_elem(F, rng, 3);
        Mat2 e = (rng() % 2) ? Mat2{QuadElem(F, 1), t, QuadElem(F, 0), QuadElem(F, 1)}
                             : Mat2{QuadElem(F, 1), QuadElem(F, 0), t, QuadElem(F, 1)};
        m = mat2_mul(m, e);
      }
      return m;
    };
    for (int t = 0; t < 10; ++t) {
      Mat2 g = rand_sl2(), h = rand_sl2();
      long i = (long)(rng() % p1.size());
      CHECK(p1.act(i, mat2_id(F)) == i);
      CHECK(p1.act(p1.act(i, g), h) == p1.act(i, mat2_mul(g, h)));
    }
    // non-unit determinant rejected
    QfIdeal P = ideal_factor(I)[0].first;
    QuadElem pi = ideal_generator(P);
    Mat2 bad = {pi, QuadElem(F, 0), QuadElem(F, 0), QuadElem(F, 1)};
    CHECK_THROWS(p1.act(0, bad));
  }
}

TEST_CASE("base point of the projective line is (0:1)") {
  const QuadField& F = QuadField::get(1);
  QfIdeal I = principal_ideal(QuadElem(F, 3, 1));
  P1Space p1(F, I);
  CHECK(p1.base() == p1.index_of(QuadElem(F, 0), QuadElem(F, 1)));
  // (0:1) * [[a,b],[c,d]] = (c:d): lower-triangular c=0 fixes the base point
  Mat2 upper = {QuadElem(F, 1), QuadElem(F, 2, 1), QuadElem(F, 0), QuadElem(F, 1)};
  CHECK(p1.act(p1.base(), upper) == p1.base());
}

TEST_CASE("principal prime search: order, constraints, budget failure") {
  const QuadField& F3 = QuadField::get(3);
  {
    PrimeSearch s;
    QuadElem pi = find_principal_prime(F3, s);
    CHECK(pi.norm() == 3);                  // ramified prime above 3 comes first
  }
  {
    PrimeSearch s;
    s.norm_mod = 7;
    s.forbidden_norm_residues = {1};
    QuadElem pi = find_principal_prime(F3, s);
    CHECK(pi.norm() % 7 != 1);
    CHECK(pi.norm() == 3);
  }
  {
    // skip norms 3 and 4: the next admissible candidate is split 7
    PrimeSearch s;
    s.norm_mod = 7;
    s.forbidden_norm_residues = {3, 4};
    QuadElem pi = find_principal_prime(F3, s);
    CHECK(pi.norm() == 7);
  }
  {
    PrimeSearch s;
    s.residue = QuadElem(F3, 1);
    s.modulus = principal_ideal(QuadElem(F3, 2));
    QuadElem pi = find_principal_prime(F3, s);
    CHECK(s.modulus->reduce(pi - QuadElem(F3, 1)).is_zero());
    mpz_class n = pi.norm();
    bool prime_norm = mpz_probab_prime_p(n.get_mpz_t(), 30) != 0;
    bool inert_square = mpz_perfect_square_p(n.get_mpz_t()) != 0;
    CHECK((prime_norm || inert_square));
  }
  {
    PrimeSearch s;
    s.norm_mod = 3;
    s.forbidden_norm_residues = {0, 1, 2};
    s.norm_budget = 200;
    CHECK_THROWS_WITH_AS(find_principal_prime(F3, s),
                         doctest::Contains("200"), std::runtime_error);
  }
  {
    // avoid set: returned prime stays coprime to the listed rational primes
    PrimeSearch s;
    s.avoid_rational = {3, 7};
    QuadElem pi = find_principal_prime(F3, s);
    CHECK(pi.norm() % 3 != 0);
    CHECK(pi.norm() % 7 != 0);
  }
}
