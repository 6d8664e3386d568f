#include "torhom/quadfield.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace torhom {

// ---------------------------------------------------------------------------
// Fields and elements

const QuadField& QuadField::get(int d) {
  static const auto make = [](int dd) {
    QuadField f;
    f.d = dd;
    f.half = (dd % 4 == 3);                // -d = 1 mod 4
    if (f.half) {
      f.wsq_c = -(1 + dd) / 4;             // w^2 = w - (1+d)/4
      f.wsq_w = 1;
    } else {
      f.wsq_c = -dd;                       // w^2 = -d
      f.wsq_w = 0;
    }
    return f;
  };
  static const QuadField f1 = make(1), f2 = make(2), f3 = make(3), f7 = make(7),
                         f11 = make(11);
  switch (d) {
    case 1: return f1;
    case 2: return f2;
    case 3: return f3;
    case 7: return f7;
    case 11: return f11;
    default: throw std::invalid_argument("QuadField: unsupported d (need 1,2,3,7 or 11)");
  }
}

static void check_same_field(const QuadElem& a, const QuadElem& b) {
  if (a.F != b.F) throw std::invalid_argument("QuadElem: mixed fields");
}

QuadElem operator+(const QuadElem& a, const QuadElem& b) {
  check_same_field(a, b);
  return QuadElem(*a.F, a.x + b.x, a.y + b.y);
}

QuadElem operator-(const QuadElem& a, const QuadElem& b) {
  check_same_field(a, b);
  return QuadElem(*a.F, a.x - b.x, a.y - b.y);
}

QuadElem operator-(const QuadElem& a) { return QuadElem(*a.F, -a.x, -a.y); }

QuadElem operator*(const QuadElem& a, const QuadElem& b) {
  check_same_field(a, b);
  mpz_class yy = a.y * b.y;
  return QuadElem(*a.F, a.x * b.x + yy * a.F->wsq_c,
                  a.x * b.y + a.y * b.x + yy * a.F->wsq_w);
}

QuadElem QuadElem::conj() const {
  // conj(w) = -w, or 1 - w in the half-integer case
  return F->half ? QuadElem(*F, x + y, -y) : QuadElem(*F, x, -y);
}

mpz_class QuadElem::norm() const {
  if (F->half) return x * x + x * y + ((1 + F->d) / 4) * y * y;
  return x * x + F->d * y * y;
}

mpz_class QuadElem::trace() const {
  return F->half ? mpz_class(2 * x + y) : mpz_class(2 * x);
}

std::string QuadElem::str() const {
  if (y == 0) return x.get_str();
  std::string w = (y == 1) ? "w" : (y == -1) ? "-w" : y.get_str() + "*w";
  if (x == 0) return w;
  if (y > 0) return x.get_str() + "+" + w;
  return x.get_str() + w;                  // '-' sign already present
}

bool elem_divide(const QuadElem& a, const QuadElem& b, QuadElem& out) {
  check_same_field(a, b);
  if (b.is_zero()) throw std::invalid_argument("elem_divide: division by zero");
  QuadElem t = a * b.conj();
  mpz_class n = b.norm();
  if (t.x % n != 0 || t.y % n != 0) return false;
  out = QuadElem(*a.F, t.x / n, t.y / n);
  return true;
}

static mpz_class round_quotient(const mpz_class& num, const mpz_class& den) {
  // nearest integer to num/den for den > 0
  mpz_class q;
  mpz_class t = 2 * num + den;
  mpz_fdiv_q(q.get_mpz_t(), t.get_mpz_t(), mpz_class(2 * den).get_mpz_t());
  return q;
}

QuadElem euclid_div(const QuadElem& a, const QuadElem& b) {
  check_same_field(a, b);
  if (b.is_zero()) throw std::invalid_argument("euclid_div: division by zero");
  QuadElem t = a * b.conj();
  mpz_class n = b.norm();
  mpz_class qx = round_quotient(t.x, n), qy = round_quotient(t.y, n);
  // The nearest lattice point can miss in the skew coordinates; a 3x3 sweep
  // around it always contains a quotient with remainder norm < N(b) for the
  // norm-Euclidean fields handled here.
  QuadElem best(*a.F);
  mpz_class bestn = -1;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      QuadElem q(*a.F, qx + dx, qy + dy);
      mpz_class rn = (a - q * b).norm();
      if (bestn < 0 || rn < bestn) { bestn = rn; best = q; }
    }
  if (bestn >= b.norm())
    throw std::runtime_error("euclid_div: no quotient with smaller remainder norm");
  return best;
}

std::vector<QuadElem> units(const QuadField& F) {
  std::vector<QuadElem> u = {QuadElem(F, 1), QuadElem(F, -1)};
  if (F.d == 1) {
    u.emplace_back(F, 0, 1);
    u.emplace_back(F, 0, -1);
  } else if (F.d == 3) {
    u.emplace_back(F, 0, 1);                 // w
    u.emplace_back(F, 0, -1);
    u.emplace_back(F, -1, 1);                // w^2 = w - 1
    u.emplace_back(F, 1, -1);
  }
  return u;
}

// ---------------------------------------------------------------------------
// Ideals

QfIdeal ideal_from_gens(const QuadField& F, const std::vector<QuadElem>& gens) {
  // Rows in (w-coefficient, constant) order so the Hermite form comes out as
  // {b + c*w, a}: pivot in the w column first, then the rational integer a.
  ZMat rows;
  QuadElem w(F, 0, 1);
  for (const auto& g : gens) {
    if (g.F != &F) throw std::invalid_argument("ideal_from_gens: mixed fields");
    if (g.is_zero()) continue;
    QuadElem gw = g * w;
    rows.push_back({g.y, g.x});
    rows.push_back({gw.y, gw.x});
  }
  if (rows.empty()) throw std::invalid_argument("ideal_from_gens: zero ideal");
  ZMat h = hnf_rows(rows);
  QfIdeal I;
  I.F = &F;
  if (h.size() < 2 || h[0][0] == 0 || h[1][1] == 0)
    throw std::runtime_error("ideal_from_gens: generators do not span a rank-2 lattice");
  I.c = h[0][0];
  I.b = h[0][1];
  I.a = h[1][1];
  return I;
}

QfIdeal principal_ideal(const QuadElem& g) { return ideal_from_gens(*g.F, {g}); }

bool QfIdeal::contains(const QuadElem& e) const {
  if (e.F != F) throw std::invalid_argument("QfIdeal::contains: mixed fields");
  if (e.y % c != 0) return false;
  return (e.x - (e.y / c) * b) % a == 0;
}

bool QfIdeal::contains_ideal(const QfIdeal& o) const {
  return contains(QuadElem(*F, o.a)) && contains(QuadElem(*F, o.b, o.c));
}

QuadElem QfIdeal::reduce(const QuadElem& e) const {
  if (e.F != F) throw std::invalid_argument("QfIdeal::reduce: mixed fields");
  mpz_class q;
  mpz_fdiv_q(q.get_mpz_t(), e.y.get_mpz_t(), c.get_mpz_t());
  mpz_class ry = e.y - q * c;
  mpz_class rx = e.x - q * b;
  mpz_fdiv_r(rx.get_mpz_t(), rx.get_mpz_t(), a.get_mpz_t());
  return QuadElem(*F, rx, ry);
}

QfIdeal ideal_mul(const QfIdeal& i, const QfIdeal& j) {
  if (i.F != j.F) throw std::invalid_argument("ideal_mul: mixed fields");
  QuadElem b1(*i.F, i.a), b2(*i.F, i.b, i.c);
  QuadElem c1(*j.F, j.a), c2(*j.F, j.b, j.c);
  return ideal_from_gens(*i.F, {b1 * c1, b1 * c2, b2 * c1, b2 * c2});
}

QfIdeal ideal_pow(const QfIdeal& i, int k) {
  if (k < 0) throw std::invalid_argument("ideal_pow: negative exponent");
  QfIdeal r = ideal_from_gens(*i.F, {QuadElem(*i.F, 1)});
  for (int t = 0; t < k; ++t) r = ideal_mul(r, i);
  return r;
}

QfIdeal ideal_add(const QfIdeal& i, const QfIdeal& j) {
  if (i.F != j.F) throw std::invalid_argument("ideal_add: mixed fields");
  return ideal_from_gens(*i.F, {QuadElem(*i.F, i.a), QuadElem(*i.F, i.b, i.c),
                                QuadElem(*j.F, j.a), QuadElem(*j.F, j.b, j.c)});
}

QfIdeal ideal_conj(const QfIdeal& i) {
  return ideal_from_gens(*i.F, {QuadElem(*i.F, i.a).conj(),
                                QuadElem(*i.F, i.b, i.c).conj()});
}

QuadElem ideal_generator(const QfIdeal& I) {
  const QuadField& F = *I.F;
  // Lagrange-Gauss reduction of the ideal lattice under the norm form; the
  // shorter vector of a reduced basis is a generator (class number one), and
  // its norm must equal the ideal norm.
  QuadElem u(F, I.a), v(F, I.b, I.c);
  for (;;) {
    if (u.norm() < v.norm()) std::swap(u, v);
    // 2*B(u,v) = N(u+v) - N(u) - N(v)
    mpz_class twob = (u + v).norm() - u.norm() - v.norm();
    mpz_class t = round_quotient(twob, 2 * v.norm());
    if (t == 0) break;
    u = u - QuadElem(F, t) * v;
  }
  if (u.norm() < v.norm()) std::swap(u, v);
  if (v.norm() != I.norm())
    throw std::runtime_error("ideal_generator: shortest vector does not generate");
  // Canonical associate: smallest (y, x) lexicographically among the unit
  // multiples with y > 0, or y = 0 and x > 0.
  QuadElem best(F);
  bool have = false;
  for (const auto& un : units(F)) {
    QuadElem cand = un * v;
    if (cand.y < 0 || (cand.y == 0 && cand.x <= 0)) continue;
    if (!have || cand.y < best.y || (cand.y == best.y && cand.x < best.x)) {
      best = cand;
      have = true;
    }
  }
  if (!have) throw std::logic_error("ideal_generator: no canonical associate");
  return best;
}

std::string ideal_label(const QfIdeal& I) {
  return "(" + ideal_generator(I).str() + ")";
}

// ---------------------------------------------------------------------------
// Splitting, factorization, phi

Splitting splitting_type(const QuadField& F, const mpz_class& p) {
  if (p < 2 || mpz_probab_prime_p(p.get_mpz_t(), 30) == 0)
    throw std::invalid_argument("splitting_type: p must be a rational prime");
  int k = mpz_kronecker(F.disc().get_mpz_t(), p.get_mpz_t());
  return k > 0 ? Splitting::split : (k < 0 ? Splitting::inert : Splitting::ramified);
}

namespace {

uint64_t mulmod(uint64_t a, uint64_t b, uint64_t p) {
  return (uint64_t)((__uint128_t)a * b % p);
}

uint64_t powmod(uint64_t a, uint64_t e, uint64_t p) {
  uint64_t r = 1;
  a %= p;
  while (e) {
    if (e & 1) r = mulmod(r, a, p);
    a = mulmod(a, a, p);
    e >>= 1;
  }
  return r;
}

// Tonelli-Shanks; caller guarantees a is a square mod odd prime p.
uint64_t sqrt_mod(uint64_t a, uint64_t p) {
  a %= p;
  if (p == 2 || a == 0) return a;
  if (p % 4 == 3) return powmod(a, (p + 1) / 4, p);
  uint64_t q = p - 1, s = 0;
  while (q % 2 == 0) { q /= 2; ++s; }
  uint64_t z = 2;
  while (powmod(z, (p - 1) / 2, p) != p - 1) ++z;
  uint64_t m = s, c = powmod(z, q, p), t = powmod(a, q, p), r = powmod(a, (q + 1) / 2, p);
  while (t != 1) {
    uint64_t i = 0, tt = t;
    while (tt != 1) { tt = mulmod(tt, tt, p); ++i; }
    uint64_t b = powmod(c, (uint64_t)1 << (m - i - 1), p);
    m = i;
    c = mulmod(b, b, p);
    t = mulmod(t, c, p);
    r = mulmod(r, b, p);
  }
  return r;
}

// N(w - r), the minimal polynomial of w evaluated at r.
mpz_class minpoly_at(const QuadField& F, const mpz_class& r) {
  return QuadElem(F, -r, 1).norm();
}

// Root of the minimal polynomial of w mod p (exists for split/ramified p).
mpz_class omega_root_mod(const QuadField& F, const mpz_class& pz) {
  if (!pz.fits_ulong_p())
    throw std::invalid_argument("primes_above: prime too large");
  uint64_t p = pz.get_ui();
  if (p == 2 || pz.get_ui() <= 13) {       // tiny p: scan, covers ramified cases
    for (mpz_class r = 0; r < pz; ++r)
      if (minpoly_at(F, r) % pz == 0) return r;
    throw std::logic_error("omega_root_mod: no root found");
  }
  uint64_t dm = (uint64_t)mpz_fdiv_ui(mpz_class(F.d).get_mpz_t(), p);
  uint64_t s = sqrt_mod((p - dm) % p, p);             // sqrt(-d) mod p
  uint64_t r;
  if (F.half)
    r = mulmod((1 + s) % p, powmod(2, p - 2, p), p);  // (1 + sqrt(-d))/2
  else
    r = s;
  mpz_class rz((unsigned long)r);
  if (minpoly_at(F, rz) % pz != 0)
    throw std::logic_error("omega_root_mod: modular square root failed");
  return rz;
}

}  // namespace

std::vector<QfIdeal> primes_above(const QuadField& F, const mpz_class& p) {
  Splitting st = splitting_type(F, p);
  if (st == Splitting::inert)
    return {ideal_from_gens(F, {QuadElem(F, p)})};
  mpz_class r = omega_root_mod(F, p);
  QfIdeal P = ideal_from_gens(F, {QuadElem(F, p), QuadElem(F, -r, 1)});
  if (P.norm() != p) throw std::logic_error("primes_above: wrong residue norm");
  if (st == Splitting::ramified) return {P};
  QfIdeal Pbar = ideal_conj(P);
  if (Pbar == P) throw std::logic_error("primes_above: split primes coincide");
  std::vector<QfIdeal> out = {P, Pbar};
  if (out[1] < out[0]) std::swap(out[0], out[1]);
  return out;
}

namespace {

std::vector<std::pair<mpz_class, int>> factor_z(mpz_class n) {
  std::vector<std::pair<mpz_class, int>> out;
  if (n < 0) n = -n;
  for (mpz_class p = 2; p * p <= n; p += (p == 2 ? 1 : 2)) {
    if (n % p != 0) continue;
    int e = 0;
    while (n % p == 0) { n /= p; ++e; }
    out.emplace_back(p, e);
  }
  if (n > 1) out.emplace_back(n, 1);
  return out;
}

}  // namespace

std::vector<std::pair<QfIdeal, int>> ideal_factor(const QfIdeal& I) {
  std::vector<std::pair<QfIdeal, int>> out;
  for (const auto& [p, e] : factor_z(I.norm())) {
    for (const auto& P : primes_above(*I.F, p)) {
      int v = ideal_valuation(I, P);
      if (v > 0) out.emplace_back(P, v);
    }
  }
  return out;
}

mpz_class euler_phi(const QfIdeal& f) {
  mpz_class phi = f.norm();
  for (const auto& [p, e] : factor_z(phi)) {
    for (const auto& P : primes_above(*f.F, p)) {
      if (!P.contains_ideal(f)) continue;
      mpz_class q = P.norm();
      mpz_divexact(phi.get_mpz_t(), phi.get_mpz_t(), q.get_mpz_t());
      phi *= q - 1;
    }
  }
  return phi;
}

static QuadElem uniformizer(const QfIdeal& prime) { return ideal_generator(prime); }

int valuation(const QuadElem& e, const QfIdeal& prime) {
  if (e.is_zero()) throw std::invalid_argument("valuation: zero element");
  QuadElem pi = uniformizer(prime);
  QuadElem cur = e, q(*e.F);
  int v = 0;
  while (elem_divide(cur, pi, q)) {
    cur = q;
    ++v;
  }
  return v;
}

int ideal_valuation(const QfIdeal& I, const QfIdeal& prime) {
  return valuation(ideal_generator(I), prime);
}

std::vector<QfIdeal> ideals_of_norm(const QuadField& F, const mpz_class& n) {
  if (n < 1) throw std::invalid_argument("ideals_of_norm: positive norm required");
  std::vector<QfIdeal> out = {ideal_from_gens(F, {QuadElem(F, 1)})};
  for (const auto& [p, e] : factor_z(n)) {
    std::vector<QfIdeal> local;
    Splitting st = splitting_type(F, p);
    if (st == Splitting::inert) {
      if (e % 2) return {};                    // odd power of an inert prime
      local.push_back(ideal_pow(primes_above(F, p)[0], e / 2));
    } else if (st == Splitting::ramified) {
      local.push_back(ideal_pow(primes_above(F, p)[0], e));
    } else {
      auto pr = primes_above(F, p);
      for (int i = 0; i <= e; ++i)
        local.push_back(ideal_mul(ideal_pow(pr[0], i), ideal_pow(pr[1], e - i)));
    }
    std::vector<QfIdeal> next;
    for (const auto& base : out)
      for (const auto& l : local) next.push_back(ideal_mul(base, l));
    out.swap(next);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<QfIdeal> ideals_up_to(const QuadField& F, long max_norm) {
  std::vector<QfIdeal> out;
  for (long n = 1; n <= max_norm; ++n) {
    auto v = ideals_of_norm(F, n);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quotient-ring inverses

namespace {

// Express the element 1 as an integer combination of the given elements;
// returns coefficient vector or empty when 1 is not in the lattice they span.
std::vector<mpz_class> express_one(const std::vector<QuadElem>& gens) {
  ZMat rows;
  for (const auto& g : gens) rows.push_back({g.y, g.x});
  ZMat u;
  ZMat h = hnf_rows(rows, &u);
  // back-substitute the target (0, 1) through the echelon rows
  mpz_class t0 = 0, t1 = 1;
  std::vector<mpz_class> c(h.size(), 0);
  for (size_t i = 0; i < h.size(); ++i) {
    if (h[i][0] != 0) {
      if (t0 % h[i][0] != 0) return {};
      c[i] = t0 / h[i][0];
    } else if (h[i][1] != 0) {
      if (t1 % h[i][1] != 0) return {};
      c[i] = t1 / h[i][1];
    } else {
      continue;
    }
    t0 -= c[i] * h[i][0];
    t1 -= c[i] * h[i][1];
  }
  if (t0 != 0 || t1 != 0) return {};
  std::vector<mpz_class> out(gens.size(), 0);
  for (size_t i = 0; i < h.size(); ++i)
    for (size_t j = 0; j < gens.size(); ++j) out[j] += c[i] * u[i][j];
  return out;
}

}  // namespace

bool inverse_mod(const QuadElem& e, const QfIdeal& I, QuadElem& out) {
  const QuadField& F = *I.F;
  QuadElem w(F, 0, 1);
  std::vector<QuadElem> gens = {e, e * w, QuadElem(F, I.a), QuadElem(F, I.b, I.c)};
  auto c = express_one(gens);
  if (c.empty()) return false;
  out = I.reduce(QuadElem(F, c[0], c[1]));
  return true;
}

bool coprime_to(const QuadElem& e, const QfIdeal& I) {
  QuadElem inv(*I.F);
  return inverse_mod(e, I, inv);
}

// ---------------------------------------------------------------------------
// 2x2 matrices

Mat2 mat2_mul(const Mat2& a, const Mat2& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
          a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

QuadElem mat2_det(const Mat2& m) { return m[0] * m[3] - m[1] * m[2]; }

Mat2 mat2_id(const QuadField& F) {
  return {QuadElem(F, 1), QuadElem(F, 0), QuadElem(F, 0), QuadElem(F, 1)};
}

// ---------------------------------------------------------------------------
// P^1(O/n)

P1Space::P1Space(const QuadField& F, const QfIdeal& n) : F_(&F), n_(n) {
  for (const auto& [P, k] : ideal_factor(n)) {
    Factor f;
    f.P = P;
    f.Q = ideal_pow(P, k);
    f.q = P.norm();
    factors_.push_back(std::move(f));
  }
  // CRT elements e_i = 1 mod Q_i, 0 mod Q_j (j != i)
  const size_t nf = factors_.size();
  crt_unit_.resize(nf, QuadElem(F, 1));
  if (nf > 1) {
    for (size_t i = 0; i < nf; ++i) {
      QfIdeal M = ideal_from_gens(F, {QuadElem(F, 1)});
      for (size_t j = 0; j < nf; ++j)
        if (j != i) M = ideal_mul(M, factors_[j].Q);
      const QfIdeal& Q = factors_[i].Q;
      std::vector<QuadElem> gens = {QuadElem(F, M.a), QuadElem(F, M.b, M.c),
                                    QuadElem(F, Q.a), QuadElem(F, Q.b, Q.c)};
      auto c = express_one(gens);
      if (c.empty()) throw std::logic_error("P1Space: prime powers not coprime");
      crt_unit_[i] =
          n_.reduce(QuadElem(F, c[0]) * gens[0] + QuadElem(F, c[1]) * gens[1]);
    }
  }
  // Local points per factor, then the CRT product
  std::vector<std::vector<std::pair<QuadElem, QuadElem>>> local(nf);
  for (size_t i = 0; i < nf; ++i) {
    const QfIdeal& Q = factors_[i].Q;
    const QfIdeal& P = factors_[i].P;
    for (mpz_class yv = 0; yv < Q.c; ++yv)
      for (mpz_class xv = 0; xv < Q.a; ++xv)
        local[i].push_back({QuadElem(F, 1), QuadElem(F, xv, yv)});
    QuadElem pb1(F, P.a), pb2(F, P.b, P.c);
    for (mpz_class t = 0; t * P.c < Q.c; ++t)
      for (mpz_class s = 0; s * P.a < Q.a; ++s) {
        QuadElem v = Q.reduce(QuadElem(F, s) * pb1 + QuadElem(F, t) * pb2);
        local[i].push_back({v, QuadElem(F, 1)});
      }
  }
  std::vector<size_t> pick(nf, 0);
  for (;;) {
    QuadElem u(F, 0), w(F, 0);
    if (nf == 0) {
      w = QuadElem(F, 1);
    } else {
      for (size_t i = 0; i < nf; ++i) {
        u = u + local[i][pick[i]].first * crt_unit_[i];
        w = w + local[i][pick[i]].second * crt_unit_[i];
      }
      u = n_.reduce(u);
      w = n_.reduce(w);
    }
    long idx = (long)reps_.size();
    auto code = code_of(u, w);
    if (!index_.emplace(std::move(code), idx).second)
      throw std::logic_error("P1Space: repeated canonical code");
    reps_.push_back({u, w});
    // advance the mixed-radix counter
    size_t i = 0;
    for (; i < nf; ++i) {
      if (++pick[i] < local[i].size()) break;
      pick[i] = 0;
    }
    if (i == nf) break;
  }
  // size formula: N(n) * prod (1 + 1/q)
  mpz_class expect = n_.norm();
  for (const auto& f : factors_) {
    mpz_divexact(expect.get_mpz_t(), expect.get_mpz_t(), f.q.get_mpz_t());
    expect *= f.q + 1;
  }
  if (expect != (long)reps_.size())
    throw std::logic_error("P1Space: point count disagrees with closed formula");
  base_ = index_of(QuadElem(F, 0), QuadElem(F, 1));
}

std::vector<long> P1Space::code_of(const QuadElem& u, const QuadElem& w) const {
  std::vector<long> code;
  code.reserve(2 * factors_.size());
  for (const auto& f : factors_) {
    QuadElem inv(*F_);
    if (inverse_mod(u, f.Q, inv)) {
      QuadElem r = f.Q.reduce(w * inv);
      code.push_back(0);
      code.push_back(r.x.get_si() + f.Q.a.get_si() * r.y.get_si());
    } else if (inverse_mod(w, f.Q, inv)) {
      QuadElem r = f.Q.reduce(u * inv);
      code.push_back(1);
      code.push_back(r.x.get_si() + f.Q.a.get_si() * r.y.get_si());
    } else {
      throw std::invalid_argument("P1Space: pair is not unimodular at this level");
    }
  }
  return code;
}

long P1Space::index_of(const QuadElem& u, const QuadElem& w) const {
  auto it = index_.find(code_of(u, w));
  if (it == index_.end())
    throw std::logic_error("P1Space: canonical code missing from table");
  return it->second;
}

long P1Space::act(long i, const Mat2& g) const {
  QuadElem inv(*F_);
  if (!inverse_mod(mat2_det(g), n_, inv))
    throw std::invalid_argument("P1Space::act: determinant is not a unit mod the level");
  const auto& [u, w] = reps_[i];
  return index_of(n_.reduce(u * g[0] + w * g[2]), n_.reduce(u * g[1] + w * g[3]));
}

// ---------------------------------------------------------------------------
// Constrained principal prime search

QuadElem find_principal_prime(const QuadField& F, const PrimeSearch& s) {
  if (s.residue.has_value() != s.modulus.has_value())
    throw std::invalid_argument("find_principal_prime: residue and modulus go together");
  auto acceptable = [&](const QuadElem& pi, const mpz_class& p_below) -> bool {
    for (const auto& q : s.avoid_rational)
      if (p_below == q) return false;
    if (s.norm_mod > 0) {
      mpz_class r = pi.norm() % s.norm_mod;
      for (const auto& fr : s.forbidden_norm_residues)
        if (r == ((fr % s.norm_mod) + s.norm_mod) % s.norm_mod) return false;
    }
    if (s.residue && !s.modulus->reduce(pi - *s.residue).is_zero()) return false;
    return true;
  };
  if (s.residue) {
    // Primes in a fixed residue class keep their density as the modulus
    // grows, so walk the class itself by increasing norm; the dense scan
    // below pays a primality test for every norm up to the budget whether
    // or not the class reaches it.  Selection order matches the dense
    // scan: norm, then primes_above order, then associate order.
    const QfIdeal& L = *s.modulus;
    const QuadElem r0 = L.reduce(*s.residue);
    const std::vector<QuadElem> us = units(F);
    struct Cand {
      mpz_class n;
      QuadElem pi;
    };
    mpz_class lo = 1, B = 256;
    if (B > s.norm_budget) B = s.norm_budget;
    while (true) {
      // class points are r0 + x*a + y*(b + c*w); pad the coordinate
      // windows and let the exact norm filter trim the edges
      std::vector<Cand> shell;
      mpz_class sq, yb, t;
      mpz_sqrt(sq.get_mpz_t(), B.get_mpz_t());
      if (F.half)
        t = 4 * B / F.d;
      else
        t = B / F.d;
      mpz_sqrt(yb.get_mpz_t(), t.get_mpz_t());
      yb += 1;
      mpz_class ylo, yhi, num;
      num = -yb - r0.y;
      mpz_cdiv_q(ylo.get_mpz_t(), num.get_mpz_t(), L.c.get_mpz_t());
      num = yb - r0.y;
      mpz_fdiv_q(yhi.get_mpz_t(), num.get_mpz_t(), L.c.get_mpz_t());
      for (mpz_class y = ylo; y <= yhi; ++y) {
        mpz_class Y = r0.y + y * L.c;
        mpz_class xmid = 0;
        if (F.half) {
          num = -Y;
          mpz_fdiv_q(xmid.get_mpz_t(), num.get_mpz_t(),
                     mpz_class(2).get_mpz_t());
        }
        mpz_class base = r0.x + y * L.b;
        mpz_class xlo, xhi;
        num = xmid - sq - 2 - base;
        mpz_cdiv_q(xlo.get_mpz_t(), num.get_mpz_t(), L.a.get_mpz_t());
        num = xmid + sq + 2 - base;
        mpz_fdiv_q(xhi.get_mpz_t(), num.get_mpz_t(), L.a.get_mpz_t());
        for (mpz_class x = xlo; x <= xhi; ++x) {
          QuadElem pi(F, base + x * L.a, Y);
          mpz_class n = pi.norm();
          if (n <= lo || n > B) continue;
          shell.push_back({std::move(n), std::move(pi)});
        }
      }
      std::sort(shell.begin(), shell.end(),
                [](const Cand& u, const Cand& v) { return u.n < v.n; });
      size_t i = 0;
      while (i < shell.size()) {
        size_t j = i;
        while (j < shell.size() && shell[j].n == shell[i].n) ++j;
        const mpz_class& n = shell[i].n;
        mpz_class p_below;
        bool inert_square = false;
        if (mpz_probab_prime_p(n.get_mpz_t(), 30)) {
          p_below = n;
        } else if (mpz_perfect_square_p(n.get_mpz_t())) {
          p_below = sqrt(n);
          if (!mpz_probab_prime_p(p_below.get_mpz_t(), 30) ||
              splitting_type(F, p_below) != Splitting::inert) {
            i = j;
            continue;
          }
          inert_square = true;
        } else {
          i = j;
          continue;
        }
        std::vector<QfIdeal> above;
        if (!inert_square) above = primes_above(F, p_below);
        const QuadElem* best = nullptr;
        size_t best_rank = 0;
        for (size_t k = i; k < j; ++k) {
          const QuadElem& pi = shell[k].pi;
          if (!acceptable(pi, p_below)) continue;
          size_t ideal_idx = 0;
          QuadElem g(F, p_below);
          if (!inert_square) {
            while (ideal_idx < above.size() && !above[ideal_idx].contains(pi))
              ++ideal_idx;
            if (ideal_idx == above.size())
              throw std::logic_error(
                  "find_principal_prime: class point misses its ideal");
            g = ideal_generator(above[ideal_idx]);
          }
          QuadElem u(F);
          if (!elem_divide(pi, g, u))
            throw std::logic_error(
                "find_principal_prime: candidate is not an associate");
          size_t unit_idx = 0;
          while (unit_idx < us.size() && !(us[unit_idx] == u)) ++unit_idx;
          if (unit_idx == us.size())
            throw std::logic_error(
                "find_principal_prime: associate quotient is not a unit");
          size_t rank = ideal_idx * us.size() + unit_idx;
          if (!best || rank < best_rank) {
            best = &pi;
            best_rank = rank;
          }
        }
        if (best) return *best;
        i = j;
      }
      if (B >= s.norm_budget) break;
      lo = B;
      B *= 16;
      if (B > s.norm_budget) B = s.norm_budget;
    }
  } else {
    for (mpz_class n = 2; n <= s.norm_budget; ++n) {
      std::vector<std::pair<QuadElem, mpz_class>> cands;   // (generator, p below)
      if (mpz_probab_prime_p(n.get_mpz_t(), 30)) {
        if (splitting_type(F, n) != Splitting::inert)
          for (const auto& P : primes_above(F, n))
            cands.emplace_back(ideal_generator(P), n);
      } else if (mpz_perfect_square_p(n.get_mpz_t())) {
        mpz_class p = sqrt(n);
        if (mpz_probab_prime_p(p.get_mpz_t(), 30) &&
            splitting_type(F, p) == Splitting::inert)
          cands.emplace_back(QuadElem(F, p), p);
      }
      for (const auto& [g, p] : cands)
        for (const auto& un : units(F)) {
          QuadElem pi = un * g;
          if (acceptable(pi, p)) return pi;
        }
    }
  }
  std::ostringstream os;
  os << "find_principal_prime: no admissible prime with norm <= " << s.norm_budget;
  throw std::runtime_error(os.str());
}

}  // namespace torhom
