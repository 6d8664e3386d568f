#include "torhom/symbols.hpp"

#include <algorithm>
#include <climits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

namespace torhom {

namespace {

constexpr int kValInf = INT_MAX / 4;   // stand-in for v(0)

int val_or_inf(const QuadElem& e, const QfIdeal& q) {
  return e.is_zero() ? kValInf : valuation(e, q);
}

QuadElem elem_gcd(QuadElem a, QuadElem b) {
  while (!b.is_zero()) {
    QuadElem q = euclid_div(a, b);
    QuadElem r = a - q * b;
    a = b;
    b = r;
  }
  return a;
}

// largest associate in the (x, y) lexicographic order, so that 1 and -1
// normalize to 1; 0 stays 0
QuadElem canonical_associate(const QuadElem& e) {
  if (e.is_zero()) return e;
  QuadElem best = e;
  for (const auto& u : units(*e.F)) {
    QuadElem c = u * e;
    if (c.x > best.x || (c.x == best.x && c.y > best.y)) best = c;
  }
  return best;
}

QuadElem pi_pow(const QuadElem& pi, int k) {
  QuadElem out(*pi.F, 1);
  for (int i = 0; i < k; ++i) out = out * pi;
  return out;
}

QfIdeal whole_ideal(const QuadField& F) {
  return principal_ideal(QuadElem(F, 1));
}

bool is_prime_ideal(const QfIdeal& q) {
  mpz_class n = q.norm();
  if (n <= 1) return false;
  if (mpz_probab_prime_p(n.get_mpz_t(), 30)) return true;
  if (!mpz_perfect_square_p(n.get_mpz_t())) return false;
  mpz_class p = sqrt(n);
  return mpz_probab_prime_p(p.get_mpz_t(), 30) && q.a == p && q.b == 0 &&
         q.c == p && splitting_type(*q.F, p) == Splitting::inert;
}

void require_prime(const QfIdeal& q, const char* who) {
  if (!is_prime_ideal(q))
    throw std::invalid_argument(std::string(who) + ": prime ideal required");
}

mpz_class rational_below(const QfIdeal& prime) {
  mpz_class n = prime.norm();
  if (mpz_perfect_square_p(n.get_mpz_t())) {
    mpz_class p = sqrt(n);
    if (mpz_probab_prime_p(p.get_mpz_t(), 30)) return p;
  }
  return n;
}

std::vector<mpz_class> rational_prime_factors(mpz_class n) {
  std::vector<mpz_class> out;
  for (mpz_class d = 2; d * d <= n; ++d)
    if (n % d == 0) {
      out.push_back(d);
      while (n % d == 0) n /= d;
    }
  if (n > 1) out.push_back(n);
  return out;
}

// same display forms as QuadElem::str(): "x", "y*w", "w", "-w", "x+y*w", "x-y*w"
QuadElem parse_elem(const QuadField& F, const std::string& s) {
  mpz_class x = 0, y = 0;
  size_t wpos = s.find('w');
  if (wpos == std::string::npos) {
    x = mpz_class(s);
  } else {
    size_t split = std::string::npos;
    for (size_t i = 1; i + 1 < s.size(); ++i)
      if ((s[i] == '+' || s[i] == '-') && i < wpos) split = i;
    std::string wpart = s;
    if (split != std::string::npos) {
      x = mpz_class(s.substr(0, split));
      wpart = s.substr(split);
      if (wpart[0] == '+') wpart = wpart.substr(1);
    }
    if (wpart == "w")
      y = 1;
    else if (wpart == "-w")
      y = -1;
    else
      y = mpz_class(wpart.substr(0, wpart.find('*')));
  }
  return QuadElem(F, x, y);
}

// x = r1 mod I1 and x = r2 mod I2 for coprime moduli, reduced mod I1*I2
QuadElem crt2(const QuadElem& r1, const QfIdeal& I1, const QuadElem& r2,
              const QfIdeal& I2) {
  if (I1.is_whole()) return I2.reduce(r2);
  if (I2.is_whole()) return I1.reduce(r1);
  QuadElem g1 = ideal_generator(I1), g2 = ideal_generator(I2);
  QuadElem h1(*r1.F), h2(*r1.F);
  if (!inverse_mod(g2, I1, h1) || !inverse_mod(g1, I2, h2))
    throw std::logic_error("crt2: moduli not coprime");
  QfIdeal I = ideal_mul(I1, I2);
  return I.reduce(r1 * g2 * h1 + r2 * g1 * h2);
}

// first residue of O/I (in the (y, x) scan order of QfIdeal::reduce
// representatives) satisfying pred
template <class Pred>
std::optional<QuadElem> first_residue(const QfIdeal& I, Pred&& pred) {
  for (mpz_class y = 0; y < I.c; ++y)
    for (mpz_class x = 0; x < I.a; ++x) {
      QuadElem r(*I.F, x, y);
      if (pred(r)) return r;
    }
  return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------
// Cusps

std::string P1Point::str() const {
  if (is_infinity()) return "inf";
  if (den == QuadElem(*num.F, 1)) return num.str();
  return num.str() + "/" + den.str();
}

P1Point p1_point(const QuadElem& num, const QuadElem& den) {
  if (num.is_zero() && den.is_zero())
    throw std::invalid_argument("p1_point: (0 : 0) is not a point");
  QuadElem g = elem_gcd(num, den);
  QuadElem n(*num.F), d(*num.F);
  elem_divide(num, g, n);
  elem_divide(den, g, d);
  // pin the unit: make the denominator (or, for infinity, the numerator)
  // the canonical associate
  const QuadElem& anchor = d.is_zero() ? n : d;
  QuadElem target = canonical_associate(anchor);
  for (const auto& u : units(*num.F))
    if (u * anchor == target) return {u * n, u * d};
  throw std::logic_error("p1_point: associate normalization failed");
}

P1Point p1_infinity(const QuadField& F) {
  return {QuadElem(F, 1), QuadElem(F, 0)};
}

P1Point p1_zero(const QuadField& F) {
  return {QuadElem(F, 0), QuadElem(F, 1)};
}

P1Point p1_from_str(const QuadField& F, const std::string& s) {
  if (s == "inf") return p1_infinity(F);
  size_t slash = s.find('/');
  if (slash == std::string::npos)
    return p1_point(parse_elem(F, s), QuadElem(F, 1));
  return p1_point(parse_elem(F, s.substr(0, slash)),
                  parse_elem(F, s.substr(slash + 1)));
}

bool p1_equal(const P1Point& a, const P1Point& b) {
  return (a.num * b.den - b.num * a.den).is_zero();
}

// ---------------------------------------------------------------------------
// Symbols

ModularSymbol make_symbol(const P1Point& alpha, const P1Point& beta,
                          const Mat2& g) {
  if (p1_equal(alpha, beta))
    throw std::invalid_argument("make_symbol: equal endpoints");
  if (mat2_det(g).is_zero())
    throw std::invalid_argument("make_symbol: singular matrix");
  ModularSymbol s;
  s.alpha = alpha;
  s.beta = beta;
  s.g = g;
  return s;
}

ModularSymbol symbol_reversed(const ModularSymbol& s) {
  ModularSymbol r = s;
  std::swap(r.alpha, r.beta);
  r.sign = -s.sign;
  return r;   // the geodesic is unoriented, so the valuation cache carries over
}

std::string symbol_to_json(const ModularSymbol& s) {
  nlohmann::json j;
  j["alpha"] = s.alpha.str();
  j["beta"] = s.beta.str();
  j["g"] = nlohmann::json::array(
      {nlohmann::json::array({s.g[0].str(), s.g[1].str()}),
       nlohmann::json::array({s.g[2].str(), s.g[3].str()})});
  if (s.sign != 1) j["sign"] = s.sign;
  return j.dump(2);
}

ModularSymbol symbol_from_json(const QuadField& F, const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  P1Point alpha = p1_from_str(F, j.at("alpha").get<std::string>());
  P1Point beta = p1_from_str(F, j.at("beta").get<std::string>());
  const auto& jg = j.at("g");
  if (!jg.is_array() || jg.size() != 2 || jg[0].size() != 2 || jg[1].size() != 2)
    throw std::invalid_argument("symbol_from_json: g must be 2x2");
  Mat2 g = {parse_elem(F, jg[0][0].get<std::string>()),
            parse_elem(F, jg[0][1].get<std::string>()),
            parse_elem(F, jg[1][0].get<std::string>()),
            parse_elem(F, jg[1][1].get<std::string>())};
  ModularSymbol s = make_symbol(alpha, beta, g);
  s.sign = j.value("sign", 1);
  if (s.sign != 1 && s.sign != -1)
    throw std::invalid_argument("symbol_from_json: sign must be +-1");
  return s;
}

// ---------------------------------------------------------------------------
// Tree valuations

namespace {

// Distance in the tree at q between the vertex [h O_q^2] and the geodesic
// joining alpha and beta.  With m the column matrix of the two cusps and
// A = adj(h) m, the vertex at apartment position t of the geodesic differs
// from [h] by A diag(pi^t, 1) (the scalar det(h) drops out with the
// homothety), whose elementary-divisor spread is
//
//     v(det A) + t - 2 min(c1 + t, c2)
//
// with c1, c2 the minimal entry valuations of the two columns of A.  This is
// convex piecewise linear in t with slopes -1 and +1, so walking from t = 0
// until the value rises on both sides finds the minimum over the apartment.
int geodesic_distance(const P1Point& alpha, const P1Point& beta, const Mat2& h,
                      const QfIdeal& q) {
  Mat2 adj = {h[3], -h[1], -h[2], h[0]};
  Mat2 m = {alpha.num, beta.num, alpha.den, beta.den};
  Mat2 A = mat2_mul(adj, m);
  long D = valuation(mat2_det(A), q);
  long c1 = std::min(val_or_inf(A[0], q), val_or_inf(A[2], q));
  long c2 = std::min(val_or_inf(A[1], q), val_or_inf(A[3], q));
  auto dist = [&](long t) { return D + t - 2 * std::min(c1 + t, c2); };
  long t = 0, cur = dist(0);
  while (dist(t - 1) < cur) cur = dist(--t);
  while (dist(t + 1) < cur) cur = dist(++t);
  return static_cast<int>(cur);
}

}  // namespace

int tree_valuation(ModularSymbol& s, const QfIdeal& v) {
  require_prime(v, "tree_valuation");
  auto it = s.n_cache.find(v);
  if (it != s.n_cache.end()) return it->second;
  int n = geodesic_distance(s.alpha, s.beta, s.g, v);
  s.n_cache.emplace(v, n);
  return n;
}

// ---------------------------------------------------------------------------
// Conductor

ConductorData conductor(ModularSymbol& s, int margin) {
  if (margin < 0) throw std::invalid_argument("conductor: negative margin");
  const QuadField& F = *s.g[0].F;
  // n_v > 0 forces v(det(g) det(m)) > 0: the spread at position t is
  // v(det A) + t - 2 min(c1 + t, c2) with c1, c2 >= 0 for integral data, and
  // det A = det(g) det(m).  Factoring that one product is the whole
  // candidate set.
  QuadElem det_m = s.alpha.num * s.beta.den - s.beta.num * s.alpha.den;
  QuadElem prod = mat2_det(s.g) * det_m;

  ConductorData out;
  out.f = whole_ideal(F);
  for (const auto& [q, e] : ideal_factor(principal_ideal(prod))) {
    (void)e;
    int n = tree_valuation(s, q);
    if (n >= 1) out.support.emplace_back(q, n);
  }
  std::sort(out.support.begin(), out.support.end(),
            [](const auto& a, const auto& b) {
              if (a.first.norm() != b.first.norm())
                return a.first.norm() < b.first.norm();
              return a.first < b.first;
            });
  for (const auto& [q, n] : out.support) out.f = ideal_mul(out.f, ideal_pow(q, n));
  out.denominator = euler_phi(out.f);

  // guard the candidate enumeration: the next few primes by norm must all
  // sit at valuation zero
  std::vector<std::pair<QfIdeal, int>> seen(out.support);
  int checked = 0;
  for (mpz_class n = 2; checked < margin; ++n) {
    std::vector<QfIdeal> here;
    if (mpz_probab_prime_p(n.get_mpz_t(), 30)) {
      if (splitting_type(F, n) != Splitting::inert)
        for (const auto& q : primes_above(F, n)) here.push_back(q);
    } else if (mpz_perfect_square_p(n.get_mpz_t())) {
      mpz_class p = sqrt(n);
      if (mpz_probab_prime_p(p.get_mpz_t(), 30) &&
          splitting_type(F, p) == Splitting::inert)
        here.push_back(principal_ideal(QuadElem(F, p)));
    }
    for (const auto& q : here) {
      if (checked >= margin) break;
      if (!ideal_add(principal_ideal(prod), q).is_whole())
        continue;   // a real candidate, handled above
      ++checked;
      if (tree_valuation(s, q) != 0)
        throw std::logic_error("conductor: prime " + ideal_label(q) +
                               " escaped the candidate set");
    }
  }
  return out;
}

std::string conductor_to_json(const ConductorData& c) {
  nlohmann::json j;
  j["conductor"] = ideal_label(c.f);
  j["norm"] = c.f.norm().get_str();
  j["denominator"] = c.denominator.get_str();
  j["support"] = nlohmann::json::array();
  for (const auto& [q, n] : c.support)
    j["support"].push_back({{"prime", ideal_label(q)}, {"n", n}});
  return j.dump(2);
}

mpz_class character_order_bound(const ConductorData& c, const QfIdeal& n) {
  return c.denominator * n.norm() * euler_phi(n);   // h_F = 1 throughout
}

// ---------------------------------------------------------------------------
// Refined valuation

int refined_valuation(ModularSymbol& s, const QfIdeal& v,
                      const TreeSegment& seg) {
  require_prime(v, "refined_valuation");
  if (v.contains(seg.u) && v.contains(seg.w))
    throw std::invalid_argument(
        "refined_valuation: segment direction must be primitive mod v");
  P1Point dir = p1_point(seg.u, seg.w);   // clears global common factors
  // complete (u, w) to a basis and scale the second vector by pi: the columns
  // span the index-q neighbour of the standard vertex in direction (u : w)
  QuadElem pi = ideal_generator(v);
  QuadElem g0 = elem_gcd(dir.num, dir.den);   // a unit
  QuadElem x(*seg.u.F), y(*seg.u.F);
  // extended euclid for x*num + y*den = g0
  {
    QuadElem a = dir.num, b = dir.den;
    QuadElem x0(*seg.u.F, 1), x1(*seg.u.F, 0);
    QuadElem y0(*seg.u.F, 0), y1(*seg.u.F, 1);
    while (!b.is_zero()) {
      QuadElem q = euclid_div(a, b);
      QuadElem r = a - q * b;
      a = b; b = r;
      QuadElem xt = x0 - q * x1, yt = y0 - q * y1;
      x0 = x1; x1 = xt;
      y0 = y1; y1 = yt;
    }
    x = x0; y = y0;
    if (a != g0) throw std::logic_error("refined_valuation: xgcd mismatch");
  }
  Mat2 B = {dir.num, -pi * y, dir.den, pi * x};   // det = pi * unit
  int d1 = tree_valuation(s, v);
  int d2 = geodesic_distance(s.alpha, s.beta, mat2_mul(s.g, B), v);
  return std::max(d1, d2);
}

// ---------------------------------------------------------------------------
// Continued-fraction decomposition

namespace {

Mat2 swap_cols(const Mat2& m) { return {m[1], m[0], m[3], m[2]}; }

P1Point seg_start(const Mat2& m) { return p1_point(m[1], m[3]); }   // g.0
P1Point seg_end(const Mat2& m) { return p1_point(m[0], m[2]); }     // g.inf

bool segments_inverse(const Mat2& a, const Mat2& b) {
  return p1_equal(seg_end(a), seg_start(b)) &&
         p1_equal(seg_start(a), seg_end(b));
}

// segments <c_{k-1}, c_k> along the convergents of num/den, starting from
// c_{-1} = infinity; each matrix [[h_k, h_{k-1}], [l_k, l_{k-1}]] has
// determinant +-1 by the convergent recurrence
std::vector<Mat2> chain_from_infinity(const P1Point& x) {
  const QuadField& F = *x.num.F;
  QuadElem P = x.num, Q = x.den;
  QuadElem h1(F, 1), h2(F, 0), l1(F, 0), l2(F, 1);
  std::vector<Mat2> out;
  while (!Q.is_zero()) {
    QuadElem a = euclid_div(P, Q);
    QuadElem h = a * h1 + h2, l = a * l1 + l2;
    out.push_back({h, h1, l, l1});
    h2 = h1; h1 = h;
    l2 = l1; l1 = l;
    QuadElem r = P - a * Q;
    P = Q;
    Q = r;
  }
  return out;
}

}  // namespace

std::vector<Mat2> manin_decompose(const P1Point& alpha0, const P1Point& beta0) {
  P1Point alpha = p1_point(alpha0.num, alpha0.den);
  P1Point beta = p1_point(beta0.num, beta0.den);
  std::vector<Mat2> chain;
  if (p1_equal(alpha, beta)) return chain;
  if (!alpha.is_infinity()) {
    auto up = chain_from_infinity(alpha);
    for (auto it = up.rbegin(); it != up.rend(); ++it)
      chain.push_back(swap_cols(*it));
  }
  if (!beta.is_infinity())
    for (const auto& m : chain_from_infinity(beta)) {
      if (!chain.empty() && segments_inverse(chain.back(), m))
        chain.pop_back();   // the two walks double back at infinity
      else
        chain.push_back(m);
    }
  return chain;
}

// ---------------------------------------------------------------------------
// Denominator-avoiding splitting

namespace {

// Vertex of g at q in apartment-and-disc form.  Column reduction over O_q
// (with precision well past the determinant valuation) brings g to
// [[A, B], [~0, D]]; the vertex is then at level t = v(A) - v(D) over the
// end u = B/D.  When u = 0 mod pi^t the vertex sits on the (0, inf)
// apartment and the disc is pi^t (1 + pi O_q) toward the first transverse
// direction; otherwise the disc under the child straight below is
// pi^{n} beta (1 + pi^{m} O_q) with n = v(u) and m = t - n + 1, one deeper
// than the climb back to the apartment.
SplitResult::LocalDisc local_disc(const Mat2& g, const QfIdeal& q) {
  const QuadField& F = *g[0].F;
  QuadElem pi = ideal_generator(q);
  int vdet = valuation(mat2_det(g), q);
  int prec = vdet + 4;
  QfIdeal qN = ideal_pow(q, prec);
  Mat2 h = g;
  if (val_or_inf(h[2], q) < val_or_inf(h[3], q)) {
    std::swap(h[0], h[1]);
    std::swap(h[2], h[3]);
  }
  if (!h[2].is_zero()) {
    int b = valuation(h[3], q);
    QuadElem w(F), t(F), winv(F);
    elem_divide(h[3], pi_pow(pi, b), w);
    elem_divide(h[2], pi_pow(pi, b), t);
    if (!inverse_mod(w, qN, winv))
      throw std::logic_error("local_disc: pivot not a unit");
    QuadElem r = qN.reduce(t * winv);
    h[0] = h[0] - r * h[1];
    h[2] = h[2] - r * h[3];   // valuation beyond prec now
  }
  int vD = valuation(h[3], q);
  int level = vdet - 2 * vD;   // v(h[0]) = vdet - vD after reduction
  int vB = val_or_inf(h[1], q);

  SplitResult::LocalDisc out;
  out.prime = q;
  if (vB - vD >= level) {
    out.n_v = level;          // on the apartment, one step sideways
    out.m_v = 1;
    out.beta_v = QuadElem(F, 1);
  } else {
    out.n_v = vB - vD;
    out.m_v = level - out.n_v + 1;
    QfIdeal I = ideal_pow(q, out.m_v);
    QuadElem Bu(F), Du(F), dinv(F);
    elem_divide(h[1], pi_pow(pi, vB), Bu);
    elem_divide(h[3], pi_pow(pi, vD), Du);
    if (!inverse_mod(Du, I, dinv))
      throw std::logic_error("local_disc: unit part inversion failed");
    out.beta_v = I.reduce(Bu * dinv);
  }
  return out;
}

int p_valuation(mpz_class n, const mpz_class& p) {
  int v = 0;
  while (n != 0 && n % p == 0) {
    n /= p;
    ++v;
  }
  return v;
}

}  // namespace

SplitResult split(ModularSymbol& s, const mpz_class& M, const mpz_class& p,
                  const mpz_class& budget) {
  const QuadField& F = *s.g[0].F;
  if (M < 1) throw std::invalid_argument("split: modulus M must be positive");
  if (budget < 2) throw std::invalid_argument("split: search budget too small");
  if (p < 2 || !mpz_probab_prime_p(p.get_mpz_t(), 30))
    throw std::invalid_argument("split: p must be a rational prime");
  if (!p1_equal(s.alpha, p1_zero(F)) || !p1_equal(s.beta, p1_infinity(F)))
    throw std::invalid_argument("split: symbol must be in (0, infinity) form");

  const int Ap = (p <= 5) ? 3 : 1;
  mpz_class pA;
  mpz_pow_ui(pA.get_mpz_t(), p.get_mpz_t(), static_cast<unsigned long>(Ap));

  SplitResult out;
  out.n0 = out.a1_ideal = out.a2_ideal = whole_ideal(F);
  out.a1_prime = out.a2_prime = out.b1_prime = out.b2_prime = whole_ideal(F);
  out.a1 = out.a2 = QuadElem(F, 1);

  // bad places: primes where the vertex of g leaves the standard one
  QuadElem det = mat2_det(s.g);
  std::vector<QfIdeal> bad;
  for (const auto& [q, e] : ideal_factor(principal_ideal(det))) {
    (void)e;
    int low = std::min(std::min(val_or_inf(s.g[0], q), val_or_inf(s.g[1], q)),
                       std::min(val_or_inf(s.g[2], q), val_or_inf(s.g[3], q)));
    if (valuation(det, q) - 2 * low > 0) bad.push_back(q);
  }
  std::sort(bad.begin(), bad.end(), [](const QfIdeal& a, const QfIdeal& b) {
    if (a.norm() != b.norm()) return a.norm() < b.norm();
    return a < b;
  });

  for (const QfIdeal& q : bad) {
    SplitResult::LocalDisc disc = local_disc(s.g, q);
    // the climb back to the apartment must agree with the tree valuation
    if (tree_valuation(s, q) != disc.m_v - 1)
      throw std::logic_error("split: vertex form disagrees with valuation at " +
                             ideal_label(q));
    out.n0 = ideal_mul(out.n0, ideal_pow(q, disc.m_v));
    if (disc.n_v > 0)
      out.a1_ideal = ideal_mul(out.a1_ideal, ideal_pow(q, disc.n_v));
    if (disc.n_v < 0)
      out.a2_ideal = ideal_mul(out.a2_ideal, ideal_pow(q, -disc.n_v));
    out.local_data.push_back(disc);
  }

  // auxiliary primes stay clear of p, M and the bad places, with norm
  // away from 1 mod p^{Ap} so their unit groups contribute no p-part
  std::vector<mpz_class> avoid = {p};
  for (const auto& f : rational_prime_factors(M)) avoid.push_back(f);
  for (const auto& q : bad) avoid.push_back(rational_below(q));

  auto good_prime = [&](const std::optional<QuadElem>& residue,
                        const std::optional<QfIdeal>& modulus,
                        const char* stage) -> QuadElem {
    PrimeSearch ps;
    ps.residue = residue;
    ps.modulus = modulus;
    ps.norm_mod = pA;
    ps.forbidden_norm_residues = {1};
    ps.avoid_rational = avoid;
    ps.norm_budget = budget;
    try {
      QuadElem pi = find_principal_prime(F, ps);
      avoid.push_back(rational_below(principal_ideal(pi)));
      return pi;
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("split: prime search for " + std::string(stage) +
                               " exhausted: " + e.what());
    }
  };

  if (!bad.empty()) {
    QuadElem pi1 = good_prime(std::nullopt, std::nullopt, "a1'");
    QuadElem pi2 = good_prime(std::nullopt, std::nullopt, "a2'");
    out.a1_prime = principal_ideal(pi1);
    out.a2_prime = principal_ideal(pi2);
    out.a1 = ideal_generator(out.a1_ideal) * pi1;
    out.a2 = ideal_generator(out.a2_ideal) * pi2;
  }

  // lambda = class of (a2 / a1) pi^{n_v} beta_v mod q^{m_v}, glued over the
  // bad places: the unit b1/b2 has to hit mod n0 to steer x into the discs
  QuadElem lambda(F, 1);
  QfIdeal lambda_mod = whole_ideal(F);
  for (const auto& disc : out.local_data) {
    QuadElem pi = ideal_generator(disc.prime);
    int npos = std::max(disc.n_v, 0), nneg = std::max(-disc.n_v, 0);
    QuadElem num = out.a2 * disc.beta_v * pi_pow(pi, npos);
    QuadElem den = out.a1 * pi_pow(pi, nneg);
    QuadElem num2(F), den2(F), dinv(F);
    if (!elem_divide(num, pi_pow(pi, npos + nneg), num2) ||
        !elem_divide(den, pi_pow(pi, npos + nneg), den2))
      throw std::logic_error("split: unit part of lambda not integral");
    QfIdeal I = ideal_pow(disc.prime, disc.m_v);
    if (!inverse_mod(den2, I, dinv))
      throw std::logic_error("split: lambda denominator not a unit");
    lambda = crt2(lambda, lambda_mod, I.reduce(num2 * dinv), I);
    lambda_mod = ideal_mul(lambda_mod, I);
  }

  // split n0 into its prime-to-p and p-parts; the latter couples the unit
  // congruence to the norm condition and needs the residue classes chosen
  // together mod p^{Ap} n2
  QfIdeal n1 = whole_ideal(F), n2 = whole_ideal(F);
  for (const auto& disc : out.local_data) {
    QfIdeal piece = ideal_pow(disc.prime, disc.m_v);
    if (disc.prime.norm() % p == 0)
      n2 = ideal_mul(n2, piece);
    else
      n1 = ideal_mul(n1, piece);
  }
  QfIdeal PA = principal_ideal(QuadElem(F, pA));
  QfIdeal pn2 = ideal_mul(PA, n2);

  auto norm_away = [&](const QuadElem& r) {
    return coprime_to(r, pn2) && (r.norm() % pA) != 1;
  };
  auto bbar2 = first_residue(pn2, norm_away);
  if (!bbar2)
    throw std::runtime_error("split: no residue class mod " + ideal_label(pn2) +
                             " with norm away from 1");
  std::optional<QuadElem> bbar1;
  if (n2.is_whole()) {
    bbar1 = bbar2;   // nothing couples the two halves away from p
  } else {
    QuadElem base = pn2.reduce(lambda * *bbar2);
    QuadElem g2 = ideal_generator(n2);
    for (mpz_class ty = 0; ty < PA.c && !bbar1; ++ty)
      for (mpz_class tx = 0; tx < PA.a && !bbar1; ++tx) {
        QuadElem r = pn2.reduce(base + g2 * QuadElem(F, tx, ty));
        if (norm_away(r)) bbar1 = r;
      }
    if (!bbar1)
      throw std::runtime_error(
          "split: no compatible residue class for b1 mod " + ideal_label(pn2));
  }

  QfIdeal bmod = ideal_mul(n1, pn2);
  QuadElem r1 = crt2(lambda, n1, *bbar1, pn2);
  QuadElem r2 = crt2(QuadElem(F, 1), n1, *bbar2, pn2);
  out.b1 = good_prime(r1, bmod, "b1");
  out.b2 = good_prime(r2, bmod, "b2");
  out.b1_prime = principal_ideal(out.b1);
  out.b2_prime = principal_ideal(out.b2);

  out.x = p1_point(out.a1 * out.b1, out.a2 * out.b2);

  // x must sit in every local disc: valuation n_v with unit part beta_v
  for (const auto& disc : out.local_data) {
    QuadElem pi = ideal_generator(disc.prime);
    int npos = std::max(disc.n_v, 0), nneg = std::max(-disc.n_v, 0);
    QuadElem num = out.a1 * out.b1, den = out.a2 * out.b2;
    if (valuation(num, disc.prime) != npos ||
        valuation(den, disc.prime) != nneg)
      throw std::logic_error("split: x has the wrong valuation at " +
                             ideal_label(disc.prime));
    QfIdeal I = ideal_pow(disc.prime, disc.m_v);
    QuadElem num2(F), den2(F), dinv(F);
    elem_divide(num, pi_pow(pi, npos), num2);
    elem_divide(den, pi_pow(pi, nneg), den2);
    if (!inverse_mod(den2, I, dinv))
      throw std::logic_error("split: x unit part not invertible");
    if (!I.reduce(num2 * dinv - disc.beta_v).is_zero())
      throw std::logic_error("split: x missed the disc at " +
                             ideal_label(disc.prime));
  }

  out.left = make_symbol(p1_zero(F), out.x, s.g);
  out.right = make_symbol(out.x, p1_infinity(F), s.g);
  out.left_conductor = conductor(out.left);
  out.right_conductor = conductor(out.right);

  // the contract: both halves coprime to M p, denominators nearly prime to p
  QfIdeal Mp = principal_ideal(QuadElem(F, M * p));
  for (const ConductorData* c : {&out.left_conductor, &out.right_conductor}) {
    if (!ideal_add(c->f, Mp).is_whole())
      throw std::logic_error("split: half conductor " + ideal_label(c->f) +
                             " shares a factor with M p");
    if (p_valuation(c->denominator, p) > 2 * (Ap - 1))
      throw std::logic_error("split: denominator " + c->denominator.get_str() +
                             " too divisible by " + p.get_str());
  }
  return out;
}

}  // namespace torhom
