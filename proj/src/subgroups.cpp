#include "torhom/subgroups.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <deque>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace torhom {

// ---------------------------------------------------------------------------
// Words

Word word_inverse(const Word& w) {
  Word out(w.rbegin(), w.rend());
  for (auto& l : out) l = -l;
  return out;
}

Word word_reduce(const Word& w) {
  Word out;
  for (int l : w) {
    if (l == 0) throw std::invalid_argument("word_reduce: zero letter");
    if (!out.empty() && out.back() == -l)
      out.pop_back();
    else
      out.push_back(l);
  }
  return out;
}

Word word_concat(const Word& a, const Word& b) {
  Word out = a;
  out.insert(out.end(), b.begin(), b.end());
  return word_reduce(out);
}

Word parse_word(const std::string& text, const std::vector<std::string>& gens) {
  Word w;
  for (char ch : text) {
    bool inv = std::isupper((unsigned char)ch) != 0;
    std::string name(1, (char)std::tolower((unsigned char)ch));
    auto it = std::find(gens.begin(), gens.end(), name);
    if (it == gens.end())
      throw std::invalid_argument("parse_word: unknown generator '" + name + "'");
    int g = (int)(it - gens.begin()) + 1;
    w.push_back(inv ? -g : g);
  }
  return w;
}

std::string word_str(const Word& w, const std::vector<std::string>& gens) {
  std::string s;
  for (int l : w) {
    int g = std::abs(l) - 1;
    if (g < 0 || g >= (int)gens.size())
      throw std::invalid_argument("word_str: letter out of range");
    char ch = gens[g][0];
    s += (l > 0) ? ch : (char)std::toupper((unsigned char)ch);
  }
  return s;
}

int Presentation::gen_index(const std::string& name) const {
  auto it = std::find(gens.begin(), gens.end(), name);
  return it == gens.end() ? -1 : (int)(it - gens.begin());
}

Mat2 mat2_inv(const Mat2& m) {
  QuadElem det = mat2_det(m);
  if (det.norm() != 1)
    throw std::invalid_argument("mat2_inv: determinant is not a unit");
  QuadElem di = det.conj();                  // inverse of a unit
  return {di * m[3], di * -m[1], di * -m[2], di * m[0]};
}

Mat2 Presentation::word_matrix(const Word& w) const {
  if (mats.empty())
    throw std::logic_error("word_matrix: abstract presentation has no matrices");
  Mat2 m = mat2_id(*F);
  for (int l : w) {
    int g = std::abs(l) - 1;
    if (g >= (int)mats.size()) throw std::invalid_argument("word_matrix: bad letter");
    m = mat2_mul(m, l > 0 ? mats[g] : mat2_inv(mats[g]));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Embedded Bianchi presentations

namespace {

// Does the matrix equal a scalar one, and which scalars are tolerable for the
// group kind: identity only (sl2), +-identity (psl2), any unit (pgl2).
bool relator_ok(const Mat2& m, const std::string& kind) {
  if (!m[1].is_zero() || !m[2].is_zero() || m[0] != m[3]) return false;
  if (kind == "sl2") return m[0] == QuadElem(*m[0].F, 1);
  if (kind == "psl2")
    return m[0] == QuadElem(*m[0].F, 1) || m[0] == QuadElem(*m[0].F, -1);
  return m[0].norm() == 1;                   // pgl2: any unit scalar
}

Presentation psl2_presentation(int d) {
  const QuadField& F = QuadField::get(d);
  Presentation p;
  p.F = &F;
  p.d = d;
  p.kind = "psl2";
  QuadElem zero(F, 0), one(F, 1), mone(F, -1), w(F, 0, 1);
  Mat2 A = {zero, mone, one, zero};
  Mat2 T = {one, one, zero, one};
  Mat2 U = {one, w, zero, one};
  auto rel = [&p](const std::string& s) { p.relators.push_back(parse_word(s, p.gens)); };
  switch (d) {
    case 1: {
      p.gens = {"a", "l", "t", "u"};
      p.mats = {A, {w, zero, zero, -w}, T, U};             // l = diag(i, -i)
      rel("aa");
      rel("ll");
      rel("alal");
      rel("tltl");
      rel("ulul");
      rel("atatat");
      rel("ualualual");
      rel("tuTU");
      p.parabolic = {parse_word("t", p.gens), parse_word("u", p.gens),
                     parse_word("l", p.gens)};
      break;
    }
    case 2: {
      p.gens = {"a", "t", "u"};
      p.mats = {A, T, U};
      rel("aa");
      rel("atatat");
      rel("aUauaUau");
      rel("tuTU");
      p.parabolic = {parse_word("t", p.gens), parse_word("u", p.gens)};
      break;
    }
    case 3: {
      p.gens = {"a", "l", "t", "u"};
      p.mats = {A, {one - w, zero, zero, w}, T, U};        // l = diag(conj w, w)
      rel("aa");
      rel("lll");
      rel("alal");
      rel("atatat");
      rel("ualualual");
      rel("tuTU");
      rel("ltLu");                                         // l t l^-1 = u^-1
      rel("luLuT");                                        // l u l^-1 = t u^-1
      p.parabolic = {parse_word("t", p.gens), parse_word("u", p.gens),
                     parse_word("l", p.gens)};
      break;
    }
    case 7: {
      p.gens = {"a", "t", "u"};
      p.mats = {A, T, U};
      rel("aa");
      rel("atatat");
      rel("atUauatUau");
      rel("tuTU");
      p.parabolic = {parse_word("t", p.gens), parse_word("u", p.gens)};
      break;
    }
    case 11: {
      p.gens = {"a", "t", "u"};
      p.mats = {A, T, U};
      rel("aa");
      rel("atatat");
      rel("atUauatUauatUau");
      rel("tuTU");
      p.parabolic = {parse_word("t", p.gens), parse_word("u", p.gens)};
      break;
    }
    default:
      throw std::invalid_argument("bianchi_presentation: unsupported d");
  }
  return p;
}

Presentation sl2_presentation(int d) {
  Presentation p = psl2_presentation(d);
  p.kind = "sl2";
  const QuadField& F = *p.F;
  int nz = (int)p.gens.size() + 1;           // letter index of z
  QuadElem mone(F, -1), zero(F, 0);
  // Lift each projective relator to an honest one: multiply by z when the
  // matrix product works out to -I.
  std::vector<Word> lifted;
  for (const auto& r : p.relators) {
    Mat2 m = p.word_matrix(r);
    Word w = r;
    if (m[0] == mone) w.push_back(nz);
    lifted.push_back(word_reduce(w));
  }
  p.relators = std::move(lifted);
  p.gens.push_back("z");
  p.mats.push_back({mone, zero, zero, mone});
  p.relators.push_back(Word{nz, nz});
  for (int g = 1; g < nz; ++g)
    p.relators.push_back(word_reduce(Word{g, nz, -g, -nz}));
  p.parabolic.push_back(Word{nz});
  return p;
}

Presentation pgl2_presentation(int d) {
  if (d != 1 && d != 3)
    throw std::invalid_argument("bianchi_presentation: pgl2 needs d in {1,3}");
  Presentation p = psl2_presentation(d);
  p.kind = "pgl2";
  const QuadField& F = *p.F;
  QuadElem zero(F, 0), one(F, 1), w(F, 0, 1);
  int nm = (int)p.gens.size() + 1;           // letter index of m
  p.gens.push_back("m");
  p.mats.push_back({w, zero, zero, one});    // m = diag(w, 1)
  auto conj_rel = [&](const std::string& gen, const std::string& image) {
    // relator m g m^-1 (image)^-1
    Word r = Word{nm};
    r = word_concat(r, parse_word(gen, p.gens));
    r.push_back(-nm);
    r = word_concat(r, word_inverse(parse_word(image, p.gens)));
    p.relators.push_back(word_reduce(r));
  };
  if (d == 1) {
    p.relators.push_back(word_concat(Word{nm, nm}, parse_word("L", p.gens)));  // m^2 = l
    conj_rel("t", "u");
    conj_rel("u", "T");
    conj_rel("a", "al");
    conj_rel("l", "l");
  } else {
    p.relators.push_back(word_concat(Word{nm, nm}, parse_word("l", p.gens)));  // m^2 = l^-1
    conj_rel("t", "u");
    conj_rel("u", "Tu");
    conj_rel("a", "al");
    conj_rel("l", "l");
  }
  p.parabolic.push_back(Word{nm});
  return p;
}

}  // namespace

Presentation bianchi_presentation(int d, const std::string& kind) {
  Presentation p;
  if (kind == "psl2")
    p = psl2_presentation(d);
  else if (kind == "sl2")
    p = sl2_presentation(d);
  else if (kind == "pgl2")
    p = pgl2_presentation(d);
  else
    throw std::invalid_argument("bianchi_presentation: kind must be psl2, sl2 or pgl2");
  // every relator's matrix image must be the right kind of scalar
  for (const auto& r : p.relators)
    if (!relator_ok(p.word_matrix(r), p.kind))
      throw std::logic_error("bianchi_presentation: relator fails matrix check");
  // parabolic words must stabilize infinity (upper triangular images)
  for (const auto& w : p.parabolic)
    if (!p.word_matrix(w)[2].is_zero())
      throw std::logic_error("bianchi_presentation: parabolic word not upper triangular");
  return p;
}

// ---------------------------------------------------------------------------
// Coset actions

void CosetAction::finalize() {
  if ((int)perms.size() != (int)gen_names.size())
    throw std::invalid_argument("CosetAction: one permutation per generator required");
  inv_perms.assign(perms.size(), std::vector<int>(degree, -1));
  for (size_t g = 0; g < perms.size(); ++g) {
    if ((int)perms[g].size() != degree)
      throw std::invalid_argument("CosetAction: permutation length mismatch");
    for (int i = 0; i < degree; ++i) {
      int j = perms[g][i];
      if (j < 0 || j >= degree || inv_perms[g][j] != -1)
        throw std::invalid_argument("CosetAction: not a bijection");
      inv_perms[g][j] = i;
    }
  }
  if (base < 0 || base >= degree)
    throw std::invalid_argument("CosetAction: base point out of range");
}

int CosetAction::apply(int coset, int letter) const {
  int g = std::abs(letter) - 1;
  if (g < 0 || g >= (int)perms.size())
    throw std::invalid_argument("CosetAction::apply: unknown generator");
  return letter > 0 ? perms[g][coset] : inv_perms[g][coset];
}

int CosetAction::apply_word(int coset, const Word& w) const {
  for (int l : w) coset = apply(coset, l);
  return coset;
}

bool CosetAction::transitive() const {
  std::vector<char> seen(degree, 0);
  std::deque<int> bfs = {base};
  seen[base] = 1;
  int n = 1;
  while (!bfs.empty()) {
    int i = bfs.front();
    bfs.pop_front();
    for (size_t g = 0; g < perms.size(); ++g)
      for (int j : {perms[g][i], inv_perms[g][i]})
        if (!seen[j]) {
          seen[j] = 1;
          ++n;
          bfs.push_back(j);
        }
  }
  return n == degree;
}

CosetAction gamma0_action(const Presentation& pres, const QfIdeal& level) {
  if (pres.mats.empty())
    throw std::invalid_argument("gamma0_action: presentation has no matrix images");
  P1Space p1(*pres.F, level);
  const long n = p1.size();
  // renumber so the identity coset (0:1) sits at index 0
  std::vector<int> newidx(n);
  for (long i = 0; i < n; ++i)
    newidx[i] = (i == p1.base()) ? 0 : (int)(i < p1.base() ? i + 1 : i);
  CosetAction act;
  act.degree = (int)n;
  act.base = 0;
  act.gen_names = pres.gens;
  act.perms.assign(pres.mats.size(), std::vector<int>(n, 0));
  for (size_t g = 0; g < pres.mats.size(); ++g)
    for (long i = 0; i < n; ++i)
      act.perms[g][newidx[i]] = newidx[p1.act(i, pres.mats[g])];
  act.finalize();
  return act;
}

std::string coset_action_to_json(const CosetAction& a) {
  nlohmann::json j;
  j["degree"] = a.degree;
  j["base"] = a.base + 1;
  nlohmann::json perms = nlohmann::json::object();
  for (size_t g = 0; g < a.gen_names.size(); ++g) {
    std::vector<int> img(a.degree);
    for (int i = 0; i < a.degree; ++i) img[i] = a.perms[g][i] + 1;
    perms[a.gen_names[g]] = img;
  }
  j["perms"] = perms;
  return j.dump(2);
}

CosetAction coset_action_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  CosetAction a;
  a.degree = j.at("degree").get<int>();
  a.base = j.at("base").get<int>() - 1;
  for (const auto& [name, img] : j.at("perms").items()) {
    a.gen_names.push_back(name);
    std::vector<int> p = img.get<std::vector<int>>();
    for (auto& v : p) v -= 1;
    a.perms.push_back(std::move(p));
  }
  a.finalize();
  return a;
}

std::string presentation_to_json(const Presentation& p) {
  nlohmann::json j;
  j["generators"] = p.gens;
  std::vector<std::string> rels, para;
  for (const auto& r : p.relators) rels.push_back(word_str(r, p.gens));
  for (const auto& w : p.parabolic) para.push_back(word_str(w, p.gens));
  j["relators"] = rels;
  j["parabolic"] = para;
  if (!p.kind.empty()) j["kind"] = p.kind;
  if (p.d) j["d"] = p.d;
  if (!p.mats.empty()) {
    nlohmann::json ms = nlohmann::json::object();
    for (size_t g = 0; g < p.mats.size(); ++g) {
      std::vector<std::string> entries;
      for (const auto& e : p.mats[g]) entries.push_back(e.str());
      ms[p.gens[g]] = entries;
    }
    j["matrices"] = ms;
  }
  return j.dump(2);
}

namespace {

QuadElem parse_elem(const QuadField& F, const std::string& s) {
  // forms emitted by QuadElem::str(): "x", "y*w", "w", "-w", "x+y*w", "x-y*w"
  mpz_class x = 0, y = 0;
  std::string t = s;
  size_t wpos = t.find('w');
  if (wpos == std::string::npos) {
    x = mpz_class(t);
  } else {
    // split off the w-part: find the +/- that separates, if any
    size_t split = std::string::npos;
    for (size_t i = 1; i + 1 < t.size(); ++i)
      if ((t[i] == '+' || t[i] == '-') && i < wpos && t.find('w', 0) > i) split = i;
    std::string wpart = t;
    if (split != std::string::npos) {
      x = mpz_class(t.substr(0, split));
      wpart = t.substr(split);
      if (wpart[0] == '+') wpart = wpart.substr(1);
    }
    // wpart is now "w", "-w", "k*w"
    if (wpart == "w")
      y = 1;
    else if (wpart == "-w")
      y = -1;
    else
      y = mpz_class(wpart.substr(0, wpart.find('*')));
  }
  return QuadElem(F, x, y);
}

}  // namespace

Presentation presentation_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Presentation p;
  p.gens = j.at("generators").get<std::vector<std::string>>();
  for (const auto& r : j.at("relators"))
    p.relators.push_back(parse_word(r.get<std::string>(), p.gens));
  if (j.contains("parabolic"))
    for (const auto& w : j.at("parabolic"))
      p.parabolic.push_back(parse_word(w.get<std::string>(), p.gens));
  if (j.contains("kind")) p.kind = j.at("kind").get<std::string>();
  if (j.contains("d")) p.d = j.at("d").get<int>();
  if (j.contains("matrices")) {
    if (!p.d) throw std::invalid_argument("presentation_from_json: matrices need d");
    p.F = &QuadField::get(p.d);
    for (const auto& g : p.gens) {
      auto entries = j.at("matrices").at(g).get<std::vector<std::string>>();
      if (entries.size() != 4)
        throw std::invalid_argument("presentation_from_json: matrix needs 4 entries");
      p.mats.push_back({parse_elem(*p.F, entries[0]), parse_elem(*p.F, entries[1]),
                        parse_elem(*p.F, entries[2]), parse_elem(*p.F, entries[3])});
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Schreier machinery

SchreierData schreier(const CosetAction& act) {
  if (!act.transitive()) throw std::invalid_argument("schreier: action not transitive");
  const int n = act.degree;
  const int k = (int)act.perms.size();
  SchreierData s;
  s.degree = n;
  s.tree_parent.assign(n, -2);
  s.tree_letter.assign(n, 0);
  s.coset_rep.assign(n, Word{});
  s.tree_parent[act.base] = -1;
  // alphabet order: generators first, then inverses
  std::vector<int> alphabet;
  for (int g = 1; g <= k; ++g) alphabet.push_back(g);
  for (int g = 1; g <= k; ++g) alphabet.push_back(-g);
  // level-synchronous BFS; tree-edge ties go to the smaller letter, then the
  // smaller source coset
  std::vector<int> frontier = {act.base};
  while (!frontier.empty()) {
    std::sort(frontier.begin(), frontier.end());
    std::vector<int> next;
    for (int l : alphabet)
      for (int i : frontier) {
        int j = act.apply(i, l);
        if (s.tree_parent[j] != -2) continue;
        s.tree_parent[j] = i;
        s.tree_letter[j] = l;
        s.coset_rep[j] = word_concat(s.coset_rep[i], Word{l});
        next.push_back(j);
      }
    frontier = std::move(next);
  }
  s.sg_index.assign(n, std::vector<int>(k, -1));
  for (int i = 0; i < n; ++i)
    for (int g = 1; g <= k; ++g) {
      int j = act.apply(i, g);
      bool tree = (s.tree_parent[j] == i && s.tree_letter[j] == g) ||
                  (s.tree_parent[i] == j && s.tree_letter[i] == -g);
      if (tree) continue;
      s.sg_index[i][g - 1] = (int)s.sg_words.size();
      Word w = word_concat(s.coset_rep[i], Word{g});
      s.sg_words.push_back(word_concat(w, word_inverse(s.coset_rep[j])));
    }
  return s;
}

long cusp_count(const CosetAction& act, const std::vector<Word>& parabolic) {
  std::vector<int> part(act.degree);
  std::iota(part.begin(), part.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (part[x] != x) x = part[x] = part[part[x]];
    return x;
  };
  for (const auto& w : parabolic)
    for (int i = 0; i < act.degree; ++i) {
      int a = find(i), b = find(act.apply_word(i, w));
      if (a != b) part[a] = b;
    }
  long orbits = 0;
  for (int i = 0; i < act.degree; ++i)
    if (find(i) == i) ++orbits;
  return orbits;
}

CuspInfo cusp_types(const Presentation& pres, const CosetAction& act) {
  if (pres.mats.empty())
    throw std::invalid_argument("cusp_types: presentation has no matrix images");
  const int n = act.degree;
  const int m = (int)pres.parabolic.size();
  std::vector<Mat2> pmat, pmat_inv;
  for (const auto& w : pres.parabolic) {
    pmat.push_back(pres.word_matrix(w));
    pmat_inv.push_back(mat2_inv(pmat.back()));
  }
  // orbit decomposition under the parabolic subgroup, BFS per orbit; tree
  // representatives carried as matrices so entry sizes stay tame
  std::vector<int> orbit(n, -1);
  std::vector<Mat2> rep(n, mat2_id(*pres.F));
  CuspInfo info;
  for (int start = 0; start < n; ++start) {
    if (orbit[start] != -1) continue;
    int id = (int)info.orbit_is_torus.size();
    std::deque<int> bfs = {start};
    orbit[start] = id;
    std::vector<int> members = {start};
    while (!bfs.empty()) {
      int i = bfs.front();
      bfs.pop_front();
      for (int p = 0; p < m; ++p)
        for (int dir = 0; dir < 2; ++dir) {
          const Word& w = pres.parabolic[p];
          int j = dir ? act.apply_word(i, word_inverse(w)) : act.apply_word(i, w);
          if (orbit[j] != -1) continue;
          orbit[j] = id;
          rep[j] = mat2_mul(rep[i], dir ? pmat_inv[p] : pmat[p]);
          bfs.push_back(j);
          members.push_back(j);
        }
    }
    // Schreier generators of the stabilizer of `start` inside the parabolic
    // subgroup; each is upper triangular, rotation-free iff diagonal-equal.
    bool torus = true;
    for (int i : members)
      for (int p = 0; p < m; ++p) {
        int j = act.apply_word(i, pres.parabolic[p]);
        Mat2 g = mat2_mul(mat2_mul(rep[i], pmat[p]), mat2_inv(rep[j]));
        if (!g[2].is_zero())
          throw std::logic_error("cusp_types: stabilizer element not upper triangular");
        if (g[0] != g[3]) torus = false;
      }
    info.orbit_is_torus.push_back(torus ? 1 : 0);
    if (torus) ++info.torus_cusps;
    ++info.cusps;
  }
  return info;
}

SparseZMatrix abelianized_rs(const Presentation& pres, const CosetAction& act) {
  SchreierData s = schreier(act);
  const int n = act.degree;
  SparseZMatrix M((int)pres.relators.size() * n, s.count());
  int row = 0;
  for (const auto& r : pres.relators)
    for (int i = 0; i < n; ++i, ++row) {
      int cur = i;
      for (int l : r) {
        if (l > 0) {
          int id = s.sg_index[cur][l - 1];
          if (id >= 0) M.add(row, id, 1);
          cur = act.apply(cur, l);
        } else {
          int prev = act.apply(cur, l);
          int id = s.sg_index[prev][-l - 1];
          if (id >= 0) M.add(row, id, -1);
          cur = prev;
        }
      }
      if (cur != i)
        throw std::logic_error("abelianized_rs: relator does not act trivially");
    }
  M.finalize();
  return M;
}

}  // namespace torhom
