#include "torhom/equivariant.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

namespace torhom {

int OrbitCellComplex::find(const std::string& id) const {
  for (size_t i = 0; i < cells.size(); ++i)
    if (cells[i].id == id) return (int)i;
  return -1;
}

void OrbitCellComplex::validate() const {
  if (dimension != 2 && dimension != 3)
    throw std::invalid_argument("complex dimension must be 2 or 3");
  std::set<std::string> seen;
  for (const CellOrbit& cell : cells) {
    if (cell.id.empty())
      throw std::invalid_argument("cell orbit with empty id");
    if (!seen.insert(cell.id).second)
      throw std::invalid_argument("duplicate cell id " + cell.id);
    if (cell.dim < 0 || cell.dim > dimension)
      throw std::invalid_argument("cell " + cell.id + " has dimension " +
                                  std::to_string(cell.dim) +
                                  " outside the complex");
    if (cell.stabilizer_order < 1)
      throw std::invalid_argument("cell " + cell.id +
                                  " has nonpositive stabilizer order");
    for (const CellOrbit::Incidence& inc : cell.boundary) {
      int fi = find(inc.cell);
      if (fi < 0)
        throw std::invalid_argument("boundary of " + cell.id +
                                    " references unknown cell " + inc.cell);
      if (cells[fi].dim != cell.dim - 1)
        throw std::invalid_argument("boundary of " + cell.id +
                                    " skips a dimension at " + inc.cell);
      if (inc.sign != 1 && inc.sign != -1)
        throw std::invalid_argument("boundary sign of " + cell.id +
                                    " must be +-1");
    }
  }
}

OrbitCellComplex complex_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  OrbitCellComplex complex;
  complex.dimension = j.at("dim").get<int>();
  complex.generators = j.at("generators").get<std::vector<std::string>>();
  for (const auto& jc : j.at("cells")) {
    CellOrbit cell;
    cell.id = jc.at("id").get<std::string>();
    cell.dim = jc.at("dim").get<int>();
    cell.stabilizer_order = jc.value("stabilizer_order", 1L);
    if (jc.contains("stabilizers"))
      cell.stabilizers = jc.at("stabilizers").get<std::vector<std::string>>();
    if (jc.contains("boundary"))
      for (const auto& jb : jc.at("boundary")) {
        CellOrbit::Incidence inc;
        inc.cell = jb.at("cell").get<std::string>();
        inc.sign = jb.at("sign").get<int>();
        inc.elt = jb.value("elt", std::string());
        cell.boundary.push_back(std::move(inc));
      }
    complex.cells.push_back(std::move(cell));
  }
  complex.validate();
  return complex;
}

std::string complex_to_json(const OrbitCellComplex& complex) {
  nlohmann::json j;
  j["dim"] = complex.dimension;
  j["generators"] = complex.generators;
  j["cells"] = nlohmann::json::array();
  for (const CellOrbit& cell : complex.cells) {
    nlohmann::json jc;
    jc["id"] = cell.id;
    jc["dim"] = cell.dim;
    jc["stabilizer_order"] = cell.stabilizer_order;
    jc["stabilizers"] = cell.stabilizers;
    jc["boundary"] = nlohmann::json::array();
    for (const CellOrbit::Incidence& inc : cell.boundary)
      jc["boundary"].push_back(
          {{"cell", inc.cell}, {"sign", inc.sign}, {"elt", inc.elt}});
    j["cells"].push_back(std::move(jc));
  }
  return j.dump(2);
}

namespace {

std::vector<int> word_perm(const CosetAction& act, const Word& w) {
  std::vector<int> p(act.degree);
  for (int i = 0; i < act.degree; ++i) p[i] = act.apply_word(i, w);
  return p;
}

long perm_order(const std::vector<int>& p) {
  const int n = (int)p.size();
  std::vector<char> seen(n, 0);
  long ord = 1;
  for (int i = 0; i < n; ++i) {
    if (seen[i]) continue;
    long len = 0;
    for (int j = i; !seen[j]; j = p[j]) {
      seen[j] = 1;
      ++len;
    }
    ord = std::lcm(ord, len);
  }
  return ord;
}

// Orbits of the subgroup generated by the given permutations, listed by
// smallest member and sorted internally.
std::vector<std::vector<int>> coset_orbits(
    int degree, const std::vector<std::vector<int>>& gens) {
  std::vector<int> orbit_of(degree, -1);
  std::vector<std::vector<int>> orbits;
  for (int c0 = 0; c0 < degree; ++c0) {
    if (orbit_of[c0] >= 0) continue;
    int id = (int)orbits.size();
    std::vector<int> orbit, stack{c0};
    orbit_of[c0] = id;
    while (!stack.empty()) {
      int c = stack.back();
      stack.pop_back();
      orbit.push_back(c);
      for (const auto& p : gens)
        if (orbit_of[p[c]] < 0) {
          orbit_of[p[c]] = id;
          stack.push_back(p[c]);
        }
    }
    std::sort(orbit.begin(), orbit.end());
    orbits.push_back(std::move(orbit));
  }
  return orbits;
}

void check_generators(const OrbitCellComplex& complex,
                      const CosetAction& action) {
  if (action.gen_names != complex.generators)
    throw std::invalid_argument(
        "coset action generators do not match the complex");
}

}  // namespace

std::vector<CochainLevel> assemble(const OrbitCellComplex& complex,
                                   const CosetAction& action) {
  complex.validate();
  check_generators(complex, action);
  const int n = action.degree;

  std::vector<CochainLevel> levels(complex.dimension + 1);
  for (size_t i = 0; i < levels.size(); ++i) levels[i].degree = (int)i;

  // Stabilizer orbits on the cosets give the fixed-sublattice basis of each
  // cell orbit; remember where each cell's block starts within its level.
  std::vector<std::vector<std::vector<int>>> orbits(complex.cells.size());
  std::vector<int> first(complex.cells.size(), 0);
  for (size_t ci = 0; ci < complex.cells.size(); ++ci) {
    const CellOrbit& cell = complex.cells[ci];
    std::vector<std::vector<int>> stab;
    for (const std::string& text : cell.stabilizers) {
      std::vector<int> p =
          word_perm(action, parse_word(text, complex.generators));
      if (cell.stabilizer_order % perm_order(p) != 0)
        throw std::invalid_argument(
            "stabilizer word " + text + " of " + cell.id +
            " has permutation order not dividing " +
            std::to_string(cell.stabilizer_order));
      stab.push_back(std::move(p));
    }
    orbits[ci] = coset_orbits(n, stab);
    CochainLevel& level = levels[cell.dim];
    first[ci] = (int)level.basis.size();
    for (const std::vector<int>& orbit : orbits[ci]) {
      level.basis.push_back(FixedVector{(int)ci, orbit});
      level.gram.push_back(mpq_class((long)orbit.size()) /
                           cell.stabilizer_order);
    }
  }

  // Coboundaries.  The image of an indicator basis vector under one incidence
  // (face sigma, sign, g) is sign times the indicator of orbit * g^-1; the
  // accumulated image must be constant on every stabilizer orbit of the
  // higher cell, which is what makes the invariant matrix well defined.
  for (int i = 0; i + 1 <= complex.dimension; ++i) {
    CochainLevel& lo = levels[i];
    CochainLevel& hi = levels[i + 1];
    lo.delta.assign(hi.basis.size(), ZVec(lo.basis.size(), 0));
    for (size_t ti = 0; ti < complex.cells.size(); ++ti) {
      const CellOrbit& cell = complex.cells[ti];
      if (cell.dim != i + 1) continue;
      std::map<int, ZVec> image;  // basis column -> vector on cosets
      for (const CellOrbit::Incidence& inc : cell.boundary) {
        int fi = complex.find(inc.cell);
        std::vector<int> p = word_perm(
            action,
            word_inverse(parse_word(inc.elt, complex.generators)));
        for (size_t k = 0; k < orbits[fi].size(); ++k) {
          ZVec& acc =
              image.try_emplace(first[fi] + (int)k, ZVec(n, 0)).first->second;
          for (int c : orbits[fi][k]) acc[p[c]] += inc.sign;
        }
      }
      for (size_t r = 0; r < orbits[ti].size(); ++r) {
        const std::vector<int>& orbit = orbits[ti][r];
        for (const auto& [col, acc] : image) {
          const mpz_class& val = acc[orbit[0]];
          for (int c : orbit)
            if (acc[c] != val)
              throw std::runtime_error(
                  "malformed complex: coboundary of " +
                  complex.cells[lo.basis[col].cell].id +
                  " is not constant on a stabilizer orbit of " + cell.id);
          lo.delta[first[ti] + r][col] = val;
        }
      }
    }
  }

  // delta after delta must vanish identically.
  for (int i = 0; i + 2 <= complex.dimension; ++i) {
    const ZMat& a = levels[i].delta;
    const ZMat& b = levels[i + 1].delta;
    for (size_t r = 0; r < b.size(); ++r)
      for (size_t c = 0; c < levels[i].basis.size(); ++c) {
        mpz_class acc = 0;
        for (size_t k = 0; k < a.size(); ++k) acc += b[r][k] * a[k][c];
        if (acc != 0)
          throw std::runtime_error(
              "malformed complex: delta.delta != 0 between " +
              complex.cells[levels[i + 2].basis[r].cell].id + " and " +
              complex.cells[levels[i].basis[c].cell].id);
      }
  }
  return levels;
}

namespace {

QMat gram_matrix(const CochainLevel& level) {
  const size_t n = level.gram.size();
  QMat g(n, QVec(n, 0));
  for (size_t i = 0; i < n; ++i) g[i][i] = level.gram[i];
  return g;
}

QMat to_q(const ZMat& m) {
  QMat out(m.size());
  for (size_t i = 0; i < m.size(); ++i) {
    out[i].reserve(m[i].size());
    for (const mpz_class& v : m[i]) out[i].emplace_back(v);
  }
  return out;
}

}  // namespace

QMat laplacian(const std::vector<CochainLevel>& levels, int i) {
  if (i < 0 || i >= (int)levels.size())
    throw std::out_of_range("laplacian degree out of range");
  const CochainLevel& level = levels[i];
  const size_t n = level.basis.size();
  QMat lap(n, QVec(n, 0));
  if (!level.delta.empty()) {
    // up part: G_i^-1 delta^T G_{i+1} delta
    const ZMat& d = level.delta;
    const std::vector<mpq_class>& gh = levels[i + 1].gram;
    for (size_t a = 0; a < n; ++a)
      for (size_t b = 0; b < n; ++b) {
        mpq_class acc = 0;
        for (size_t r = 0; r < d.size(); ++r)
          if (d[r][a] != 0 && d[r][b] != 0)
            acc += gh[r] * mpq_class(d[r][a] * d[r][b]);
        lap[a][b] += acc / level.gram[a];
      }
  }
  if (i > 0 && !levels[i - 1].delta.empty()) {
    // down part: delta (G_{i-1}^-1 delta^T G_i)
    const ZMat& d = levels[i - 1].delta;  // rows indexed by this level
    const std::vector<mpq_class>& gl = levels[i - 1].gram;
    for (size_t a = 0; a < n; ++a)
      for (size_t b = 0; b < n; ++b) {
        mpq_class acc = 0;
        for (size_t c = 0; c < gl.size(); ++c)
          if (d[a][c] != 0 && d[b][c] != 0)
            acc += mpq_class(d[a][c] * d[b][c]) / gl[c];
        lap[a][b] += acc * level.gram[b];
      }
  }
  return lap;
}

RegulatorReport regulators(const std::vector<CochainLevel>& levels, int i) {
  if (i < 0 || i >= (int)levels.size())
    throw std::out_of_range("regulator degree out of range");
  const CochainLevel& level = levels[i];
  const int n = (int)level.basis.size();
  RegulatorReport rep;
  rep.degree = i;

  ZMat up = level.delta;                                  // may be empty
  ZMat down = i > 0 ? levels[i - 1].delta : ZMat{};       // rows = this level
  int rank_up = up.empty() ? 0 : rank_q(to_q(up));
  int rank_down = down.empty() ? 0 : rank_q(to_q(down));
  rep.betti = (n - rank_up) - rank_down;
  if (rep.betti < 0)
    throw std::logic_error("negative Betti number: inconsistent levels");
  if (rep.betti == 0) {
    rep.trivial = true;
    return rep;
  }

  const QMat gram = gram_matrix(level);

  // Harmonic vectors are the cocycles orthogonal to the coboundaries: kernel
  // of delta_i stacked over delta_{i-1}^T G_i.
  QMat harmonic_system;
  for (const ZVec& row : up) {
    QVec q(n);
    for (int j = 0; j < n; ++j) q[j] = row[j];
    harmonic_system.push_back(std::move(q));
  }
  size_t down_cols = down.empty() ? 0 : down[0].size();
  for (size_t c = 0; c < down_cols; ++c) {
    QVec q(n);
    for (int a = 0; a < n; ++a) q[a] = mpq_class(down[a][c]) * level.gram[a];
    harmonic_system.push_back(std::move(q));
  }
  if (harmonic_system.empty()) harmonic_system.push_back(QVec(n, 0));
  std::vector<ZVec> harmonic = saturated_kernel_q(harmonic_system);
  if ((long)harmonic.size() != rep.betti)
    throw std::logic_error("harmonic kernel dimension disagrees with Betti");
  QMat hq(harmonic.size());
  for (size_t r = 0; r < harmonic.size(); ++r) {
    hq[r].reserve(n);
    for (const mpz_class& v : harmonic[r]) hq[r].emplace_back(v);
  }
  LatticeVolume prim = gram_log_volume(hq, gram);
  rep.log_r_tilde = prim.log_volume;
  rep.gram_det_r_tilde = prim.gram_det;

  // Integral cocycle basis, projected orthogonally onto the harmonic
  // subspace; coboundaries project to zero and drop out of the lattice.
  SparseZMatrix up_sparse(up.empty() ? 0 : (int)up.size(), n);
  for (size_t r = 0; r < up.size(); ++r)
    for (int c = 0; c < n; ++c)
      if (up[r][c] != 0) up_sparse.add((int)r, c, up[r][c]);
  std::vector<ZVec> cocycles = saturated_kernel(up_sparse);

  QMat cocq(cocycles.size());
  for (size_t r = 0; r < cocycles.size(); ++r) {
    cocq[r].reserve(n);
    for (const mpz_class& v : cocycles[r]) cocq[r].emplace_back(v);
  }
  // On a cocycle, subtracting the coboundary shadow leaves exactly the
  // component along the harmonic space, so project onto the small harmonic
  // basis rather than against the rank_down-dimensional coboundary span.
  QMat shadows = project_orthogonal_rows(cocq, hq, gram);
  QMat projected;
  mpz_class denom = 1;
  for (QVec& h : shadows) {
    bool zero = true;
    for (const mpq_class& x : h) {
      if (x != 0) zero = false;
      mpz_lcm(denom.get_mpz_t(), denom.get_mpz_t(), x.get_den().get_mpz_t());
    }
    if (!zero) projected.push_back(std::move(h));
  }
  ZMat scaled(projected.size(), ZVec(n));
  for (size_t r = 0; r < projected.size(); ++r)
    for (int j = 0; j < n; ++j) {
      mpq_class t = projected[r][j] * denom;
      scaled[r][j] = t.get_num();
    }
  QMat basis;
  for (ZVec& row : hnf_rows(scaled)) {
    bool zero = std::all_of(row.begin(), row.end(),
                            [](const mpz_class& v) { return v == 0; });
    if (zero) continue;
    QVec q(n);
    for (int j = 0; j < n; ++j) {
      q[j] = row[j];
      q[j] /= denom;
    }
    basis.push_back(std::move(q));
  }
  if ((long)basis.size() != rep.betti)
    throw std::logic_error("projected lattice rank disagrees with Betti");
  LatticeVolume proj = gram_log_volume(basis, gram);
  rep.log_r = proj.log_volume;
  rep.gram_det_r = proj.gram_det;
  return rep;
}

H1Decomposition torsion_of_cover(const OrbitCellComplex& complex,
                                 const CosetAction& action) {
  complex.validate();
  check_generators(complex, action);
  for (const CellOrbit& cell : complex.cells)
    if (cell.stabilizer_order != 1)
      throw std::invalid_argument(
          "orbifold torsion unsupported: cell " + cell.id +
          " has stabilizer order " + std::to_string(cell.stabilizer_order));

  const int n = action.degree;
  std::vector<std::vector<int>> of_dim(complex.dimension + 1);
  std::vector<int> pos(complex.cells.size(), 0);
  for (size_t ci = 0; ci < complex.cells.size(); ++ci) {
    pos[ci] = (int)of_dim[complex.cells[ci].dim].size();
    of_dim[complex.cells[ci].dim].push_back((int)ci);
  }

  // Chain boundary with one row per cover cell of the given dimension; the
  // cover cell over coset c and orbit sigma has faces (face, c * g).
  auto boundary = [&](int d) {
    SparseZMatrix b((int)of_dim[d].size() * n, (int)of_dim[d - 1].size() * n);
    for (int ci : of_dim[d]) {
      const CellOrbit& cell = complex.cells[ci];
      for (const CellOrbit::Incidence& inc : cell.boundary) {
        int fi = complex.find(inc.cell);
        Word w = parse_word(inc.elt, complex.generators);
        for (int c = 0; c < n; ++c)
          b.add(pos[ci] * n + c, pos[fi] * n + action.apply_word(c, w),
                inc.sign);
      }
    }
    return b;
  };

  SparseZMatrix d1 = boundary(1);
  SparseZMatrix d2 = boundary(2);
  H1Decomposition h = h1_integral(d2);
  h.b1 -= snf(d1).rank;
  if (h.b1 < 0)
    throw std::logic_error("negative Betti number: inconsistent boundaries");
  return h;
}

DualCycle dual_two_cycle(const std::vector<CochainLevel>& levels,
                         const QVec& omega) {
  const CochainLevel& level = levels.at(1);
  if (omega.size() != level.basis.size())
    throw std::invalid_argument(
        "coefficient count does not match the 1-cochain basis");
  DualCycle cycle;
  cycle.coefficients = omega;
  cycle.closed = true;
  for (const ZVec& row : level.delta) {
    mpq_class acc = 0;
    for (size_t j = 0; j < omega.size(); ++j)
      if (row[j] != 0) acc += row[j] * omega[j];
    if (acc != 0) {
      cycle.closed = false;
      break;
    }
  }
  return cycle;
}

double gt_upper_bound(const DualCycle& cycle, long cells_per_dual) {
  if (!cycle.closed)
    throw std::invalid_argument("dual cycle is not closed");
  if (cells_per_dual < 0)
    throw std::invalid_argument("cells_per_dual must be nonnegative");
  mpq_class total = 0;
  for (const mpq_class& c : cycle.coefficients) total += abs(c);
  total *= cells_per_dual;
  return total.get_d();
}

}  // namespace torhom
