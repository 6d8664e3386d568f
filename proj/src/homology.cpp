#include "torhom/homology.hpp"

#include <json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>
#include <stdexcept>

namespace torhom {

namespace {

// Relation matrices from coset rewriting repeat rows heavily (one row per
// relator per coset).  Dropping zero rows and duplicates (up to sign) leaves
// the row space, hence the cokernel, untouched and shrinks the elimination.
SparseZMatrix dedup_rows(const SparseZMatrix& M) {
  std::vector<std::vector<std::pair<int, mpz_class>>> rows(M.rows);
  for (const auto& [r, c, v] : M.entries) rows[r].push_back({c, v});
  std::set<std::vector<std::pair<int, mpz_class>>> seen;
  SparseZMatrix out(0, M.cols);
  for (auto& row : rows) {
    if (row.empty()) continue;
    std::sort(row.begin(), row.end());
    if (row[0].second < 0)
      for (auto& [c, v] : row) v = -v;
    if (!seen.insert(row).second) continue;
    int r = out.rows++;
    for (const auto& [c, v] : row) out.add(r, c, v);
  }
  out.finalize();
  return out;
}

}  // namespace

H1Decomposition h1_integral(const SparseZMatrix& relmat) {
  SnfResult s = snf(dedup_rows(relmat));
  H1Decomposition h;
  h.b1 = relmat.cols - s.rank;
  for (const auto& d : s.divisors)
    if (d > 1) h.torsion.push_back(d);
  return h;
}

const std::vector<unsigned long>& modl_default_primes() {
  static const std::vector<unsigned long> primes = {53, 59, 61, 67, 71, 73};
  return primes;
}

long h1_modl_upper_bound(const SparseZMatrix& relmat,
                         const std::vector<unsigned long>& primes) {
  if (primes.empty())
    throw std::invalid_argument("h1_modl_upper_bound: prime list is empty");
  SparseZMatrix M = dedup_rows(relmat);
  long best = -1;
  for (unsigned long ell : primes) {
    long bound = M.cols - rank_mod_l(M, ell);
    if (best < 0 || bound < best) best = bound;
  }
  return best;
}

long cuspidal_dim(long b1, long cusps) {
  if (cusps < 1) throw std::invalid_argument("cuspidal_dim: need at least one cusp");
  return std::max(b1 - cusps, 0L);
}

H1Report h1_report(const Presentation& pres, const QfIdeal& level,
                   const std::vector<unsigned long>& primes) {
  auto t0 = std::chrono::steady_clock::now();
  H1Report rep{level};
  rep.kind = pres.kind;
  CosetAction act = gamma0_action(pres, level);
  rep.index = act.degree;
  CuspInfo cusps = cusp_types(pres, act);
  rep.cusps = cusps.cusps;
  rep.torus_cusps = cusps.torus_cusps;
  SparseZMatrix relmat = abelianized_rs(pres, act);
  H1Decomposition h = h1_integral(relmat);
  rep.b1 = h.b1;
  rep.torsion = std::move(h.torsion);
  rep.modl_bound = h1_modl_upper_bound(relmat, primes);
  rep.cuspidal_floored = rep.b1 < rep.torus_cusps;
  rep.cuspidal = std::max(rep.b1 - rep.torus_cusps, 0L);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

ScanResult level_scan(int d, const std::string& kind, long min_norm, long max_norm,
                      int workers, const std::function<void(const H1Report&)>& on_done) {
  Presentation pres = bianchi_presentation(d, kind);
  std::vector<QfIdeal> levels;
  for (long n = std::max(min_norm, 1L); n <= max_norm; ++n)
    for (const auto& I : ideals_of_norm(*pres.F, n)) levels.push_back(I);
  ScanResult result;
  result.reports.reserve(levels.size());
  for (const auto& I : levels) result.reports.push_back(H1Report{I});
  const long count = (long)levels.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(std::max(workers, 1)) \
    if (workers > 1)
#endif
  for (long i = 0; i < count; ++i) {
    H1Report rep{levels[i]};
    try {
      rep = h1_report(pres, levels[i]);
    } catch (const std::exception& e) {
      rep.kind = kind;
      rep.error = e.what();
    }
#ifdef _OPENMP
#pragma omp critical(torhom_scan_done)
#endif
    {
      result.reports[i] = rep;
      if (on_done) on_done(result.reports[i]);
    }
  }
  result.histogram = cuspidal_histogram(result.reports);
  return result;
}

std::array<long, 7> cuspidal_histogram(const std::vector<H1Report>& reports) {
  std::array<long, 7> hist{};
  for (const auto& r : reports) {
    if (!r.ok()) continue;
    hist[std::min(r.cuspidal, 6L)] += 1;
  }
  return hist;
}

std::string h1_csv_header() {
  return "level,norm,index,b1,torsion,cusps,cuspidal_dim,modl_bound,seconds";
}

namespace {

std::string torsion_str(const std::vector<mpz_class>& torsion) {
  std::string s;
  for (size_t i = 0; i < torsion.size(); ++i) {
    if (i) s += ';';
    s += torsion[i].get_str();
  }
  return s;
}

std::string seconds_str(double seconds, bool with_seconds) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", with_seconds ? seconds : 0.0);
  return buf;
}

}  // namespace

std::string h1_csv_row(const H1Report& r, bool with_seconds) {
  std::string s = ideal_label(r.level);
  s += ',' + r.level.norm().get_str();
  s += ',' + std::to_string(r.index);
  s += ',' + std::to_string(r.b1);
  s += ',' + torsion_str(r.torsion);
  s += ',' + std::to_string(r.cusps);
  s += ',' + std::to_string(r.cuspidal);
  s += ',' + std::to_string(r.modl_bound);
  s += ',' + seconds_str(r.seconds, with_seconds);
  return s;
}

namespace {

nlohmann::json report_json_obj(const H1Report& r, bool with_seconds) {
  nlohmann::json j;
  j["level"] = ideal_label(r.level);
  j["norm"] = r.level.norm().get_str();
  j["kind"] = r.kind;
  if (!r.ok()) {
    j["error"] = r.error;
    return j;
  }
  j["index"] = r.index;
  j["b1"] = r.b1;
  std::vector<std::string> tors;
  for (const auto& t : r.torsion) tors.push_back(t.get_str());
  j["torsion"] = tors;
  j["cusps"] = r.cusps;
  j["torus_cusps"] = r.torus_cusps;
  j["cuspidal_dim"] = r.cuspidal;
  if (r.cuspidal_floored) j["cuspidal_floored"] = true;
  j["modl_bound"] = r.modl_bound;
  j["seconds"] = with_seconds ? r.seconds : 0.0;
  return j;
}

}  // namespace

std::string h1_report_json(const H1Report& r, bool with_seconds) {
  return report_json_obj(r, with_seconds).dump(2);
}

std::string scan_json(const ScanResult& s, bool with_seconds) {
  nlohmann::json j;
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& r : s.reports) reports.push_back(report_json_obj(r, with_seconds));
  j["reports"] = reports;
  j["histogram"] = s.histogram;
  return j.dump(2);
}

double log_torsion_order(const std::vector<mpz_class>& torsion) {
  double sum = 0;
  for (const auto& t : torsion) sum += log_of_mpz(t);
  return sum;
}

double torsion_growth_limit() { return 1.0 / (6.0 * std::numbers::pi); }

std::vector<GrowthRow> growth_report(const std::vector<GrowthRecord>& records) {
  std::vector<GrowthRow> rows;
  double prev = 0;
  for (const auto& rec : records) {
    if (rec.volume <= prev)
      throw std::invalid_argument("growth_report: volumes must be positive and increasing");
    prev = rec.volume;
    GrowthRow row;
    row.record = rec;
    row.ratio = rec.log_torsion / rec.volume;
    row.deviation = std::abs(row.ratio - torsion_growth_limit());
    row.betti_diag = (double)rec.betti * std::log(rec.volume) / rec.volume;
    rows.push_back(row);
  }
  return rows;
}

double small_eigenvalue_sum(const std::vector<double>& eigenvalues, double volume,
                            double threshold) {
  if (volume <= 0) throw std::invalid_argument("small_eigenvalue_sum: volume must be positive");
  double sum = 0;
  for (double lam : eigenvalues) {
    if (lam < 0)
      throw std::invalid_argument("small_eigenvalue_sum: negative eigenvalue");
    if (lam > 0 && lam <= threshold) sum += std::abs(std::log(lam));
  }
  return sum / volume;
}

double weak_threshold(double volume, double delta) {
  if (volume <= 0) throw std::invalid_argument("weak_threshold: volume must be positive");
  return std::pow(volume, -delta);
}

}  // namespace torhom
