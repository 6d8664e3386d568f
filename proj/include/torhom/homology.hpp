// Homology pipelines over coset actions: integral H_1 with torsion, mod-l
// rank upper bounds, cuspidal dimensions, batch level scans with histograms,
// and torsion-growth / small-eigenvalue reports.
#pragma once

#include "torhom/exactla.hpp"
#include "torhom/subgroups.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace torhom {

// b1 = cols - rank and the nontrivial cyclic divisors of the cokernel.
struct H1Decomposition {
  long b1 = 0;
  std::vector<mpz_class> torsion;
};
H1Decomposition h1_integral(const SparseZMatrix& relmat);

// The six primes between 50 and 100 used for the default rank bounds.
const std::vector<unsigned long>& modl_default_primes();

// min over l of (cols - rank over F_l); an upper bound for b1 by universal
// coefficients.  Composite moduli are rejected.
long h1_modl_upper_bound(const SparseZMatrix& relmat,
                         const std::vector<unsigned long>& primes = modl_default_primes());

// max(b1 - cusps, 0); requires at least one cusp.
long cuspidal_dim(long b1, long cusps);

// The cuspidal dimension reported here subtracts only the torus cusps from
// b1: a torus cusp feeds one Eisenstein class into H^1 ("half lives, half
// dies"), while a cusp whose cross-section carries a rotation (always the
// case for the units of d = 1, 3) has b1 = 0 and feeds nothing.
struct H1Report {
  QfIdeal level;
  std::string kind;                  // ambient group the numbers refer to
  long index = 0;
  long b1 = 0;
  std::vector<mpz_class> torsion;
  long cusps = 0;
  long torus_cusps = 0;
  long cuspidal = 0;                 // max(b1 - torus_cusps, 0)
  bool cuspidal_floored = false;     // b1 - torus_cusps was negative
  long modl_bound = 0;
  double seconds = 0;
  std::string error;                 // nonempty when the level failed
  bool ok() const { return error.empty(); }
};

// Full pipeline for one level: coset action, cusps, relation matrix, SNF,
// mod-l bound.
H1Report h1_report(const Presentation& pres, const QfIdeal& level,
                   const std::vector<unsigned long>& primes = modl_default_primes());

struct ScanResult {
  std::vector<H1Report> reports;     // by level norm, then ideal HNF key
  std::array<long, 7> histogram{};   // cuspidal dims 0..5 and >= 6
};

// One report per ideal with min_norm <= norm <= max_norm (conjugate ideals
// are distinct levels).  Failures are recorded per level and the scan keeps
// going.  `workers` > 1 distributes levels across OpenMP threads; `on_done`
// (may be empty) is invoked once per finished level under a lock.
ScanResult level_scan(int d, const std::string& kind, long min_norm, long max_norm,
                      int workers = 1,
                      const std::function<void(const H1Report&)>& on_done = {});

std::array<long, 7> cuspidal_histogram(const std::vector<H1Report>& reports);

// CSV/JSON emission shared by the command-line front end and the tests.
std::string h1_csv_header();
std::string h1_csv_row(const H1Report& r, bool with_seconds);
std::string h1_report_json(const H1Report& r, bool with_seconds);
std::string scan_json(const ScanResult& s, bool with_seconds);

// log of the torsion order (product of the divisors), safe far past double
// range.
double log_torsion_order(const std::vector<mpz_class>& torsion);

// Conjectural limit of log|tors| / vol for closed arithmetic 3-manifolds.
double torsion_growth_limit();       // 1/(6*pi)

struct GrowthRecord {
  double volume = 0;                 // index times base-orbifold volume
  double log_torsion = 0;
  long betti = 0;
};

struct GrowthRow {
  GrowthRecord record;
  double ratio = 0;                  // log_torsion / volume
  double deviation = 0;              // |ratio - 1/(6 pi)|
  double betti_diag = 0;             // betti * log(volume) / volume
};

// Requires strictly increasing volumes.
std::vector<GrowthRow> growth_report(const std::vector<GrowthRecord>& records);

// (1/volume) * sum of |log lambda| over eigenvalues 0 < lambda <= threshold.
// Negative eigenvalues are rejected; zeros are skipped.
double small_eigenvalue_sum(const std::vector<double>& eigenvalues, double volume,
                            double threshold);

// Threshold for the weak spectral condition: volume^(-delta).
double weak_threshold(double volume, double delta);

}  // namespace torhom
